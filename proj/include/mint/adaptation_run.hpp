#pragma once

#include "mint/embedding_metrics.hpp"
#include "mint/mint_engine.hpp"
#include "mint/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mint {

struct BatchRecord {
  std::size_t index = 0;
  std::size_t size = 0;
  double severity = 0.0;
  std::string tag;
  BatchDiagnostics diagnostics;
  std::optional<double> zero_shot_accuracy;
  std::optional<double> adapted_accuracy;
};

struct AdaptationResult {
  std::size_t n_samples = 0;
  std::size_t n_batches = 0;
  std::optional<double> zero_shot_accuracy;
  std::optional<double> adapted_accuracy;
  double mean_objective = 0.0;
  /// Frozen-weight embeddings with zero-shot pseudo-labels vs adapted
  /// embeddings with final predictions.
  VarianceReport pre_pl;
  VarianceReport post_pl;
  /// Same embeddings under ground-truth labels, when every batch has them.
  std::optional<VarianceReport> pre_gt;
  std::optional<VarianceReport> post_gt;
  std::vector<BatchRecord> batches;
};

/// Runs the online loop over `batches` in order. A batch's gt_labels may be
/// empty when ground truth is unknown; accuracies are then omitted.
AdaptationResult run_adaptation(const std::vector<LatentBatch>& batches, const NormWeights& w0,
                                const TextEmbeddings& text, const MintConfig& config);

/// A single-corruption synthetic stream with its text embeddings.
struct SyntheticScenario {
  LatentParams params;
  double contamination = 0.3;
  std::size_t n_batches = 500;
  std::size_t batch_size = 20;
  std::uint64_t seed = 0;
};

struct ScenarioData {
  std::vector<LatentBatch> batches;
  TextEmbeddings text;
  NormWeights w0;
};

/// Text embeddings come from child stream 0 of the seed and the batches from
/// child stream 1, so changing the batch count leaves the text unchanged.
ScenarioData build_scenario(const SyntheticScenario& scenario);

/// Concatenates the samples of `batches` and splits them into consecutive
/// batches of `batch_size` (the last one may be shorter).
std::vector<LatentBatch> rechunk(const std::vector<LatentBatch>& batches, std::size_t batch_size);

}  // namespace mint
