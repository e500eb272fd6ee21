#pragma once

#include "mint/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mint {

enum class LabelMode {
  kUniform,   // i.i.d. fair coin per sample (streaming)
  kBalanced,  // exactly floor(B/2) of class 0, rest class 1, shuffled (theory runs)
};

LatentBatch sample_latents(const LatentParams& p, std::size_t batch_size, std::uint64_t seed,
                           LabelMode mode = LabelMode::kUniform);

/// z_i = (v_i * w) / ||v_i * w||. Throws "annihilated sample" when a product row
/// has norm below 1e-30.
Matrix embed_rows(const Matrix& latents, const Vector& w);
EmbeddingSet embed(const LatentBatch& batch, const NormWeights& w);

/// Two-class text rows t_0 = normalize([-mu; eps*eta_0]), t_1 = normalize([+mu; eps*eta_1]).
/// eta_c are independent uniformly-random unit vectors over the non-class dimensions.
TextEmbeddings make_text_embeddings(const LatentParams& p, double contamination, std::uint64_t seed);

struct ScheduleEntry {
  LatentParams params;
  std::size_t n_batches = 0;
  std::size_t batch_size = 0;
  std::string tag;
};

enum class ScheduleOrder { kSequential, kInterleaved };

/// Ordered batch source for online adaptation. Batch k draws from the child
/// stream split(k) of the seed, so the sequence is reproducible.
class BatchStream {
 public:
  BatchStream(std::vector<ScheduleEntry> schedule, std::uint64_t seed,
              ScheduleOrder order = ScheduleOrder::kSequential);

  std::optional<LatentBatch> next();
  std::size_t total_batches() const;
  std::vector<LatentBatch> collect();

 private:
  std::vector<ScheduleEntry> schedule_;
  std::vector<std::size_t> emitted_;
  std::uint64_t seed_;
  ScheduleOrder order_;
  std::size_t cursor_ = 0;
  std::size_t produced_ = 0;
};

}  // namespace mint
