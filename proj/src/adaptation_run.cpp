#include "mint/adaptation_run.hpp"

#include "mint/rng.hpp"
#include "mint/synthetic_world.hpp"

#include <algorithm>

namespace mint {
namespace {

double accuracy_of(const std::vector<int>& predicted, const std::vector<int>& truth) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace

AdaptationResult run_adaptation(const std::vector<LatentBatch>& batches, const NormWeights& w0,
                                const TextEmbeddings& text, const MintConfig& config) {
  if (batches.empty()) throw Error("empty stream");
  std::size_t n = 0;
  bool labelled = true;
  for (const auto& b : batches) {
    if (b.size() == 0) throw Error("empty batch");
    n += b.size();
    labelled = labelled && b.gt_labels.size() == b.size();
  }
  const auto dim = static_cast<Eigen::Index>(w0.w.size());

  MintState state(w0, text, config);
  AdaptationResult result;
  result.n_samples = n;
  result.n_batches = batches.size();

  Matrix pre(static_cast<Eigen::Index>(n), dim);
  Matrix post(static_cast<Eigen::Index>(n), dim);
  std::vector<int> zero_shot, final_labels, truth;
  zero_shot.reserve(n);
  final_labels.reserve(n);
  if (labelled) truth.reserve(n);

  Eigen::Index row = 0;
  double objective_sum = 0.0;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    const LatentBatch& batch = batches[k];
    BatchOutcome outcome = state.process_batch(batch.latents);
    const auto rows = static_cast<Eigen::Index>(batch.size());
    pre.middleRows(row, rows) = outcome.initial_embeddings;
    post.middleRows(row, rows) = outcome.adapted_embeddings;
    row += rows;
    zero_shot.insert(zero_shot.end(), outcome.zero_shot.begin(), outcome.zero_shot.end());
    final_labels.insert(final_labels.end(), outcome.predictions.begin(), outcome.predictions.end());

    BatchRecord record;
    record.index = k;
    record.size = batch.size();
    record.severity = batch.severity;
    record.tag = batch.tag;
    record.diagnostics = outcome.diagnostics;
    if (labelled) {
      truth.insert(truth.end(), batch.gt_labels.begin(), batch.gt_labels.end());
      record.zero_shot_accuracy = accuracy_of(outcome.zero_shot, batch.gt_labels);
      record.adapted_accuracy = accuracy_of(outcome.predictions, batch.gt_labels);
    }
    objective_sum += outcome.diagnostics.objective;
    result.batches.push_back(std::move(record));
  }

  const int n_classes = text.n_classes();
  result.mean_objective = objective_sum / static_cast<double>(batches.size());
  result.pre_pl = compute_variance_report(pre, zero_shot, n_classes);
  result.post_pl = compute_variance_report(post, final_labels, n_classes);
  if (labelled) {
    result.zero_shot_accuracy = accuracy_of(zero_shot, truth);
    result.adapted_accuracy = accuracy_of(final_labels, truth);
    result.pre_gt = compute_variance_report(pre, truth, n_classes);
    result.post_gt = compute_variance_report(post, truth, n_classes);
  }
  return result;
}

ScenarioData build_scenario(const SyntheticScenario& scenario) {
  scenario.params.validate();
  const RandomStream root(scenario.seed);
  const RandomStream text_stream = root.split(0);
  const RandomStream batch_stream = root.split(1);
  ScenarioData data;
  data.text = make_text_embeddings(scenario.params, scenario.contamination,
                                   text_stream.seed() ^ text_stream.stream_id());
  BatchStream stream({ScheduleEntry{scenario.params, scenario.n_batches, scenario.batch_size,
                                    "synthetic"}},
                     batch_stream.seed() ^ batch_stream.stream_id());
  data.batches = stream.collect();
  data.w0 = NormWeights::ones(scenario.params.layout());
  return data;
}

std::vector<LatentBatch> rechunk(const std::vector<LatentBatch>& batches, std::size_t batch_size) {
  if (batch_size < 1) throw Error("batch size must be positive", ErrorKind::kUsage);
  std::vector<LatentBatch> out;
  LatentBatch current;
  std::size_t filled = 0;
  auto start = [&](const LatentBatch& like) {
    current = LatentBatch{};
    current.latents.resize(static_cast<Eigen::Index>(batch_size), like.latents.cols());
    current.severity = like.severity;
    current.tag = like.tag;
    filled = 0;
  };
  auto flush = [&] {
    current.latents.conservativeResize(static_cast<Eigen::Index>(filled), current.latents.cols());
    out.push_back(std::move(current));
    filled = 0;
  };
  bool open = false;
  for (const auto& b : batches) {
    const bool labelled = b.gt_labels.size() == b.size();
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!open) {
        start(b);
        open = true;
      }
      current.latents.row(static_cast<Eigen::Index>(filled)) = b.latents.row(static_cast<Eigen::Index>(i));
      if (labelled) current.gt_labels.push_back(b.gt_labels[i]);
      ++filled;
      if (filled == batch_size) {
        flush();
        open = false;
      }
    }
  }
  if (open && filled > 0) flush();
  return out;
}

}  // namespace mint
