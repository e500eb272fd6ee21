#pragma once

#include "mint/embedding_metrics.hpp"
#include "mint/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mint {

/// Population covariances between pseudo-labels and the latent model.
struct TheoryCov {
  double e_yhat = 0.5;   // E[yhat], strictly inside (0, 1)
  double sigma_yy = 0.25;  // Cov(y, yhat)
  Vector sigma_irr;      // Cov(v_irr, yhat)
  Vector sigma_noise;    // Cov(v_noise, yhat)

  void validate(const LatentParams& p) const;
};

/// Pseudo-labels equal to the ground truth.
TheoryCov perfect_pseudo_labels(const LatentParams& p);
/// Labels flipped independently of the latents with probability p_flip:
/// Cov(y, yhat) = (1 - 2 p_flip) / 4 and no covariance with irr/noise features.
TheoryCov flip_channel_cov(const LatentParams& p, double p_flip);

struct GtLimits {
  double inter = 0.0;
  double intra = 0.0;
};

/// Large-sample GT-inter and GT-intra at w = 1.
GtLimits gt_limits(const LatentParams& p);

/// True iff ||delta||^2 >= (d_noise / d_irr) * ||mu||^2, the regime where GT-intra
/// also shrinks with severity.
bool intra_decrease_condition(const LatentParams& p);

/// Large-sample PL-inter variance for arbitrary head weights.
double pl_inter_limit(const LatentParams& p, const NormWeights& w, const TheoryCov& t);

struct PlInterGradients {
  Vector cls;
  Vector shift;
};

/// Gradients of pl_inter_limit with respect to the cls and shift weight
/// segments, evaluated at w = 1.
PlInterGradients pl_inter_gradients(const LatentParams& p, const TheoryCov& t);

/// Maps a sampled shard (latents, embeddings, shard index) to pseudo-labels.
using PseudoLabeler =
    std::function<std::vector<int>(const LatentBatch& batch, const Matrix& embeddings, std::uint64_t shard)>;

PseudoLabeler truth_labeler();
PseudoLabeler flip_labeler(double p_flip, std::uint64_t seed);

struct McMeasurement {
  VarianceReport gt_report;
  VarianceReport pl_report;
  double accuracy = 0.0;  // fraction of pseudo-labels equal to the ground truth
  std::size_t n = 0;
};

/// Draws n balanced latents, embeds them through w and measures variance
/// reports under ground-truth and pseudo-labels. Sampling is sharded in
/// fixed-size blocks keyed by (seed, shard), so results do not depend on the
/// number of worker threads.
McMeasurement mc_measure(const LatentParams& p, const NormWeights& w, std::size_t n, std::uint64_t seed,
                         const PseudoLabeler& labeler = truth_labeler(), unsigned threads = 1);

inline constexpr std::size_t kMcShardSize = 8192;

}  // namespace mint
