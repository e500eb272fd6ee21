#include "mint/theory_oracle.hpp"

#include "mint/rng.hpp"
#include "mint/synthetic_world.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace mint {
namespace {

double z_squared(const LatentParams& p) {
  const double s2 = p.severity * p.severity;
  return p.mu_sq() + static_cast<double>(p.d_irr) + s2 * p.delta_sq() + s2 * static_cast<double>(p.d_noise);
}

double c_of(double e_yhat) {
  return 1.0 / (e_yhat * e_yhat) + 1.0 / ((1.0 - e_yhat) * (1.0 - e_yhat));
}

}  // namespace

void TheoryCov::validate(const LatentParams& p) const {
  if (!(e_yhat > 0.0 && e_yhat < 1.0)) throw Error("E[yhat] must lie strictly inside (0, 1)", ErrorKind::kUsage);
  if (std::abs(sigma_yy) > 0.25) throw Error("|Cov(y, yhat)| exceeds 1/4", ErrorKind::kUsage);
  if (static_cast<std::size_t>(sigma_irr.size()) != p.d_irr ||
      static_cast<std::size_t>(sigma_noise.size()) != p.d_noise) {
    throw Error("covariance vectors do not match latent dimensions", ErrorKind::kUsage);
  }
}

TheoryCov perfect_pseudo_labels(const LatentParams& p) {
  return {0.5, 0.25, Vector::Zero(static_cast<Eigen::Index>(p.d_irr)),
          Vector::Zero(static_cast<Eigen::Index>(p.d_noise))};
}

TheoryCov flip_channel_cov(const LatentParams& p, double p_flip) {
  if (!(p_flip >= 0.0 && p_flip <= 1.0)) throw Error("flip probability must lie in [0, 1]", ErrorKind::kUsage);
  TheoryCov t = perfect_pseudo_labels(p);
  t.sigma_yy = (1.0 - 2.0 * p_flip) / 4.0;
  return t;
}

GtLimits gt_limits(const LatentParams& p) {
  p.validate();
  const double z2 = z_squared(p);
  const double s2 = p.severity * p.severity;
  return {p.mu_sq() / z2, (static_cast<double>(p.d_irr) + s2 * static_cast<double>(p.d_noise)) / z2};
}

bool intra_decrease_condition(const LatentParams& p) {
  return p.delta_sq() >= static_cast<double>(p.d_noise) / static_cast<double>(p.d_irr) * p.mu_sq();
}

double pl_inter_limit(const LatentParams& p, const NormWeights& w, const TheoryCov& t) {
  p.validate();
  t.validate(p);
  const SegmentLayout expected = p.layout();
  if (w.layout.flat || w.layout.cls != expected.cls || w.layout.irr != expected.irr ||
      w.layout.shift != expected.shift || w.layout.noise != expected.noise ||
      static_cast<std::size_t>(w.w.size()) != expected.total()) {
    throw Error("weight segments do not match latent dimensions", ErrorKind::kUsage);
  }
  const Vector w_cls = w.segment(Segment::kCls);
  const Vector w_irr = w.segment(Segment::kIrr);
  const Vector w_shift = w.segment(Segment::kShift);
  const Vector w_noise = w.segment(Segment::kNoise);
  const double s2 = p.severity * p.severity;

  const double mu_w = p.mu.cwiseProduct(w_cls).squaredNorm();
  const double numerator = 4.0 * t.sigma_yy * t.sigma_yy * mu_w + t.sigma_irr.cwiseProduct(w_irr).squaredNorm() +
                           t.sigma_noise.cwiseProduct(w_noise).squaredNorm();
  const double denominator =
      mu_w + w_irr.squaredNorm() + s2 * p.delta.cwiseProduct(w_shift).squaredNorm() + s2 * w_noise.squaredNorm();
  if (!(denominator > 0.0)) throw Error("degenerate weights");
  return c_of(t.e_yhat) / 2.0 * numerator / denominator;
}

PlInterGradients pl_inter_gradients(const LatentParams& p, const TheoryCov& t) {
  p.validate();
  t.validate(p);
  const double s2 = p.severity * p.severity;
  const double sigma2 = t.sigma_yy * t.sigma_yy;
  const double z2 = z_squared(p);
  const double c = c_of(t.e_yhat);
  const double d_irr = static_cast<double>(p.d_irr);
  const double d_noise = static_cast<double>(p.d_noise);

  const double cls_bracket = (4.0 * sigma2 * d_irr - t.sigma_irr.squaredNorm()) + 4.0 * sigma2 * s2 * p.delta_sq() +
                             (4.0 * sigma2 * s2 * d_noise - t.sigma_noise.squaredNorm());
  // Numerator of the limit at w = 1; the shift gradient is -C * numerator / Z^4 * s^2 delta^2.
  const double numerator = 4.0 * sigma2 * p.mu_sq() + t.sigma_irr.squaredNorm() + t.sigma_noise.squaredNorm();

  PlInterGradients g;
  g.cls = c * cls_bracket / (z2 * z2) * p.mu.array().square().matrix();
  g.shift = -c * numerator / (z2 * z2) * s2 * p.delta.array().square().matrix();
  return g;
}

PseudoLabeler truth_labeler() {
  return [](const LatentBatch& batch, const Matrix&, std::uint64_t) { return batch.gt_labels; };
}

PseudoLabeler flip_labeler(double p_flip, std::uint64_t seed) {
  if (!(p_flip >= 0.0 && p_flip <= 1.0)) throw Error("flip probability must lie in [0, 1]", ErrorKind::kUsage);
  return [p_flip, seed](const LatentBatch& batch, const Matrix&, std::uint64_t shard) {
    RandomStream rng = RandomStream(seed).split(shard);
    std::vector<int> labels = batch.gt_labels;
    for (auto& y : labels) {
      if (rng.uniform() < p_flip) y = 1 - y;
    }
    return labels;
  };
}

McMeasurement mc_measure(const LatentParams& p, const NormWeights& w, std::size_t n, std::uint64_t seed,
                         const PseudoLabeler& labeler, unsigned threads) {
  if (n < 2) throw Error("Monte Carlo sample count must be >= 2", ErrorKind::kUsage);
  if (n % 2 != 0) throw Error("Monte Carlo sample count must be even for balanced labels", ErrorKind::kUsage);
  p.validate();

  const std::size_t shards = (n + kMcShardSize - 1) / kMcShardSize;
  const auto d = static_cast<Eigen::Index>(p.dim());
  Matrix z(static_cast<Eigen::Index>(n), d);
  std::vector<int> gt(n), pl(n);
  const RandomStream root(seed);

  auto run_shard = [&](std::size_t k) {
    const std::size_t begin = k * kMcShardSize;
    const std::size_t size = std::min(kMcShardSize, n - begin);
    const RandomStream child = root.split(k);
    const LatentBatch batch = sample_latents(p, size, child.seed() ^ child.stream_id(), LabelMode::kBalanced);
    const Matrix shard_z = embed_rows(batch.latents, w.w);
    const std::vector<int> labels = labeler(batch, shard_z, k);
    if (labels.size() != size) throw Error("pseudo-labeler returned the wrong number of labels");
    z.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(size)) = shard_z;
    std::copy(batch.gt_labels.begin(), batch.gt_labels.end(), gt.begin() + static_cast<std::ptrdiff_t>(begin));
    std::copy(labels.begin(), labels.end(), pl.begin() + static_cast<std::ptrdiff_t>(begin));
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(shards)));
  if (workers == 1) {
    for (std::size_t k = 0; k < shards; ++k) run_shard(k);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k = t; k < shards; k += workers) run_shard(k);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  McMeasurement out;
  out.n = n;
  out.gt_report = compute_variance_report(z, gt, 2);
  out.pl_report = compute_variance_report(z, pl, 2);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += gt[i] == pl[i] ? 1 : 0;
  out.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  return out;
}

}  // namespace mint
