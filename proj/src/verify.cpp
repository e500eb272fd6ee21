#include "mint/verify.hpp"

#include "mint/embedding_metrics.hpp"
#include "mint/rng.hpp"
#include "mint/synthetic_world.hpp"
#include "mint/theory_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

namespace mint {
namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

Matrix random_unit_rows(RandomStream& rng, std::size_t n, std::size_t d) {
  Matrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
    z.row(i).normalize();
  }
  return z;
}

SuiteResult decomposition_suite(const VerifyOptions& opt) {
  RandomStream rng = RandomStream(opt.seed).split(1);
  const std::size_t sets = opt.level == VerifyLevel::kFull ? 1000 : 100;
  double worst = 0.0;
  for (std::size_t k = 0; k < sets; ++k) {
    const std::size_t n = 1 + rng.below(500);
    const int c = 1 + static_cast<int>(rng.below(20));
    const std::size_t d = 1 + rng.below(64);
    const Matrix z = random_unit_rows(rng, n, d);
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
    worst = std::max(worst, decomposition_residual(compute_variance_report(z, labels, c)));
  }
  return {"decomposition", worst < 1e-9, fmt("%g sets, max residual %.3g", static_cast<double>(sets), worst)};
}

SuiteResult gradient_suite(const VerifyOptions& opt) {
  RandomStream rng = RandomStream(opt.seed).split(2);
  const std::size_t per_size = opt.level == VerifyLevel::kFull ? 34 : 10;
  double worst = 0.0;
  std::size_t instances = 0;
  for (std::size_t batch : {1u, 2u, 20u}) {
    for (std::size_t k = 0; k < per_size; ++k, ++instances) {
      const std::size_t d = 2 + rng.below(15);
      const int c = 2 + static_cast<int>(rng.below(3));
      Matrix v(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(d));
      for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
      Vector w(static_cast<Eigen::Index>(d));
      for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = 0.5 + rng.uniform();
      std::vector<int> labels(batch);
      for (auto& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
      ObjectiveMeans means;
      means.global = random_unit_rows(rng, 1, d).row(0).transpose() * 0.3;
      means.per_class = random_unit_rows(rng, static_cast<std::size_t>(c), d) * 0.7;
      const Vector analytic = opt.gradient(v, w, labels, means);
      const Vector numeric = numeric_gradient(v, w, labels, means, 1e-6);
      worst = std::max(worst, gradient_relative_error(analytic, numeric));
    }
  }
  return {"gradient-check", worst < 1e-5,
          fmt("%g instances, max relative error %.3g", static_cast<double>(instances), worst)};
}

SuiteResult accumulator_suite(const VerifyOptions& opt) {
  RandomStream rng = RandomStream(opt.seed).split(3);
  const std::size_t items = opt.level == VerifyLevel::kFull ? 100000 : 10000;
  const std::size_t d = 8;
  const int c = 5;
  MeanAccumulator means(d, c);
  GradAccumulator grads(d);
  std::vector<long double> sum(d, 0.0L), gsum(d, 0.0L);
  std::vector<std::vector<long double>> class_sum(c, std::vector<long double>(d, 0.0L));
  std::vector<std::size_t> counts(c, 0);
  Vector z(static_cast<Eigen::Index>(d)), g(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < items; ++k) {
    const int y = static_cast<int>(rng.below(c));
    for (std::size_t j = 0; j < d; ++j) {
      z(static_cast<Eigen::Index>(j)) = rng.normal();
      g(static_cast<Eigen::Index>(j)) = rng.normal();
      sum[j] += z(static_cast<Eigen::Index>(j));
      class_sum[static_cast<std::size_t>(y)][j] += z(static_cast<Eigen::Index>(j));
      gsum[j] += g(static_cast<Eigen::Index>(j));
    }
    ++counts[static_cast<std::size_t>(y)];
    means.update(z, y);
    grads.update(g);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    worst = std::max(worst, std::abs(means.global_mean()(jj) - static_cast<double>(sum[j] / items)));
    worst = std::max(worst, std::abs(grads.mean()(jj) - static_cast<double>(gsum[j] / items)));
    for (int y = 0; y < c; ++y) {
      const auto n_c = static_cast<long double>(counts[static_cast<std::size_t>(y)]);
      worst = std::max(worst, std::abs(means.class_means()(y, jj) -
                                       static_cast<double>(class_sum[static_cast<std::size_t>(y)][j] / n_c)));
    }
  }
  return {"accumulator-exactness", worst < 1e-12,
          fmt("%g items, max deviation %.3g", static_cast<double>(items), worst)};
}

SuiteResult sign_law_suite(const VerifyOptions& opt) {
  const std::size_t n = opt.level == VerifyLevel::kFull ? 100000 : 20000;
  const std::size_t shards = 10;
  const LatentParams p = LatentParams::uniform(4, 4.0, 16, 3, 9.0, 8, 2.0);
  const NormWeights ones = NormWeights::ones(p.layout());
  bool ok = true;
  double worst_shift = -1e300, worst_cls = 1e300;
  for (double flip : {0.1, 0.2, 0.3}) {
    const LatentBatch batch = sample_latents(p, n, opt.seed + static_cast<std::uint64_t>(flip * 1000),
                                             LabelMode::kBalanced);
    const Matrix z = embed_rows(batch.latents, ones.w);
    const std::vector<int> labels =
        flip_labeler(flip, opt.seed ^ 0xF11Fu)(batch, z, 0);
    const ObjectiveMeans means = batch_local_means(z, labels, 2);
    const Vector g = opt.gradient(batch.latents, ones.w, labels, means);

    // Spread of shard-level estimates gives the Monte Carlo standard error.
    const std::size_t shard = n / shards;
    Vector sum = Vector::Zero(g.size()), sum_sq = Vector::Zero(g.size());
    for (std::size_t k = 0; k < shards; ++k) {
      const auto begin = static_cast<Eigen::Index>(k * shard);
      const Matrix part = batch.latents.middleRows(begin, static_cast<Eigen::Index>(shard));
      const std::vector<int> part_labels(labels.begin() + begin, labels.begin() + begin + static_cast<long>(shard));
      const Vector gk = opt.gradient(part, ones.w, part_labels, means);
      sum += gk;
      sum_sq += gk.array().square().matrix();
    }
    const double m = static_cast<double>(shards);
    const Vector var = (sum_sq - sum.array().square().matrix() / m) / (m - 1.0);
    const Vector sigma = (var.array().max(0.0) / m).sqrt().matrix();

    const auto cls = static_cast<Eigen::Index>(p.layout().offset(Segment::kCls));
    const auto shift = static_cast<Eigen::Index>(p.layout().offset(Segment::kShift));
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p.layout().cls); ++j) {
      ok = ok && g(cls + j) >= -3.0 * sigma(cls + j);
      worst_cls = std::min(worst_cls, g(cls + j));
    }
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p.layout().shift); ++j) {
      ok = ok && g(shift + j) <= 3.0 * sigma(shift + j);
      worst_shift = std::max(worst_shift, g(shift + j));
    }
  }
  return {"sign-law", ok, fmt("min cls component %.3g, max shift component %.3g", worst_cls, worst_shift)};
}

SuiteResult mc_suite(const VerifyOptions& opt) {
  const bool full = opt.level == VerifyLevel::kFull;
  const std::size_t n = full ? 200000 : 50000;
  const double tolerance = full ? 0.02 : 0.05;
  const std::vector<std::uint64_t> seeds = full ? std::vector<std::uint64_t>{1, 2, 3} : std::vector<std::uint64_t>{1};
  double worst = 0.0;
  for (double s : {0.0, 1.0, 2.0, 4.0}) {
    const LatentParams p = LatentParams::uniform(4, 4.0, 16, 3, 9.0, 8, s);
    const GtLimits limits = gt_limits(p);
    for (auto seed : seeds) {
      const McMeasurement mc = mc_measure(p, NormWeights::ones(p.layout()), n, opt.seed + seed, truth_labeler(),
                                          opt.threads);
      worst = std::max(worst, std::abs(mc.gt_report.inter - limits.inter) / limits.inter);
      worst = std::max(worst, std::abs(mc.gt_report.intra - limits.intra) / limits.intra);
    }
  }
  return {"mc-convergence", worst < tolerance,
          fmt("n=%g, max relative error %.3g", static_cast<double>(n), worst)};
}

}  // namespace

GradientFn engine_gradient() {
  return [](const Matrix& inputs, const Vector& w, std::span<const int> labels, const ObjectiveMeans& means) {
    return batch_gradient(inputs, w, labels, means);
  };
}

GradientFn broken_gradient() {
  return [](const Matrix& inputs, const Vector& w, std::span<const int> labels, const ObjectiveMeans& means) {
    const int n_classes = static_cast<int>(means.per_class.rows());
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    std::size_t c_b = 0;
    for (auto n_c : counts) c_b += n_c > 0 ? 1 : 0;
    Vector grad = Vector::Zero(w.size());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      const Vector v = inputs.row(i).transpose();
      const double norm = v.cwiseProduct(w).norm();
      const double n_c = static_cast<double>(counts[static_cast<std::size_t>(c)]);
      const Vector dz = (2.0 / (static_cast<double>(c_b) * n_c)) * (means.per_class.row(c).transpose() - means.global);
      grad += v.cwiseProduct(dz) / norm;
    }
    return grad;
  };
}

Vector numeric_gradient(const Matrix& inputs, const Vector& w, std::span<const int> labels,
                        const ObjectiveMeans& means, double step) {
  Vector g(w.size());
  Vector probe = w;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    probe(j) = w(j) + step;
    const double up = batch_objective(embed_rows(inputs, probe), labels, means);
    probe(j) = w(j) - step;
    const double down = batch_objective(embed_rows(inputs, probe), labels, means);
    probe(j) = w(j);
    g(j) = (up - down) / (2.0 * step);
  }
  return g;
}

double gradient_relative_error(const Vector& analytic, const Vector& numeric) {
  const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-12);
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

std::vector<SuiteResult> run_verification(const VerifyOptions& options) {
  using Suite = SuiteResult (*)(const VerifyOptions&);
  const std::pair<const char*, Suite> suites[] = {{"decomposition", decomposition_suite},
                                                  {"gradient-check", gradient_suite},
                                                  {"accumulator-exactness", accumulator_suite},
                                                  {"sign-law", sign_law_suite},
                                                  {"mc-convergence", mc_suite}};
  std::vector<SuiteResult> results;
  for (const auto& [name, suite] : suites) {
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r;
    try {
      r = suite(options);
    } catch (const std::exception& e) {
      r.name = name;
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace mint
