#include "mint/embedding_metrics.hpp"
#include "mint/rng.hpp"
#include "mint/synthetic_world.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace mint;

namespace {

// Straight-line evaluation of the three class-balanced sums with plain loops.
struct Brute {
  double total = 0, inter = 0, intra = 0;
};

Brute brute_force(const Matrix& z, const std::vector<int>& y, int c) {
  const std::size_t n = static_cast<std::size_t>(z.rows()), d = static_cast<std::size_t>(z.cols());
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += z(i, j) / static_cast<double>(n);
  Brute b;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    std::vector<double> cm(d, 0.0);
    int nk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] != k) continue;
      ++nk;
      for (std::size_t j = 0; j < d; ++j) cm[j] += z(i, j);
    }
    if (nk == 0) continue;
    ++present;
    for (auto& v : cm) v /= nk;
    double t = 0, a = 0, e = 0;
    for (std::size_t j = 0; j < d; ++j) e += (cm[j] - mean[j]) * (cm[j] - mean[j]);
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] != k) continue;
      for (std::size_t j = 0; j < d; ++j) {
        t += (z(i, j) - mean[j]) * (z(i, j) - mean[j]);
        a += (z(i, j) - cm[j]) * (z(i, j) - cm[j]);
      }
    }
    b.total += t / nk;
    b.inter += e;
    b.intra += a / nk;
  }
  b.total /= present;
  b.inter /= present;
  b.intra /= present;
  return b;
}

}  // namespace

TEST(VarianceReport, TwoOrthogonalPoints) {
  Matrix z(2, 2);
  z << 1, 0, 0, 1;
  const std::vector<int> y{0, 1};
  const auto r = compute_variance_report(z, y, 2);
  EXPECT_NEAR(r.total, 0.5, 1e-15);
  EXPECT_NEAR(r.inter, 0.5, 1e-15);
  EXPECT_NEAR(r.intra, 0.0, 1e-15);
  EXPECT_EQ(r.classes_present, 2u);
}

TEST(VarianceReport, IdenticalPointsGiveZero) {
  Matrix z(5, 3);
  for (int i = 0; i < 5; ++i) z.row(i) << 0.6, 0.8, 0.0;
  const std::vector<int> y{0, 1, 1, 2, 0};
  const auto r = compute_variance_report(z, y, 3);
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.inter, 0.0);
  EXPECT_EQ(r.intra, 0.0);
}

TEST(VarianceReport, SyntheticSetMatchesBruteForceAndDecomposes) {
  const LatentParams p = LatentParams::uniform(8, 4.0, 32, 8, 9.0, 16, 2.0);
  const LatentBatch batch = sample_latents(p, 1000, 3);
  const Matrix z = embed_rows(batch.latents, Vector::Ones(static_cast<Eigen::Index>(p.dim())));
  const auto r = compute_variance_report(z, batch.gt_labels, 2);
  const Brute b = brute_force(z, batch.gt_labels, 2);
  EXPECT_NEAR(r.total, b.total, 1e-12);
  EXPECT_NEAR(r.inter, b.inter, 1e-12);
  EXPECT_NEAR(r.intra, b.intra, 1e-12);
  EXPECT_LT(decomposition_residual(r), 1e-9);
}

TEST(VarianceReport, EmptyClassesAreSkipped) {
  RandomStream rng(4);
  Matrix z(40, 5);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  std::vector<int> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 2) * 3;  // classes 0 and 3 of 6
  const auto r = compute_variance_report(z, y, 6);
  const Brute b = brute_force(z, y, 6);
  EXPECT_EQ(r.classes_present, 2u);
  EXPECT_EQ(r.per_class_counts, (std::vector<std::size_t>{20, 0, 0, 20, 0, 0}));
  EXPECT_NEAR(r.inter, b.inter, 1e-12);
  EXPECT_NEAR(r.total, b.total, 1e-12);
}

TEST(VarianceReport, PermutationInvariance) {
  RandomStream rng(5);
  const int n = 60;
  Matrix z(n, 4);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(3));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  Matrix zp(n, 4);
  std::vector<int> yp(n);
  for (int i = 0; i < n; ++i) {
    zp.row(i) = z.row(perm[i]);
    yp[i] = y[perm[i]];
  }
  const auto a = compute_variance_report(z, y, 3);
  const auto b = compute_variance_report(zp, yp, 3);
  EXPECT_NEAR(a.total, b.total, 1e-12);
  EXPECT_NEAR(a.inter, b.inter, 1e-12);
  EXPECT_NEAR(a.intra, b.intra, 1e-12);
}

TEST(VarianceReport, ScalesQuadratically) {
  RandomStream rng(6);
  Matrix z(30, 3);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  std::vector<int> y(30);
  for (auto& v : y) v = static_cast<int>(rng.below(2));
  const auto a = compute_variance_report(z, y, 2);
  const auto b = compute_variance_report(Matrix(2.5 * z), y, 2);
  EXPECT_NEAR(b.total, 6.25 * a.total, 1e-12);
  EXPECT_NEAR(b.inter, 6.25 * a.inter, 1e-12);
  EXPECT_NEAR(b.intra, 6.25 * a.intra, 1e-12);
}

TEST(VarianceReport, SingleClassHasNoInterVariance) {
  RandomStream rng(7);
  Matrix z(25, 3);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  const std::vector<int> y(25, 1);
  const auto r = compute_variance_report(z, y, 2);
  EXPECT_EQ(r.inter, 0.0);
  EXPECT_EQ(r.total, r.intra);
}

TEST(VarianceReport, Errors) {
  Matrix empty(0, 3);
  EXPECT_THROW(compute_variance_report(empty, std::vector<int>{}, 2), Error);
  Matrix z(2, 2);
  z << 1, 0, 0, 1;
  try {
    compute_variance_report(z, std::vector<int>{0, 2}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("label out of range"), std::string::npos);
  }
  try {
    compute_variance_report(empty, std::vector<int>{}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos);
  }
  EXPECT_THROW(compute_variance_report(z, std::vector<int>{0}, 2), Error);
}

TEST(DecompositionResidual, ExactReports) {
  VarianceReport a;
  a.total = 0.5;
  a.inter = 0.5;
  EXPECT_EQ(decomposition_residual(a), 0.0);
  VarianceReport b;
  b.total = 1.0;
  b.inter = 0.3;
  b.intra = 0.7;
  EXPECT_EQ(decomposition_residual(b), 0.0);
}

TEST(DecompositionResidual, RandomSetsStayBelowTolerance) {
  RandomStream rng(8);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + static_cast<int>(rng.below(200));
    const int c = 1 + static_cast<int>(rng.below(10));
    const int d = 1 + static_cast<int>(rng.below(32));
    Matrix z(n, d);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    for (int i = 0; i < n; ++i) z.row(i).normalize();
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
    EXPECT_LT(decomposition_residual(compute_variance_report(z, y, c)), 1e-9);
  }
}

TEST(Pearson, PerfectRelations) {
  const std::vector<double> x{1, 2, 3}, up{2, 4, 6}, down{3, 2, 1};
  EXPECT_NEAR(pearson_correlation(x, up), 1.0, 1e-15);
  EXPECT_NEAR(pearson_correlation(x, down), -1.0, 1e-15);
}

TEST(Pearson, HandComputedValue) {
  // Deviations (-1.5,-0.5,0.5,1.5) and (-1.5,0.5,-0.5,1.5): sum of products 4, each sum of squares 5.
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  EXPECT_NEAR(pearson_correlation(x, y), 4.0 / 5.0, 1e-15);
}

TEST(Pearson, DegenerateSeries) {
  const std::vector<double> x{1, 2, 3}, flat{2, 2, 2};
  try {
    pearson_correlation(x, flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate series"), std::string::npos);
  }
  const std::vector<double> short_x{1}, short_y{2};
  EXPECT_THROW(pearson_correlation(short_x, short_y), Error);
  const std::vector<double> three{1, 2, 3}, two{1, 2};
  EXPECT_THROW(pearson_correlation(three, two), Error);
}
