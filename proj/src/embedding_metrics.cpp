#include "mint/embedding_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace mint {

VarianceReport compute_variance_report(const Matrix& z, std::span<const int> labels, int n_classes) {
  const Eigen::Index n = z.rows();
  if (n == 0) throw Error("no samples");
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error("label count " + std::to_string(labels.size()) + " does not match " +
                std::to_string(n) + " samples");
  }
  if (n_classes < 1) throw Error("n_classes must be positive");

  VarianceReport report;
  report.per_class_counts.assign(static_cast<std::size_t>(n_classes), 0);
  Matrix class_sums = Matrix::Zero(n_classes, z.cols());
  // Summed in the same row order as the class sums, so a single class
  // reproduces the global mean exactly.
  Vector global_sum = Vector::Zero(z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= n_classes) throw Error("label out of range");
    ++report.per_class_counts[static_cast<std::size_t>(c)];
    class_sums.row(c) += z.row(i);
    global_sum += z.row(i).transpose();
  }
  const Vector global_mean = global_sum / static_cast<double>(n);

  std::vector<double> total_sums(static_cast<std::size_t>(n_classes), 0.0);
  std::vector<double> intra_sums(static_cast<std::size_t>(n_classes), 0.0);
  Matrix class_means = Matrix::Zero(n_classes, z.cols());
  for (int c = 0; c < n_classes; ++c) {
    const auto count = report.per_class_counts[static_cast<std::size_t>(c)];
    if (count > 0) class_means.row(c) = class_sums.row(c) / static_cast<double>(count);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    total_sums[static_cast<std::size_t>(c)] += (z.row(i) - global_mean.transpose()).squaredNorm();
    intra_sums[static_cast<std::size_t>(c)] += (z.row(i) - class_means.row(c)).squaredNorm();
  }

  for (int c = 0; c < n_classes; ++c) {
    const auto count = report.per_class_counts[static_cast<std::size_t>(c)];
    if (count == 0) continue;
    ++report.classes_present;
    const double nc = static_cast<double>(count);
    report.total += total_sums[static_cast<std::size_t>(c)] / nc;
    report.intra += intra_sums[static_cast<std::size_t>(c)] / nc;
    report.inter += (class_means.row(c) - global_mean.transpose()).squaredNorm();
  }
  const double present = static_cast<double>(report.classes_present);
  report.total /= present;
  report.intra /= present;
  report.inter /= present;
  return report;
}

VarianceReport compute_variance_report(const EmbeddingSet& embeddings, std::span<const int> labels) {
  return compute_variance_report(embeddings.data, labels, embeddings.n_classes);
}

double decomposition_residual(const VarianceReport& report) {
  return std::abs(report.total - report.inter - report.intra);
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("series lengths differ");
  if (xs.size() < 2) throw Error("need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("degenerate series");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace mint
