#pragma once

#include "mint/types.hpp"

#include <span>
#include <vector>

namespace mint {

/// Class-balanced variances of an embedding set under one label assignment.
/// Classes with no samples are left out of every average.
struct VarianceReport {
  double total = 0.0;
  double inter = 0.0;
  double intra = 0.0;
  std::vector<std::size_t> per_class_counts;
  std::size_t classes_present = 0;
};

/// total = mean over present classes of the within-class average squared
/// distance to the global mean; inter uses the distance between class mean and
/// global mean; intra the distance to the class mean. The global mean is the
/// plain average over all rows.
VarianceReport compute_variance_report(const Matrix& embeddings, std::span<const int> labels,
                                       int n_classes);
VarianceReport compute_variance_report(const EmbeddingSet& embeddings, std::span<const int> labels);

/// |total - inter - intra|
double decomposition_residual(const VarianceReport& report);

/// Sample Pearson correlation. Throws on length mismatch or constant series.
double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace mint
