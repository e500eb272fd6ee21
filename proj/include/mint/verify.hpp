#pragma once

#include "mint/mint_engine.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mint {

enum class VerifyLevel { kQuick, kFull };

using GradientFn = std::function<Vector(const Matrix& inputs, const Vector& w, std::span<const int> labels,
                                        const ObjectiveMeans& means)>;

/// The engine's analytic gradient.
GradientFn engine_gradient();
/// A deliberately wrong gradient (missing the normalization projection), used
/// to check that the suite notices.
GradientFn broken_gradient();

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::kQuick;
  GradientFn gradient = engine_gradient();
  std::uint64_t seed = 20240917;
  unsigned threads = 1;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<SuiteResult> run_verification(const VerifyOptions& options);

/// Max over components of |analytic - central difference|, divided by the
/// largest central-difference magnitude (floored at 1e-12).
double gradient_relative_error(const Vector& analytic, const Vector& numeric);

/// Central finite differences of batch_objective(normalize(inputs * w)).
Vector numeric_gradient(const Matrix& inputs, const Vector& w, std::span<const int> labels,
                        const ObjectiveMeans& means, double step);

}  // namespace mint
