#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mint {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Error categories map onto CLI exit codes (usage 1, data 2, verification 3).
enum class ErrorKind { kUsage, kData, kVerification };

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ErrorKind kind = ErrorKind::kData)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// N unit-norm embedding rows with optional ground-truth labels.
struct EmbeddingSet {
  Matrix data;
  std::optional<std::vector<int>> labels;
  int n_classes = 2;

  std::size_t size() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }
};

/// C x d matrix of unit-norm class text embeddings.
struct TextEmbeddings {
  Matrix rows;

  int n_classes() const { return static_cast<int>(rows.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

enum class Segment { kCls, kIrr, kShift, kNoise };

/// Segment lengths of the latent layout [cls | irr | shift | noise]. Dump mode
/// uses a single flat segment.
struct SegmentLayout {
  std::size_t cls = 0;
  std::size_t irr = 0;
  std::size_t shift = 0;
  std::size_t noise = 0;
  bool flat = false;

  static SegmentLayout partitioned(std::size_t cls, std::size_t irr, std::size_t shift,
                                   std::size_t noise) {
    return {cls, irr, shift, noise, false};
  }
  static SegmentLayout single(std::size_t dim) { return {dim, 0, 0, 0, true}; }

  std::size_t total() const { return cls + irr + shift + noise; }
  std::size_t offset(Segment s) const;
  std::size_t length(Segment s) const;
};

/// Adaptable per-dimension weights of the RMSNorm-style head.
struct NormWeights {
  Vector w;
  SegmentLayout layout;

  static NormWeights ones(const SegmentLayout& layout);

  auto segment(Segment s) const {
    return w.segment(static_cast<Eigen::Index>(layout.offset(s)),
                     static_cast<Eigen::Index>(layout.length(s)));
  }
  auto segment(Segment s) {
    return w.segment(static_cast<Eigen::Index>(layout.offset(s)),
                     static_cast<Eigen::Index>(layout.length(s)));
  }
};

/// Parameters of the binary latent model: v = [±mu; Rademacher; s*delta; s*Rademacher].
struct LatentParams {
  Vector mu;
  std::size_t d_irr = 1;
  Vector delta;
  std::size_t d_noise = 1;
  double severity = 0.0;

  /// Uniform-direction parameters: mu = sqrt(mu_sq/d_cls)*1, delta likewise.
  static LatentParams uniform(std::size_t d_cls, double mu_sq, std::size_t d_irr,
                              std::size_t d_shift, double delta_sq, std::size_t d_noise,
                              double severity);

  void validate() const;
  double mu_sq() const { return mu.squaredNorm(); }
  double delta_sq() const { return delta.squaredNorm(); }
  std::size_t dim() const { return static_cast<std::size_t>(mu.size() + delta.size()) + d_irr + d_noise; }
  SegmentLayout layout() const {
    return SegmentLayout::partitioned(static_cast<std::size_t>(mu.size()), d_irr,
                                      static_cast<std::size_t>(delta.size()), d_noise);
  }
  LatentParams with_severity(double s) const {
    LatentParams copy = *this;
    copy.severity = s;
    return copy;
  }
};

struct LatentBatch {
  Matrix latents;
  std::vector<int> gt_labels;
  double severity = 0.0;
  std::string tag;

  std::size_t size() const { return static_cast<std::size_t>(latents.rows()); }
};

}  // namespace mint
