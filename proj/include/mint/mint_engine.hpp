#pragma once

#include "mint/theory_oracle.hpp"
#include "mint/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mint {

/// Running global mean and per-class means of embeddings.
class MeanAccumulator {
 public:
  MeanAccumulator() = default;
  MeanAccumulator(std::size_t dim, int n_classes);

  void update(const Eigen::Ref<const Vector>& z, int c);
  void update_batch(const Matrix& z, std::span<const int> labels);

  const Vector& global_mean() const { return global_mean_; }
  std::size_t global_count() const { return global_count_; }
  const Matrix& class_means() const { return class_means_; }
  const std::vector<std::size_t>& class_counts() const { return class_counts_; }
  int n_classes() const { return static_cast<int>(class_counts_.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(global_mean_.size()); }

 private:
  Vector global_mean_;
  std::size_t global_count_ = 0;
  Matrix class_means_;
  std::vector<std::size_t> class_counts_;
};

/// Running arithmetic mean of per-batch gradients.
class GradAccumulator {
 public:
  GradAccumulator() = default;
  explicit GradAccumulator(std::size_t dim);

  void update(const Vector& g);

  const Vector& mean() const { return mean_; }
  std::size_t count() const { return count_; }

 private:
  Vector mean_;
  std::size_t count_ = 0;
};

/// What to do when the objective has no accumulated means and a pseudo-class
/// holds a single sample (its batch-local class mean is the sample itself).
enum class SingletonPolicy {
  kAbort,  // raise "undefined objective for singleton class"
  kSkip,   // drop the singleton classes from the objective
};

struct MintConfig {
  double learning_rate = 0.007;
  double k_prior = 10000.0;
  std::size_t batch_size = 20;
  double ascent_eps = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  bool use_mean_acc = true;
  bool use_grad_acc = true;
  bool use_text_adjust = true;
  /// Use the global count K instead of the per-class count K_c in the text prior.
  bool global_count_text_prior = false;
  SingletonPolicy singleton_policy = SingletonPolicy::kAbort;

  void validate() const;
};

struct Prediction {
  std::vector<int> labels;
  Matrix scores;  // B x C cosine similarities
};

/// argmax_c z_i . t_c with ties going to the smallest class index.
Prediction predict(const Matrix& embeddings, const TextEmbeddings& text);

/// Reference means used by the batch objective.
struct ObjectiveMeans {
  Vector global;
  Matrix per_class;  // C x d
};

ObjectiveMeans means_from(const MeanAccumulator& acc);
/// Means of the batch alone, for runs without the mean accumulator.
ObjectiveMeans batch_local_means(const Matrix& embeddings, std::span<const int> labels, int n_classes);

/// Batch PL-inter objective with the reference means held fixed. Classes listed
/// in `skip` are left out (they do not count towards C_b).
double batch_objective(const Matrix& embeddings, std::span<const int> labels, const ObjectiveMeans& means,
                       std::span<const char> skip = {});
double batch_objective(const Matrix& embeddings, std::span<const int> labels, const MeanAccumulator& acc);

/// Gradient of batch_objective(normalize(v * w)) with respect to w.
Vector batch_gradient(const Matrix& inputs, const Vector& w, std::span<const int> labels, const ObjectiveMeans& means,
                      std::span<const char> skip = {});

/// One Adam step from a freshly reset optimizer state, taken in the ascent direction.
Vector ascent_step(const Vector& w0, const Vector& g_mean, const MintConfig& cfg);

/// Blends each observed class's text row with its adapted class mean and renormalizes.
TextEmbeddings adjust_text(const TextEmbeddings& text, const MeanAccumulator& adapted_acc, double k_prior,
                           bool global_count = false);

struct BatchDiagnostics {
  double objective = 0.0;
  double grad_norm = 0.0;       // ||g_b||
  double mean_grad_norm = 0.0;  // ||g_mean|| used for the step
  double agreement = 0.0;       // fraction of final predictions equal to the zero-shot ones
  std::size_t classes_in_batch = 0;
  std::size_t skipped_classes = 0;
};

struct BatchOutcome {
  std::vector<int> zero_shot;    // pseudo-labels from the frozen weights
  std::vector<int> predictions;  // final predictions after adaptation
  Matrix initial_embeddings;     // embeddings under w0
  Matrix adapted_embeddings;     // embeddings under the adapted weights
  BatchDiagnostics diagnostics;
};

/// Online adaptation state. Inputs are latents (synthetic mode) or stored
/// embeddings (dump mode); either way z = normalize(input * w).
class MintState {
 public:
  MintState(NormWeights w0, TextEmbeddings text, MintConfig config);

  BatchOutcome process_batch(const Matrix& inputs);

  const NormWeights& w0() const { return w0_; }
  const MeanAccumulator& mean_acc() const { return mean_acc_; }
  const MeanAccumulator& adapted_mean_acc() const { return adapted_mean_acc_; }
  const GradAccumulator& grad_acc() const { return grad_acc_; }
  const TextEmbeddings& text() const { return text_; }
  const MintConfig& config() const { return config_; }

 private:
  NormWeights w0_;
  TextEmbeddings text_;
  MintConfig config_;
  MeanAccumulator mean_acc_;
  MeanAccumulator adapted_mean_acc_;
  GradAccumulator grad_acc_;
};

/// Pseudo-labels from zero-shot prediction against fixed text rows.
PseudoLabeler text_labeler(const TextEmbeddings& text);

}  // namespace mint
