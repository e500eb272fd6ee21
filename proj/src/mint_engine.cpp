#include "mint/mint_engine.hpp"

#include "mint/synthetic_world.hpp"

#include <cmath>
#include <string>

namespace mint {
namespace {

constexpr double kNormFloor = 1e-30;

void check_labels(std::span<const int> labels, std::size_t n, int n_classes) {
  if (labels.size() != n) throw Error("label count does not match batch size");
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw Error("label out of range");
  }
}

std::vector<std::size_t> batch_counts(std::span<const int> labels, int n_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

bool skipped(std::span<const char> skip, int c) {
  return !skip.empty() && skip[static_cast<std::size_t>(c)] != 0;
}

std::size_t active_classes(const std::vector<std::size_t>& counts, std::span<const char> skip) {
  std::size_t c_b = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0 && !skipped(skip, static_cast<int>(c))) ++c_b;
  }
  return c_b;
}

}  // namespace

MeanAccumulator::MeanAccumulator(std::size_t dim, int n_classes)
    : global_mean_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      class_means_(Matrix::Zero(n_classes, static_cast<Eigen::Index>(dim))),
      class_counts_(static_cast<std::size_t>(n_classes), 0) {
  if (n_classes < 1) throw Error("accumulator needs at least one class", ErrorKind::kUsage);
}

void MeanAccumulator::update(const Eigen::Ref<const Vector>& z, int c) {
  if (z.size() != global_mean_.size()) throw Error("embedding dimension does not match accumulator");
  if (c < 0 || c >= n_classes()) throw Error("label out of range");
  ++global_count_;
  global_mean_ += (z - global_mean_) / static_cast<double>(global_count_);
  auto& k_c = class_counts_[static_cast<std::size_t>(c)];
  ++k_c;
  auto row = class_means_.row(c);
  row += (z.transpose() - row) / static_cast<double>(k_c);
}

void MeanAccumulator::update_batch(const Matrix& z, std::span<const int> labels) {
  check_labels(labels, static_cast<std::size_t>(z.rows()), n_classes());
  for (Eigen::Index i = 0; i < z.rows(); ++i) update(z.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
}

GradAccumulator::GradAccumulator(std::size_t dim) : mean_(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

void GradAccumulator::update(const Vector& g) {
  if (g.size() != mean_.size()) throw Error("gradient dimension does not match accumulator");
  ++count_;
  const double b = static_cast<double>(count_);
  mean_ = ((b - 1.0) / b) * mean_ + g / b;
}

void MintConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive", ErrorKind::kUsage);
  if (!(k_prior >= 0.0)) throw Error("k_prior must be nonnegative", ErrorKind::kUsage);
  if (batch_size < 1) throw Error("batch size must be positive", ErrorKind::kUsage);
  if (!(ascent_eps > 0.0)) throw Error("ascent epsilon must be positive", ErrorKind::kUsage);
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error("Adam betas must lie in [0, 1)", ErrorKind::kUsage);
  }
}

Prediction predict(const Matrix& embeddings, const TextEmbeddings& text) {
  if (static_cast<std::size_t>(embeddings.cols()) != text.dim()) {
    throw Error("embedding and text dimensions differ");
  }
  if (text.n_classes() < 1) throw Error("no text embeddings");
  Prediction out;
  out.scores = embeddings * text.rows.transpose();
  out.labels.resize(static_cast<std::size_t>(embeddings.rows()));
  for (Eigen::Index i = 0; i < out.scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < out.scores.cols(); ++c) {
      if (out.scores(i, c) > out.scores(i, best)) best = static_cast<int>(c);
    }
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

ObjectiveMeans means_from(const MeanAccumulator& acc) { return {acc.global_mean(), acc.class_means()}; }

ObjectiveMeans batch_local_means(const Matrix& embeddings, std::span<const int> labels, int n_classes) {
  MeanAccumulator acc(static_cast<std::size_t>(embeddings.cols()), n_classes);
  acc.update_batch(embeddings, labels);
  return means_from(acc);
}

double batch_objective(const Matrix& embeddings, std::span<const int> labels, const ObjectiveMeans& means,
                       std::span<const char> skip) {
  if (embeddings.rows() == 0) throw Error("empty batch");
  const int n_classes = static_cast<int>(means.per_class.rows());
  check_labels(labels, static_cast<std::size_t>(embeddings.rows()), n_classes);
  const auto counts = batch_counts(labels, n_classes);
  const std::size_t c_b = active_classes(counts, skip);
  if (c_b == 0) return 0.0;

  double value = 0.0;
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (skipped(skip, c)) continue;
    const double n_c = static_cast<double>(counts[static_cast<std::size_t>(c)]);
    const double to_global = (embeddings.row(i) - means.global.transpose()).squaredNorm();
    const double to_class = (embeddings.row(i) - means.per_class.row(c)).squaredNorm();
    value += (to_global - to_class) / n_c;
  }
  return value / static_cast<double>(c_b);
}

double batch_objective(const Matrix& embeddings, std::span<const int> labels, const MeanAccumulator& acc) {
  return batch_objective(embeddings, labels, means_from(acc));
}

Vector batch_gradient(const Matrix& inputs, const Vector& w, std::span<const int> labels, const ObjectiveMeans& means,
                      std::span<const char> skip) {
  if (inputs.rows() == 0) throw Error("empty batch");
  if (inputs.cols() != w.size()) throw Error("input and weight dimensions differ");
  const int n_classes = static_cast<int>(means.per_class.rows());
  check_labels(labels, static_cast<std::size_t>(inputs.rows()), n_classes);
  const auto counts = batch_counts(labels, n_classes);
  const std::size_t c_b = active_classes(counts, skip);

  Vector grad = Vector::Zero(w.size());
  if (c_b == 0) return grad;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (skipped(skip, c)) continue;
    const Vector v = inputs.row(i).transpose();
    const Vector u = v.cwiseProduct(w);
    const double norm = u.norm();
    if (norm < kNormFloor) throw Error("annihilated sample at row " + std::to_string(i));
    const Vector z = u / norm;
    const double n_c = static_cast<double>(counts[static_cast<std::size_t>(c)]);
    const Vector dz = (2.0 / (static_cast<double>(c_b) * n_c)) * (means.per_class.row(c).transpose() - means.global);
    grad += v.cwiseProduct(dz - z * z.dot(dz)) / norm;
  }
  return grad;
}

Vector ascent_step(const Vector& w0, const Vector& g_mean, const MintConfig& cfg) {
  if (w0.size() != g_mean.size()) throw Error("weight and gradient dimensions differ");
  // Fresh optimizer state: first and second moments start at zero.
  const Vector m = (1.0 - cfg.beta1) * g_mean;
  const Vector v = (1.0 - cfg.beta2) * g_mean.array().square().matrix();
  const Vector m_hat = m / (1.0 - cfg.beta1);
  const Vector v_hat = v / (1.0 - cfg.beta2);
  return w0 + cfg.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + cfg.ascent_eps)).matrix();
}

TextEmbeddings adjust_text(const TextEmbeddings& text, const MeanAccumulator& adapted_acc, double k_prior,
                           bool global_count) {
  if (adapted_acc.n_classes() != text.n_classes() || adapted_acc.dim() != text.dim()) {
    throw Error("accumulator shape does not match text embeddings");
  }
  TextEmbeddings out = text;
  const double k_global = static_cast<double>(adapted_acc.global_count());
  for (int c = 0; c < text.n_classes(); ++c) {
    const std::size_t k_c = adapted_acc.class_counts()[static_cast<std::size_t>(c)];
    if (k_c == 0) continue;
    const double k = global_count ? k_global : static_cast<double>(k_c);
    const double denom = k_prior + k;
    const Vector blended = (k_prior / denom) * text.rows.row(c).transpose() +
                           (k / denom) * adapted_acc.class_means().row(c).transpose();
    const double norm = blended.norm();
    if (norm < kNormFloor) throw Error("degenerate adjusted text");
    out.rows.row(c) = (blended / norm).transpose();
  }
  return out;
}

MintState::MintState(NormWeights w0, TextEmbeddings text, MintConfig config)
    : w0_(std::move(w0)), text_(std::move(text)), config_(config) {
  config_.validate();
  const auto dim = static_cast<std::size_t>(w0_.w.size());
  if (text_.dim() != dim) throw Error("text embeddings do not match the weight dimension");
  mean_acc_ = MeanAccumulator(dim, text_.n_classes());
  adapted_mean_acc_ = MeanAccumulator(dim, text_.n_classes());
  grad_acc_ = GradAccumulator(dim);
}

BatchOutcome MintState::process_batch(const Matrix& inputs) {
  if (inputs.rows() == 0) throw Error("empty batch");
  BatchOutcome out;
  BatchDiagnostics& diag = out.diagnostics;
  const int n_classes = text_.n_classes();

  out.initial_embeddings = embed_rows(inputs, w0_.w);
  out.zero_shot = predict(out.initial_embeddings, text_).labels;
  mean_acc_.update_batch(out.initial_embeddings, out.zero_shot);

  ObjectiveMeans means;
  std::vector<char> skip;
  const auto counts = batch_counts(out.zero_shot, n_classes);
  if (config_.use_mean_acc) {
    means = means_from(mean_acc_);
  } else {
    means = batch_local_means(out.initial_embeddings, out.zero_shot, n_classes);
    skip.assign(static_cast<std::size_t>(n_classes), 0);
    for (int c = 0; c < n_classes; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 1) continue;
      if (config_.singleton_policy == SingletonPolicy::kAbort) {
        throw Error("undefined objective for singleton class " + std::to_string(c) +
                    " without the mean accumulator");
      }
      skip[static_cast<std::size_t>(c)] = 1;
      ++diag.skipped_classes;
    }
  }
  for (std::size_t c = 0; c < counts.size(); ++c) diag.classes_in_batch += counts[c] > 0 ? 1 : 0;

  diag.objective = batch_objective(out.initial_embeddings, out.zero_shot, means, skip);
  const Vector g_b = batch_gradient(inputs, w0_.w, out.zero_shot, means, skip);
  diag.grad_norm = g_b.norm();
  grad_acc_.update(g_b);
  const Vector& g_step = config_.use_grad_acc ? grad_acc_.mean() : g_b;
  diag.mean_grad_norm = g_step.norm();

  const Vector w_adapted = ascent_step(w0_.w, g_step, config_);
  out.adapted_embeddings = embed_rows(inputs, w_adapted);
  adapted_mean_acc_.update_batch(out.adapted_embeddings, out.zero_shot);

  const TextEmbeddings text = config_.use_text_adjust
                                  ? adjust_text(text_, adapted_mean_acc_, config_.k_prior,
                                                config_.global_count_text_prior)
                                  : text_;
  out.predictions = predict(out.adapted_embeddings, text).labels;

  std::size_t same = 0;
  for (std::size_t i = 0; i < out.predictions.size(); ++i) same += out.predictions[i] == out.zero_shot[i] ? 1 : 0;
  diag.agreement = static_cast<double>(same) / static_cast<double>(out.predictions.size());
  return out;
}

PseudoLabeler text_labeler(const TextEmbeddings& text) {
  return [text](const LatentBatch&, const Matrix& embeddings, std::uint64_t) {
    return predict(embeddings, text).labels;
  };
}

}  // namespace mint
