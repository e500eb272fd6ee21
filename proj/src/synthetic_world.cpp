#include "mint/synthetic_world.hpp"

#include "mint/rng.hpp"

#include <numeric>
#include <utility>

namespace mint {

LatentBatch sample_latents(const LatentParams& p, std::size_t batch_size, std::uint64_t seed,
                           LabelMode mode) {
  p.validate();
  if (batch_size < 1) throw Error("batch size must be >= 1", ErrorKind::kUsage);
  RandomStream rng(seed);

  LatentBatch batch;
  batch.severity = p.severity;
  batch.gt_labels.resize(batch_size);
  if (mode == LabelMode::kUniform) {
    for (auto& y : batch.gt_labels) y = rng.coin() ? 1 : 0;
  } else {
    for (std::size_t i = 0; i < batch_size; ++i) batch.gt_labels[i] = i < batch_size / 2 ? 0 : 1;
    for (std::size_t i = batch_size; i > 1; --i) {
      std::swap(batch.gt_labels[i - 1], batch.gt_labels[rng.below(i)]);
    }
  }

  const SegmentLayout layout = p.layout();
  const auto rows = static_cast<Eigen::Index>(batch_size);
  batch.latents.resize(rows, static_cast<Eigen::Index>(layout.total()));
  const auto cls = static_cast<Eigen::Index>(layout.cls);
  const auto irr_at = static_cast<Eigen::Index>(layout.offset(Segment::kIrr));
  const auto shift_at = static_cast<Eigen::Index>(layout.offset(Segment::kShift));
  const auto noise_at = static_cast<Eigen::Index>(layout.offset(Segment::kNoise));
  const Vector shift = p.severity * p.delta;

  for (Eigen::Index i = 0; i < rows; ++i) {
    auto row = batch.latents.row(i);
    const double sign = batch.gt_labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    row.head(cls) = sign * p.mu.transpose();
    for (std::size_t j = 0; j < p.d_irr; ++j) row(irr_at + static_cast<Eigen::Index>(j)) = rng.rademacher();
    row.segment(shift_at, shift.size()) = shift.transpose();
    for (std::size_t j = 0; j < p.d_noise; ++j) {
      row(noise_at + static_cast<Eigen::Index>(j)) = p.severity * rng.rademacher();
    }
  }
  return batch;
}

Matrix embed_rows(const Matrix& latents, const Vector& w) {
  if (latents.cols() != w.size()) {
    throw Error("weight length " + std::to_string(w.size()) + " does not match latent dim " +
                std::to_string(latents.cols()));
  }
  Matrix z = latents.array().rowwise() * w.transpose().array();
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    if (!(norm >= 1e-30)) throw Error("annihilated sample at row " + std::to_string(i));
    z.row(i) /= norm;
  }
  return z;
}

EmbeddingSet embed(const LatentBatch& batch, const NormWeights& w) {
  EmbeddingSet out;
  out.data = embed_rows(batch.latents, w.w);
  out.labels = batch.gt_labels;
  out.n_classes = 2;
  return out;
}

TextEmbeddings make_text_embeddings(const LatentParams& p, double contamination, std::uint64_t seed) {
  p.validate();
  if (!(contamination >= 0.0)) throw Error("contamination must be >= 0", ErrorKind::kUsage);
  const SegmentLayout layout = p.layout();
  const auto d = static_cast<Eigen::Index>(layout.total());
  const auto cls = static_cast<Eigen::Index>(layout.cls);
  const RandomStream root(seed);

  TextEmbeddings text;
  text.rows.resize(2, d);
  for (int c = 0; c < 2; ++c) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(c));
    Vector eta(d - cls);
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (Eigen::Index j = 0; j < eta.size(); ++j) eta(j) = rng.normal();
      norm = eta.norm();
    }
    eta /= norm;
    Vector row(d);
    row.head(cls) = (c == 1 ? 1.0 : -1.0) * p.mu;
    row.tail(d - cls) = contamination * eta;
    text.rows.row(c) = row.normalized().transpose();
  }
  return text;
}

BatchStream::BatchStream(std::vector<ScheduleEntry> schedule, std::uint64_t seed, ScheduleOrder order)
    : schedule_(std::move(schedule)), emitted_(schedule_.size(), 0), seed_(seed), order_(order) {
  if (schedule_.empty()) throw Error("stream schedule is empty", ErrorKind::kUsage);
  for (const auto& entry : schedule_) {
    entry.params.validate();
    if (entry.batch_size < 1) throw Error("schedule batch size must be >= 1", ErrorKind::kUsage);
  }
}

std::size_t BatchStream::total_batches() const {
  return std::accumulate(schedule_.begin(), schedule_.end(), std::size_t{0},
                         [](std::size_t acc, const ScheduleEntry& e) { return acc + e.n_batches; });
}

std::optional<LatentBatch> BatchStream::next() {
  const std::size_t n = schedule_.size();
  std::size_t picked = n;
  if (order_ == ScheduleOrder::kSequential) {
    while (cursor_ < n && emitted_[cursor_] >= schedule_[cursor_].n_batches) ++cursor_;
    picked = cursor_;
  } else {
    for (std::size_t tries = 0; tries < n; ++tries) {
      const std::size_t k = (cursor_ + tries) % n;
      if (emitted_[k] < schedule_[k].n_batches) {
        picked = k;
        cursor_ = (k + 1) % n;
        break;
      }
    }
  }
  if (picked >= n) return std::nullopt;

  const ScheduleEntry& entry = schedule_[picked];
  const RandomStream child = RandomStream(seed_).split(produced_);
  LatentBatch batch = sample_latents(entry.params, entry.batch_size, child.seed() ^ child.stream_id());
  batch.tag = entry.tag;
  ++emitted_[picked];
  ++produced_;
  return batch;
}

std::vector<LatentBatch> BatchStream::collect() {
  std::vector<LatentBatch> out;
  out.reserve(total_batches());
  while (auto batch = next()) out.push_back(std::move(*batch));
  return out;
}

}  // namespace mint
