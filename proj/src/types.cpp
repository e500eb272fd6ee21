#include "mint/types.hpp"

#include <cmath>

namespace mint {

std::size_t SegmentLayout::offset(Segment s) const {
  switch (s) {
    case Segment::kCls: return 0;
    case Segment::kIrr: return cls;
    case Segment::kShift: return cls + irr;
    case Segment::kNoise: return cls + irr + shift;
  }
  return 0;
}

std::size_t SegmentLayout::length(Segment s) const {
  switch (s) {
    case Segment::kCls: return cls;
    case Segment::kIrr: return irr;
    case Segment::kShift: return shift;
    case Segment::kNoise: return noise;
  }
  return 0;
}

NormWeights NormWeights::ones(const SegmentLayout& layout) {
  return {Vector::Ones(static_cast<Eigen::Index>(layout.total())), layout};
}

LatentParams LatentParams::uniform(std::size_t d_cls, double mu_sq, std::size_t d_irr,
                                   std::size_t d_shift, double delta_sq, std::size_t d_noise,
                                   double severity) {
  LatentParams p;
  p.mu = Vector::Constant(static_cast<Eigen::Index>(d_cls), std::sqrt(mu_sq / static_cast<double>(d_cls)));
  p.delta = Vector::Constant(static_cast<Eigen::Index>(d_shift),
                             std::sqrt(delta_sq / static_cast<double>(d_shift)));
  p.d_irr = d_irr;
  p.d_noise = d_noise;
  p.severity = severity;
  p.validate();
  return p;
}

void LatentParams::validate() const {
  if (mu.size() < 1 || delta.size() < 1 || d_irr < 1 || d_noise < 1) {
    throw Error("latent params: every dimension count must be >= 1", ErrorKind::kUsage);
  }
  if (!(mu.norm() > 0.0)) {
    throw Error("latent params: class mean must be nonzero", ErrorKind::kUsage);
  }
  if (!(severity >= 0.0) || !std::isfinite(severity)) {
    throw Error("latent params: severity must be finite and >= 0", ErrorKind::kUsage);
  }
}

}  // namespace mint
