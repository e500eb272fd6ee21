#pragma once

#include <array>
#include <cstdint>

namespace mint {

// Philox4x32-10 (Salmon et al., Random123). Stateless: a counter and a key
// map to 128 random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter generate(Counter counter, Key key);
};

/// Seedable, splittable stream over Philox. A stream is identified by
/// (seed, stream id); draws walk the counter. `split(i)` yields an
/// independent child stream that does not depend on how many values the
/// parent has consumed, so shards and batches can be generated in any order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  RandomStream split(std::uint64_t child) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  double normal();
  bool coin() { return (next_u32() & 1u) != 0; }
  /// +1 or -1 with equal probability.
  double rademacher() { return coin() ? 1.0 : -1.0; }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
};

}  // namespace mint
