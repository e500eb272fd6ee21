#include "mint/rng.hpp"

#include <cmath>
#include <numbers>

namespace mint {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

Philox4x32::Key key_of(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

RandomStream RandomStream::split(std::uint64_t child) const {
  // Counter words 2..3 carry the parent stream id; the top bit of word 1 marks
  // derivation blocks so they never coincide with draw blocks.
  const Philox4x32::Counter ctr{
      static_cast<std::uint32_t>(child), static_cast<std::uint32_t>(child >> 32) | 0x80000000u,
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const auto out = Philox4x32::generate(ctr, key_of(seed_ ^ 0x5851F42D4C957F2Dull));
  const std::uint64_t child_seed = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t child_stream = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  return RandomStream(child_seed, child_stream);
}

std::uint32_t RandomStream::next_u32() {
  if (buffered_ == 0) {
    const Philox4x32::Counter ctr{
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32) & 0x7FFFFFFFu,
        static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    buffer_ = Philox4x32::generate(ctr, key_of(seed_));
    ++counter_;
    buffered_ = 4;
  }
  return buffer_[4 - buffered_--];
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open_low() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RandomStream::normal() {
  const double r = std::sqrt(-2.0 * std::log(uniform_open_low()));
  return r * std::cos(2.0 * std::numbers::pi * uniform());
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  // reject the partial top bucket so the modulo is unbiased
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace mint
