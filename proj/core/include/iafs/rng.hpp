#pragma once

#include <array>
#include <cstdint>

namespace iafs {

/// Counter-based generator (Philox4x32-10).
///
/// A generator is identified by a 64-bit key and a 64-bit stream id; the
/// output is a pure function of (key, stream, counter). `split` derives an
/// independent child stream, so adding particles or timesteps never shifts
/// the draws of existing ones. Not thread-safe: one owner per instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  /// Child generator keyed by (this stream, id). Does not advance *this.
  [[nodiscard]] Rng split(std::uint64_t id) const;

  std::uint64_t next_u64();
  std::uint32_t next_u32();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

  /// One Philox4x32-10 block; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> counter,
                                                   std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; used for key derivation and config hashing.
std::uint64_t mix64(std::uint64_t x);

}  // namespace iafs
