#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace lrw {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of
/// (counter, key); this is what makes replicate streams independent of the
/// order in which threads run them.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// SplitMix64 finalizer, used to hash (seed, indices...) into a Philox key.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based random stream. The key is a hash of the master seed and a
/// path of indices (replicate, level, block, ...); the counter walks through
/// Philox blocks. Every public draw consumes a fixed number of 64-bit words:
///   next_u64 / uniform / uniform_open / normal : 1 word each.
/// A stream is single-owner; copy it to fork an identical sequence.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();
  /// [0, 1) with 53 random bits.
  double uniform();
  /// (0, 1) with 53 random bits, midpoint-shifted so 0 is never returned.
  double uniform_open();
  /// Standard normal by inversion of uniform_open().
  double normal();

  std::uint64_t words_drawn() const { return drawn_; }

 private:
  PhiloxKey key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int buf_pos_ = 2;
  std::uint64_t drawn_ = 0;
};

}  // namespace lrw
