#pragma once

// Counter-based random streams. Every Gaussian entry is a pure function of
// (seed, stream, entry index), so sketch i draws the same matrix no matter
// which worker computes it or in what order.

#include <sketchsvd/types.hpp>

#include <array>
#include <cstdint>
#include <numbers>

namespace sketchsvd {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// SplitMix64 finalizer; used to derive seeds, never to draw samples.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Identifies one independent stream: the seed is the Philox key, the
/// stream index occupies the upper half of the counter.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// A child stream keyed by a mixed seed, for nested experiment levels.
  RngStream split(std::uint64_t child) const {
    return {mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ull * (child + 1))), 0};
  }

  /// Four raw 32-bit words for the given block counter.
  Philox4x32::Counter block(std::uint64_t counter) const {
    return Philox4x32::generate(
        {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
         static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  }

  /// Two standard normals from block `counter` via Box-Muller.
  std::array<double, 2> normal_pair(std::uint64_t counter) const {
    const auto w = block(counter);
    // 53-bit uniforms on the open interval (0, 1).
    const auto unit = [](std::uint32_t hi, std::uint32_t lo) {
      const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
      return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    };
    const double u1 = unit(w[0], w[1]);
    const double u2 = unit(w[2], w[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }
};

/// rows x cols matrix of i.i.d. standard normals, filled in column-major
/// order; entry e comes from block e / 2.
template <typename Scalar = double>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, const RngStream& stream) {
  Matrix<Scalar> out(rows, cols);
  Scalar* data = out.data();
  const auto total = static_cast<std::uint64_t>(rows * cols);
  for (std::uint64_t e = 0; e < total; e += 2) {
    const auto pair = stream.normal_pair(e / 2);
    data[e] = static_cast<Scalar>(pair[0]);
    if (e + 1 < total) data[e + 1] = static_cast<Scalar>(pair[1]);
  }
  return out;
}

}  // namespace sketchsvd
