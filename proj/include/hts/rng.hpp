/*
   Copyright 2026 The hts Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Philox4x32-10 counter-based generator. A stream is identified by
// (seed, stream id); block i of the stream is a pure function of the three,
// so any path or replication can be regenerated without replaying others.

#include <array>
#include <cmath>
#include <cstdint>
#include <type_traits>

namespace hts {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Maps 32 random bits to the open interval (0, 1).
inline double u32_to_open01(std::uint32_t x) {
  return (static_cast<double>(x) + 0.5) * 0x1.0p-32;
}

/// Mixes two 64-bit words into one; used to derive sub-stream ids.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream);

  /// Block `index` of this stream, independent of the read position.
  PhiloxCounter block_at(std::uint64_t index) const;

  std::uint32_t next_u32() {
    if (used_ == kBuffered) refill();
    return buf_[used_++];
  }
  double next_uniform() { return u32_to_open01(next_u32()); }  // in (0, 1)
  double next_normal();  // ziggurat

 private:
  // Blocks are generated 16 at a time (same values as block_at) so the
  // rounds vectorize across counters.
  static constexpr int kBatch = 16;
  static constexpr int kBuffered = 4 * kBatch;
  void refill();

  PhiloxKey key_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, kBuffered> buf_{};
  int used_ = kBuffered;
};

/// Standard normal by the 128-layer ziggurat (Doornik's ZIGNOR variant):
/// one 32-bit draw in about 99% of calls, 7 bits for the layer and 25 for
/// the abscissa.
template <class Draw>
double ziggurat_normal(Draw&& next_u32);

/// Box-Muller transform of two uniforms in (0, 1).
inline std::array<double, 2> box_muller(double u1, double u2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

namespace detail {
struct ZigTables {
  static constexpr int kLayers = 128;
  double x[kLayers + 1];
  double ratio[kLayers];
  ZigTables();
};
extern const ZigTables kZig;
double ziggurat_slow(std::uint32_t bits, double (*uniform)(void*), void* ctx);
}  // namespace detail

template <class Draw>
double ziggurat_normal(Draw&& next_u32) {
  const std::uint32_t bits = next_u32();
  const int i = static_cast<int>(bits & 0x7F);
  const double u = (static_cast<double>(bits >> 7) + 0.5) * 0x1.0p-24 - 1.0;  // (-1, 1)
  if (std::abs(u) < detail::kZig.ratio[i]) return u * detail::kZig.x[i];
  auto uniform = [](void* ctx) {
    return u32_to_open01((*static_cast<std::remove_reference_t<Draw>*>(ctx))());
  };
  return detail::ziggurat_slow(bits, uniform,
                               const_cast<void*>(static_cast<const void*>(&next_u32)));
}

inline double PhiloxStream::next_normal() {
  return ziggurat_normal([this] { return next_u32(); });
}

}  // namespace hts
