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

#include "hts/rng.hpp"

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace hts {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

inline void round(PhiloxCounter& c, const PhiloxKey& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int r = 0; r < 10; ++r) {
    round(ctr, key);
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a Weyl-offset combination
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_lo_(static_cast<std::uint32_t>(stream)),
      stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

PhiloxCounter PhiloxStream::block_at(std::uint64_t index) const {
  return philox4x32_10({static_cast<std::uint32_t>(index),
                        static_cast<std::uint32_t>(index >> 32), stream_lo_, stream_hi_},
                       key_);
}

namespace {

__attribute__((target_clones("avx2", "default"))) void philox_batch(
    std::uint32_t* c0, std::uint32_t* c1, std::uint32_t* c2, std::uint32_t* c3,
    std::uint32_t k0, std::uint32_t k1, int lanes) {
  for (int r = 0; r < 10; ++r) {
    for (int i = 0; i < lanes; ++i) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c0[i];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c2[i];
      const auto n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1[i] ^ k0;
      const auto n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3[i] ^ k1;
      c1[i] = static_cast<std::uint32_t>(p1);
      c3[i] = static_cast<std::uint32_t>(p0);
      c0[i] = n0;
      c2[i] = n2;
    }
    k0 += kWeylA;
    k1 += kWeylB;
  }
}

#if defined(__x86_64__)
// 16 blocks in one pass with 32-bit lanes; even and odd lanes are multiplied
// separately and the results transposed back to block order on the way out.
__attribute__((target("avx512f"))) void philox_batch16_avx512(
    std::uint32_t* out, std::uint64_t block, std::uint32_t s0, std::uint32_t s1,
    std::uint32_t k0, std::uint32_t k1) {
  __m512i c0 = _mm512_add_epi32(_mm512_set1_epi32(static_cast<int>(block)),
                                _mm512_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12,
                                                  13, 14, 15));
  // the low word of block is a multiple of 16, so lanes never carry
  __m512i c1 = _mm512_set1_epi32(static_cast<int>(block >> 32));
  __m512i c2 = _mm512_set1_epi32(static_cast<int>(s0));
  __m512i c3 = _mm512_set1_epi32(static_cast<int>(s1));
  const __m512i ma = _mm512_set1_epi32(static_cast<int>(kMulA));
  const __m512i mb = _mm512_set1_epi32(static_cast<int>(kMulB));
  for (int r = 0; r < 10; ++r) {
    const __m512i p0e = _mm512_mul_epu32(c0, ma);
    const __m512i p0o = _mm512_mul_epu32(_mm512_srli_epi64(c0, 32), ma);
    const __m512i p1e = _mm512_mul_epu32(c2, mb);
    const __m512i p1o = _mm512_mul_epu32(_mm512_srli_epi64(c2, 32), mb);
    const __m512i lo0 = _mm512_mask_blend_epi32(0xAAAA, p0e, _mm512_slli_epi64(p0o, 32));
    const __m512i hi0 = _mm512_mask_blend_epi32(0xAAAA, _mm512_srli_epi64(p0e, 32), p0o);
    const __m512i lo1 = _mm512_mask_blend_epi32(0xAAAA, p1e, _mm512_slli_epi64(p1o, 32));
    const __m512i hi1 = _mm512_mask_blend_epi32(0xAAAA, _mm512_srli_epi64(p1e, 32), p1o);
    c0 = _mm512_ternarylogic_epi32(hi1, c1, _mm512_set1_epi32(static_cast<int>(k0)), 0x96);
    c2 = _mm512_ternarylogic_epi32(hi0, c3, _mm512_set1_epi32(static_cast<int>(k1)), 0x96);
    c1 = lo1;
    c3 = lo0;
    k0 += kWeylA;
    k1 += kWeylB;
  }
  const __m512i t0 = _mm512_unpacklo_epi32(c0, c1), t1 = _mm512_unpackhi_epi32(c0, c1);
  const __m512i t2 = _mm512_unpacklo_epi32(c2, c3), t3 = _mm512_unpackhi_epi32(c2, c3);
  const __m512i u0 = _mm512_unpacklo_epi64(t0, t2), u1 = _mm512_unpackhi_epi64(t0, t2);
  const __m512i u2 = _mm512_unpacklo_epi64(t1, t3), u3 = _mm512_unpackhi_epi64(t1, t3);
  const __m512i v0 = _mm512_shuffle_i32x4(u0, u1, 0x44), v1 = _mm512_shuffle_i32x4(u2, u3, 0x44);
  const __m512i v2 = _mm512_shuffle_i32x4(u0, u1, 0xEE), v3 = _mm512_shuffle_i32x4(u2, u3, 0xEE);
  _mm512_storeu_si512(out, _mm512_shuffle_i32x4(v0, v1, 0x88));
  _mm512_storeu_si512(out + 16, _mm512_shuffle_i32x4(v0, v1, 0xDD));
  _mm512_storeu_si512(out + 32, _mm512_shuffle_i32x4(v2, v3, 0x88));
  _mm512_storeu_si512(out + 48, _mm512_shuffle_i32x4(v2, v3, 0xDD));
}

const bool kHaveAvx512 = __builtin_cpu_supports("avx512f");
#endif

}  // namespace

void PhiloxStream::refill() {
#if defined(__x86_64__)
  if (kHaveAvx512) {
    static_assert(kBatch == 16);
    philox_batch16_avx512(buf_.data(), block_, stream_lo_, stream_hi_, key_[0], key_[1]);
    block_ += kBatch;
    used_ = 0;
    return;
  }
#endif
  std::uint32_t c0[kBatch], c1[kBatch], c2[kBatch], c3[kBatch];
  for (int i = 0; i < kBatch; ++i) {
    const std::uint64_t idx = block_ + static_cast<std::uint64_t>(i);
    c0[i] = static_cast<std::uint32_t>(idx);
    c1[i] = static_cast<std::uint32_t>(idx >> 32);
    c2[i] = stream_lo_;
    c3[i] = stream_hi_;
  }
  philox_batch(c0, c1, c2, c3, key_[0], key_[1], kBatch);
  for (int i = 0; i < kBatch; ++i) {
    buf_[4 * i] = c0[i];
    buf_[4 * i + 1] = c1[i];
    buf_[4 * i + 2] = c2[i];
    buf_[4 * i + 3] = c3[i];
  }
  block_ += kBatch;
  used_ = 0;
}

namespace detail {

namespace {
constexpr double kZigR = 3.442619855899;             // start of the tail
constexpr double kZigV = 9.91256303526217e-3;        // area of each layer
}  // namespace

ZigTables::ZigTables() {
  double f = std::exp(-0.5 * kZigR * kZigR);
  x[0] = kZigV / f;
  x[1] = kZigR;
  x[kLayers] = 0.0;
  for (int i = 2; i < kLayers; ++i) {
    x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
    f = std::exp(-0.5 * x[i] * x[i]);
  }
  for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
}

const ZigTables kZig;

double ziggurat_slow(std::uint32_t bits, double (*uniform)(void*), void* ctx) {
  for (bool first = true;; first = false) {
    if (!first) bits = static_cast<std::uint32_t>(uniform(ctx) * 0x1.0p32);
    const int i = static_cast<int>(bits & 0x7F);
    const double u = (static_cast<double>(bits >> 7) + 0.5) * 0x1.0p-24 - 1.0;
    if (!first && std::abs(u) < kZig.ratio[i]) return u * kZig.x[i];
    if (i == 0) {
      double t, y;
      do {
        t = std::log(uniform(ctx)) / kZigR;
        y = std::log(uniform(ctx));
      } while (-2.0 * y < t * t);
      return u < 0.0 ? t - kZigR : kZigR - t;
    }
    const double xv = u * kZig.x[i];
    const double f0 = std::exp(-0.5 * (kZig.x[i] * kZig.x[i] - xv * xv));
    const double f1 = std::exp(-0.5 * (kZig.x[i + 1] * kZig.x[i + 1] - xv * xv));
    if (f1 + uniform(ctx) * (f0 - f1) < 1.0) return xv;
  }
}

}  // namespace detail

}  // namespace hts
