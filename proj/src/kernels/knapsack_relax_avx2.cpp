#include <immintrin.h>

#include <cstddef>

#include "ditsched/kernels/knapsack_relax.hpp"

namespace ditsched::kernels {

void relax_option_avx2(std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                       std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option) {
  const std::size_t n = next.size();
  std::size_t c = static_cast<std::size_t>(width);
  const __m256i vgain = _mm256_set1_epi64x(gain);
  const __m128i vopt = _mm_set1_epi32(option);
  // Gathers the low dword of each 64-bit mask lane into a 4 x 32 mask.
  const __m256i pack = _mm256_setr_epi32(0, 2, 4, 6, 0, 2, 4, 6);

  for (; c + 4 <= n; c += 4) {
    const __m256i src = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(prev.data() + (c - width)));
    const __m256i cur = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(next.data() + c));
    const __m256i cand = _mm256_add_epi64(src, vgain);
    const __m256i gt = _mm256_cmpgt_epi64(cand, cur);
    if (_mm256_testz_si256(gt, gt)) continue;
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(next.data() + c), _mm256_blendv_epi8(cur, cand, gt));
    const __m128i gt32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(gt, pack));
    auto* ch = reinterpret_cast<__m128i*>(choice.data() + c);
    _mm_storeu_si128(ch, _mm_blendv_epi8(_mm_loadu_si128(ch), vopt, gt32));
  }
  for (; c < n; ++c) {
    const std::int64_t cand = prev[c - width] + gain;
    if (cand > next[c]) {
      next[c] = cand;
      choice[c] = option;
    }
  }
}

}  // namespace ditsched::kernels
