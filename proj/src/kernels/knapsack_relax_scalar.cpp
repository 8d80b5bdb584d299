#include <cstddef>

#include "ditsched/kernels/knapsack_relax.hpp"

namespace ditsched::kernels {

void relax_option_scalar(std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                         std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option) {
  const std::size_t n = next.size();
  for (std::size_t c = static_cast<std::size_t>(width); c < n; ++c) {
    const std::int64_t cand = prev[c - width] + gain;
    if (cand > next[c]) {
      next[c] = cand;
      choice[c] = option;
    }
  }
}

}  // namespace ditsched::kernels
