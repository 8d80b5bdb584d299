#pragma once

#include <cstdint>
#include <limits>
#include <span>

// Inner loop of the per-round group knapsack. For one option of one request
// (width w, gain v) it relaxes every capacity level at once:
//
//   for c in [w, prev.size()):
//     cand = prev[c - w] + v
//     if cand > next[c]: next[c] = cand, choice[c] = option
//
// The comparison is strict, so earlier options win ties. `prev` and `next`
// must not alias. Cells initialised to kUnreachable stay negative no matter
// how many gains are added to them; reachable cells are always >= 0.

namespace ditsched::kernels {

inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::min() / 4;

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);

// Best supported ISA unless overridden by set_active_isa() or the
// DITSCHED_ISA environment variable ("scalar" / "avx2").
Isa active_isa();
void set_active_isa(Isa isa);

void relax_option_scalar(std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                         std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option);

#if defined(DITSCHED_HAVE_AVX2)
void relax_option_avx2(std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                       std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option);
#endif

using RelaxFn = void (*)(std::span<const std::int64_t>, std::span<std::int64_t>, std::span<std::int32_t>, int,
                        std::int64_t, std::int32_t);

// Kernel for `isa` without the per-call checks of relax_option(); callers
// guarantee equal buffer sizes and width >= 0.
RelaxFn relax_kernel(Isa isa);

void relax_option(Isa isa, std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                  std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option);

inline void relax_option(std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                         std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option) {
  relax_option(active_isa(), prev, next, choice, width, gain, option);
}

}  // namespace ditsched::kernels
