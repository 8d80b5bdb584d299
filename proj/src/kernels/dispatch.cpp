#include <atomic>
#include <cstdlib>
#include <string_view>

#include "ditsched/error.hpp"
#include "ditsched/kernels/knapsack_relax.hpp"

namespace ditsched::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("DITSCHED_ISA")) {
    std::string_view v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(DITSCHED_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) fail(ErrorKind::Config, std::string("ISA not supported on this CPU: ") + isa_name(isa));
  active().store(isa, std::memory_order_relaxed);
}

RelaxFn relax_kernel(Isa isa) {
#if defined(DITSCHED_HAVE_AVX2)
  if (isa == Isa::Avx2) return &relax_option_avx2;
#endif
  (void)isa;
  return &relax_option_scalar;
}

void relax_option(Isa isa, std::span<const std::int64_t> prev, std::span<std::int64_t> next,
                  std::span<std::int32_t> choice, int width, std::int64_t gain, std::int32_t option) {
  if (width < 0 || prev.size() != next.size() || choice.size() != next.size())
    fail(ErrorKind::Internal, "relax_option: mismatched buffers");
#if defined(DITSCHED_HAVE_AVX2)
  if (isa == Isa::Avx2) return relax_option_avx2(prev, next, choice, width, gain, option);
#endif
  relax_option_scalar(prev, next, choice, width, gain, option);
}

}  // namespace ditsched::kernels
