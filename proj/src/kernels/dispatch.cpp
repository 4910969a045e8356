#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

#include "mmpa/errors.hpp"
#include "mmpa/kernels.hpp"

namespace mmpa::kernels {

namespace {

// -1: auto, otherwise static_cast<int>(Isa).
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() noexcept {
#if defined(MMPA_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

bool isa_available(Isa isa) noexcept { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa detected_isa() noexcept {
  static const Isa best = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
  return best;
}

Isa active_isa() noexcept {
  const int forced = g_forced.load(std::memory_order_relaxed);
  return forced < 0 ? detected_isa() : static_cast<Isa>(forced);
}

void force_isa(std::optional<Isa> isa) {
  if (isa && !isa_available(*isa))
    throw InvalidArgument("kernel ISA '" + std::string(isa_name(*isa)) + "' is not available on this build/CPU");
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

DftTable::DftTable(std::size_t n_samples, std::size_t max_harmonic)
    : n_(n_samples), k_max_(max_harmonic), cos_((max_harmonic + 1) * n_samples), sin_((max_harmonic + 1) * n_samples) {
  if (n_samples == 0) throw InvalidArgument("DftTable: zero samples");
  for (std::size_t k = 0; k <= max_harmonic; ++k) {
    for (std::size_t m = 0; m < n_samples; ++m) {
      // Reduce k*m modulo n first so the angle stays in [0, 2 pi).
      const auto idx = static_cast<double>((k * m) % n_samples);
      const double theta = 2.0 * std::numbers::pi * idx / static_cast<double>(n_samples);
      cos_[k * n_ + m] = std::cos(theta);
      sin_[k * n_ + m] = std::sin(theta);
    }
  }
}

void phemt_eval(const PhemtCoeffs& c, std::span<const double> vgs, std::span<const double> vds,
                std::span<double> ids, std::span<double> gm, std::span<double> gds) {
  const std::size_t n = vgs.size();
  if (vds.size() != n || ids.size() != n || (!gm.empty() && gm.size() != n) || (!gds.empty() && gds.size() != n))
    throw InvalidArgument("phemt_eval: span sizes differ");
  double* gm_p = gm.empty() ? nullptr : gm.data();
  double* gds_p = gds.empty() ? nullptr : gds.data();
#if defined(MMPA_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::Avx2) return avx2::phemt_eval(c, vgs.data(), vds.data(), ids.data(), gm_p, gds_p, n);
#endif
  scalar::phemt_eval(c, vgs.data(), vds.data(), ids.data(), gm_p, gds_p, n);
}

void dft_project(const DftTable& t, std::span<const double> x, std::span<std::complex<double>> out) {
  if (x.size() != t.samples()) throw InvalidArgument("dft_project: sample count differs from table");
  if (out.empty() || out.size() - 1 > t.max_harmonic()) throw InvalidArgument("dft_project: harmonic count out of range");
  const std::size_t h = out.size();
  std::vector<double> re(h), im(h);
#if defined(MMPA_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::Avx2)
    avx2::dft_project(t.cos_row(0), t.sin_row(0), t.samples(), x.data(), h, re.data(), im.data());
  else
#endif
    scalar::dft_project(t.cos_row(0), t.sin_row(0), t.samples(), x.data(), h, re.data(), im.data());
  for (std::size_t k = 0; k < h; ++k) out[k] = {re[k], im[k]};
}

void idft_synthesize(const DftTable& t, std::span<const std::complex<double>> phasors, std::span<double> x) {
  if (x.size() != t.samples()) throw InvalidArgument("idft_synthesize: sample count differs from table");
  if (phasors.empty() || phasors.size() - 1 > t.max_harmonic())
    throw InvalidArgument("idft_synthesize: harmonic count out of range");
  const std::size_t h = phasors.size();
  std::vector<double> re(h), im(h);
  for (std::size_t k = 0; k < h; ++k) {
    re[k] = phasors[k].real();
    im[k] = phasors[k].imag();
  }
#if defined(MMPA_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::Avx2)
    return avx2::idft_synthesize(t.cos_row(0), t.sin_row(0), t.samples(), re.data(), im.data(), h, x.data());
#endif
  scalar::idft_synthesize(t.cos_row(0), t.sin_row(0), t.samples(), re.data(), im.data(), h, x.data());
}

}  // namespace mmpa::kernels
