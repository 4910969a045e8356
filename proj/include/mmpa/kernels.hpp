#pragma once

// Data-parallel inner loops of the harmonic-balance engine. Every kernel has
// a scalar reference implementation and, on x86-64, an AVX2+FMA variant that
// is picked at runtime when the CPU supports it. The two are tested for
// equivalence; the scalar path is the ground truth.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mmpa::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
// Best ISA supported by both the build and the running CPU.
Isa detected_isa() noexcept;
// ISA used by the dispatching entry points below.
Isa active_isa() noexcept;
// Pins the dispatch to one ISA (nullopt restores auto-detection). Throws
// InvalidArgument if the ISA is not available.
void force_isa(std::optional<Isa> isa);

// Closed-form tanh drain-current law:
//   I = i_pk (1 + tanh(p1 (vgs - v_pk))) tanh(alpha vds) (1 + lambda vds)
struct PhemtCoeffs {
  double i_pk;
  double v_pk;
  double p1;
  double alpha;
  double lambda;
};

// Evaluates I, dI/dvgs and dI/dvds sample-wise. gm and gds may be empty
// spans when derivatives are not needed.
void phemt_eval(const PhemtCoeffs& c, std::span<const double> vgs, std::span<const double> vds,
                std::span<double> ids, std::span<double> gm, std::span<double> gds);

// Harmonic projection tables for one period sampled at n points:
// cos(2 pi k m / n) and sin(2 pi k m / n) for k = 0..max_harmonic.
class DftTable {
 public:
  DftTable(std::size_t n_samples, std::size_t max_harmonic);

  std::size_t samples() const noexcept { return n_; }
  std::size_t max_harmonic() const noexcept { return k_max_; }
  const double* cos_row(std::size_t k) const noexcept { return cos_.data() + k * n_; }
  const double* sin_row(std::size_t k) const noexcept { return sin_.data() + k * n_; }

 private:
  std::size_t n_;
  std::size_t k_max_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

// Phasors of a real periodic sequence, with x(t) = X0 + sum_k Re(Xk e^{jk w t}):
//   X0 = mean(x),  Xk = (2/n) sum_m x_m e^{-j 2 pi k m / n}.
// Fills out[0 .. out.size()-1]; out.size() - 1 must not exceed max_harmonic.
void dft_project(const DftTable& table, std::span<const double> x, std::span<std::complex<double>> out);

// Inverse of dft_project: x_m = Re(X0) + sum_k Re(Xk e^{j 2 pi k m / n}).
void idft_synthesize(const DftTable& table, std::span<const std::complex<double>> phasors, std::span<double> x);

// Fixed-ISA entry points, used by the equivalence tests.
namespace scalar {
void phemt_eval(const PhemtCoeffs& c, const double* vgs, const double* vds, double* ids, double* gm, double* gds,
                std::size_t n);
void dft_project(const double* cos_rows, const double* sin_rows, std::size_t n, const double* x, std::size_t harmonics,
                 double* re_out, double* im_out);
void idft_synthesize(const double* cos_rows, const double* sin_rows, std::size_t n, const double* re_in,
                     const double* im_in, std::size_t harmonics, double* x);
}  // namespace scalar

namespace avx2 {
void phemt_eval(const PhemtCoeffs& c, const double* vgs, const double* vds, double* ids, double* gm, double* gds,
                std::size_t n);
void dft_project(const double* cos_rows, const double* sin_rows, std::size_t n, const double* x, std::size_t harmonics,
                 double* re_out, double* im_out);
void idft_synthesize(const double* cos_rows, const double* sin_rows, std::size_t n, const double* re_in,
                     const double* im_in, std::size_t harmonics, double* x);
}  // namespace avx2

}  // namespace mmpa::kernels
