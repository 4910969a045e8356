// Compiled with -mavx2 -mfma. Keep this translation unit free of inline
// library code that could be shared with the portable objects: raw pointers
// in, raw pointers out, tails delegated to the scalar kernels.

#include <immintrin.h>

#include <cstddef>

#include "mmpa/kernels.hpp"

namespace mmpa::kernels::avx2 {

namespace {

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

// Cephes-style exp for x in [-708, 708].
inline __m256d exp_pd(__m256d x) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634073599)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, set1(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(n, set1(1.42860682030941723212E-6), x);
  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = set1(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, xx, set1(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, xx, set1(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, x);
  __m256d q = set1(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, xx, set1(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, xx, set1(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, xx, set1(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  r = _mm256_fmadd_pd(r, set1(2.0), set1(1.0));
  __m256i e = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(e));
}

// tanh with a rational core below 0.625 and 1 - 2/(e^{2x}+1) above.
inline __m256d tanh_pd(__m256d x) {
  const __m256d sign_mask = set1(-0.0);
  const __m256d sign = _mm256_and_pd(x, sign_mask);
  __m256d ax = _mm256_andnot_pd(sign_mask, x);

  const __m256d z = _mm256_mul_pd(ax, ax);
  __m256d p = set1(-9.64399179425052238628E-1);
  p = _mm256_fmadd_pd(p, z, set1(-9.92877231001918586564E1));
  p = _mm256_fmadd_pd(p, z, set1(-1.61468768441708447952E3));
  __m256d q = _mm256_add_pd(z, set1(1.12811678491632931402E2));
  q = _mm256_fmadd_pd(q, z, set1(2.23548839060100448583E3));
  q = _mm256_fmadd_pd(q, z, set1(4.84406305325125486048E3));
  const __m256d small = _mm256_fmadd_pd(_mm256_mul_pd(ax, z), _mm256_div_pd(p, q), ax);

  const __m256d clamped = _mm256_min_pd(ax, set1(22.0));
  const __m256d s = exp_pd(_mm256_add_pd(clamped, clamped));
  const __m256d large = _mm256_sub_pd(set1(1.0), _mm256_div_pd(set1(2.0), _mm256_add_pd(s, set1(1.0))));

  const __m256d use_large = _mm256_cmp_pd(ax, set1(0.625), _CMP_GE_OQ);
  const __m256d mag = _mm256_blendv_pd(small, large, use_large);
  return _mm256_or_pd(mag, sign);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void phemt_eval(const PhemtCoeffs& c, const double* vgs, const double* vds, double* ids, double* gm, double* gds,
                std::size_t n) {
  const __m256d i_pk = set1(c.i_pk), v_pk = set1(c.v_pk), p1 = set1(c.p1);
  const __m256d alpha = set1(c.alpha), lambda = set1(c.lambda), one = set1(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(vgs + i);
    const __m256d vd = _mm256_loadu_pd(vds + i);
    const __m256d tg = tanh_pd(_mm256_mul_pd(p1, _mm256_sub_pd(vg, v_pk)));
    const __m256d td = tanh_pd(_mm256_mul_pd(alpha, vd));
    const __m256d lm = _mm256_fmadd_pd(lambda, vd, one);
    const __m256d gate = _mm256_add_pd(one, tg);
    const __m256d td_lm = _mm256_mul_pd(td, lm);
    _mm256_storeu_pd(ids + i, _mm256_mul_pd(_mm256_mul_pd(i_pk, gate), td_lm));
    if (gm) {
      const __m256d sech2 = _mm256_fnmadd_pd(tg, tg, one);
      _mm256_storeu_pd(gm + i, _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(i_pk, p1), sech2), td_lm));
    }
    if (gds) {
      const __m256d sech2 = _mm256_fnmadd_pd(td, td, one);
      const __m256d inner = _mm256_fmadd_pd(_mm256_mul_pd(alpha, sech2), lm, _mm256_mul_pd(td, lambda));
      _mm256_storeu_pd(gds + i, _mm256_mul_pd(_mm256_mul_pd(i_pk, gate), inner));
    }
  }
  if (i < n)
    scalar::phemt_eval(c, vgs + i, vds + i, ids + i, gm ? gm + i : nullptr, gds ? gds + i : nullptr, n - i);
}

void dft_project(const double* cos_rows, const double* sin_rows, std::size_t n, const double* x, std::size_t harmonics,
                 double* re_out, double* im_out) {
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < harmonics; ++k) {
    const double* ck = cos_rows + k * n;
    const double* sk = sin_rows + k * n;
    __m256d ac = _mm256_setzero_pd(), as = _mm256_setzero_pd();
    std::size_t m = 0;
    for (; m + 4 <= n; m += 4) {
      const __m256d xv = _mm256_loadu_pd(x + m);
      ac = _mm256_fmadd_pd(xv, _mm256_loadu_pd(ck + m), ac);
      as = _mm256_fmadd_pd(xv, _mm256_loadu_pd(sk + m), as);
    }
    double sc = hsum(ac), ss = hsum(as);
    for (; m < n; ++m) {
      sc += x[m] * ck[m];
      ss += x[m] * sk[m];
    }
    const double scale = (k == 0 ? 1.0 : 2.0) * inv_n;
    re_out[k] = sc * scale;
    im_out[k] = k == 0 ? 0.0 : -ss * scale;
  }
}

void idft_synthesize(const double* cos_rows, const double* sin_rows, std::size_t n, const double* re_in,
                     const double* im_in, std::size_t harmonics, double* x) {
  const double dc = harmonics > 0 ? re_in[0] : 0.0;
  std::size_t m = 0;
  for (; m + 4 <= n; m += 4) {
    __m256d acc = set1(dc);
    for (std::size_t k = 1; k < harmonics; ++k) {
      acc = _mm256_fmadd_pd(set1(re_in[k]), _mm256_loadu_pd(cos_rows + k * n + m), acc);
      acc = _mm256_fnmadd_pd(set1(im_in[k]), _mm256_loadu_pd(sin_rows + k * n + m), acc);
    }
    _mm256_storeu_pd(x + m, acc);
  }
  for (; m < n; ++m) {
    double acc = dc;
    for (std::size_t k = 1; k < harmonics; ++k) acc += re_in[k] * cos_rows[k * n + m] - im_in[k] * sin_rows[k * n + m];
    x[m] = acc;
  }
}

}  // namespace mmpa::kernels::avx2
