#include <cmath>

#include "mmpa/kernels.hpp"

namespace mmpa::kernels::scalar {

void phemt_eval(const PhemtCoeffs& c, const double* vgs, const double* vds, double* ids, double* gm, double* gds,
                std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double tg = std::tanh(c.p1 * (vgs[i] - c.v_pk));
    const double td = std::tanh(c.alpha * vds[i]);
    const double lm = 1.0 + c.lambda * vds[i];
    const double gate = 1.0 + tg;
    ids[i] = c.i_pk * gate * td * lm;
    if (gm) gm[i] = c.i_pk * c.p1 * (1.0 - tg * tg) * td * lm;
    if (gds) gds[i] = c.i_pk * gate * (c.alpha * (1.0 - td * td) * lm + td * c.lambda);
  }
}

void dft_project(const double* cos_rows, const double* sin_rows, std::size_t n, const double* x, std::size_t harmonics,
                 double* re_out, double* im_out) {
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < harmonics; ++k) {
    const double* ck = cos_rows + k * n;
    const double* sk = sin_rows + k * n;
    double sc = 0.0, ss = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
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
  for (std::size_t m = 0; m < n; ++m) {
    double acc = harmonics > 0 ? re_in[0] : 0.0;
    for (std::size_t k = 1; k < harmonics; ++k) acc += re_in[k] * cos_rows[k * n + m] - im_in[k] * sin_rows[k * n + m];
    x[m] = acc;
  }
}

}  // namespace mmpa::kernels::scalar
