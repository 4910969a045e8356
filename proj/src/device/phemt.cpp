#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mmpa/device.hpp"
#include "mmpa/errors.hpp"

namespace mmpa::device {

void PhemtParams::validate() const {
  auto fail = [](const char* field, double v) {
    throw InvalidArgument(fmt::format("PhemtParams: invalid {} = {}", field, v));
  };
  if (!(i_pk > 0.0)) fail("i_pk", i_pk);
  if (!(p1 > 0.0)) fail("p1", p1);
  if (!(alpha > 0.0)) fail("alpha", alpha);
  if (!std::isfinite(v_pk)) fail("v_pk", v_pk);
  if (!std::isfinite(lambda_mod)) fail("lambda_mod", lambda_mod);
  if (!(c_gs >= 0.0)) fail("c_gs", c_gs);
  if (!(c_gd >= 0.0)) fail("c_gd", c_gd);
  if (!(c_ds >= 0.0)) fail("c_ds", c_ds);
  if (!(r_g >= 0.0)) fail("r_g", r_g);
  if (!(r_d >= 0.0)) fail("r_d", r_d);
  if (!(r_s >= 0.0)) fail("r_s", r_s);
  if (!(unit_width > 0.0)) fail("unit_width", unit_width);
  if (n_fingers < 1) fail("n_fingers", n_fingers);
}

PhemtParams default_phemt() { return PhemtParams{}; }

double ids(const PhemtParams& p, double v_gs, double v_ds) {
  const auto c = p.coeffs();
  double i = 0.0;
  kernels::scalar::phemt_eval(c, &v_gs, &v_ds, &i, nullptr, nullptr, 1);
  return i;
}

IdsDerivs ids_derivs(const PhemtParams& p, double v_gs, double v_ds) {
  const auto c = p.coeffs();
  IdsDerivs d{};
  kernels::scalar::phemt_eval(c, &v_gs, &v_ds, &d.ids, &d.g_m, &d.g_ds, 1);
  return d;
}

PhemtParams scale(const PhemtParams& p, double total_width, int n_fingers) {
  if (!(total_width > 0.0)) throw InvalidArgument(fmt::format("scale: non-positive width {}", total_width));
  if (n_fingers < 1) throw InvalidArgument(fmt::format("scale: finger count {} < 1", n_fingers));
  const double k = total_width / p.unit_width;
  PhemtParams q = p;
  q.i_pk *= k;
  q.c_gs *= k;
  q.c_gd *= k;
  q.c_ds *= k;
  q.r_g /= k;
  q.r_d /= k;
  q.r_s /= k;
  q.unit_width = total_width;
  q.n_fingers = n_fingers;
  return q;
}

IvTable dc_iv_sweep(const PhemtParams& p, const std::vector<double>& v_gs_list, const std::vector<double>& v_ds_list) {
  if (v_gs_list.empty() || v_ds_list.empty()) throw InvalidArgument("dc_iv_sweep: empty bias list");
  IvTable t{v_gs_list, v_ds_list, Eigen::MatrixXd(v_gs_list.size(), v_ds_list.size())};
  const auto c = p.coeffs();
  std::vector<double> vg(v_gs_list.size()), vd(v_gs_list.size()), col(v_gs_list.size());
  for (std::size_t j = 0; j < v_ds_list.size(); ++j) {
    std::fill(vd.begin(), vd.end(), v_ds_list[j]);
    kernels::phemt_eval(c, v_gs_list, vd, col, {}, {});
    for (std::size_t i = 0; i < col.size(); ++i) t.ids(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return t;
}

std::vector<double> default_vgs_sweep() {
  std::vector<double> v(201);
  for (int i = 0; i <= 200; ++i) v[static_cast<std::size_t>(i)] = -1.5 + 0.01 * i;
  return v;
}

const char* to_string(AmpClass c) noexcept { return c == AmpClass::A ? "A" : "AB"; }

double class_fraction(AmpClass c) noexcept { return c == AmpClass::A ? 0.50 : 0.15; }

BiasPoint bias_select(const IvTable& table, AmpClass amp_class, double v_ds) {
  std::size_t col = table.v_ds.size();
  for (std::size_t j = 0; j < table.v_ds.size(); ++j)
    if (std::abs(table.v_ds[j] - v_ds) <= 1e-12 * std::max(1.0, std::abs(v_ds))) col = j;
  if (col == table.v_ds.size()) throw InvalidArgument(fmt::format("bias_select: v_ds = {} V not in table", v_ds));
  if (table.v_gs.size() < 2) throw InvalidArgument("bias_select: table needs at least two v_gs rows");

  const auto c = static_cast<Eigen::Index>(col);
  const double i_max = table.ids.col(c).maxCoeff();
  const double target = class_fraction(amp_class) * i_max;
  if (!(i_max > 0.0)) throw InvalidArgument(fmt::format("bias_select: no drain current at v_ds = {} V", v_ds));

  const auto n = table.v_gs.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double i0 = table.ids(static_cast<Eigen::Index>(i), c);
    const double i1 = table.ids(static_cast<Eigen::Index>(i + 1), c);
    if ((i0 - target) * (i1 - target) > 0.0 || i0 == i1) continue;
    const double t = (target - i0) / (i1 - i0);
    BiasPoint b;
    b.v_gs = table.v_gs[i] + t * (table.v_gs[i + 1] - table.v_gs[i]);
    b.v_ds = v_ds;
    b.i_d = target;
    b.p_dc = v_ds * target;
    return b;
  }
  throw InvalidArgument(fmt::format("bias_select: class {} current {:.4g} A outside table range at v_ds = {} V",
                                    to_string(amp_class), target, v_ds));
}

SmallSignal small_signal(const PhemtParams& p, const BiasPoint& bias) {
  const auto d = ids_derivs(p, bias.v_gs, bias.v_ds);
  return {d.g_m, d.g_ds, p.c_gs, p.c_gd, p.c_ds, p.r_g, p.r_d, p.r_s};
}

}  // namespace mmpa::device
