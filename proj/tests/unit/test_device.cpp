#include <doctest.h>

#include <cmath>

#include "mmpa/device.hpp"
#include "mmpa/errors.hpp"

using namespace mmpa;
using namespace mmpa::device;

TEST_CASE("ids closed form") {
  const auto p = default_phemt();
  CHECK(ids(p, -0.3, 0.0) == 0.0);

  auto q = p;
  q.lambda_mod = 0.0;
  CHECK(ids(q, q.v_pk, 20.0) == doctest::Approx(q.i_pk).epsilon(1e-12));
  CHECK(ids(p, p.v_pk - 5.0 / p.p1, 6.0) < 0.01 * p.i_pk);
  CHECK(ids(p, -0.2, -2.0) < 0.0);
}

TEST_CASE("ids is bounded") {
  const auto p = default_phemt();
  for (double vg = -4.0; vg <= 3.0; vg += 0.25)
    for (double vd = -10.0; vd <= 12.0; vd += 0.5)
      CHECK(std::abs(ids(p, vg, vd)) <= 2.0 * p.i_pk * std::abs(1.0 + p.lambda_mod * vd));
}

TEST_CASE("scale") {
  const auto p = default_phemt();
  const auto same = scale(p, p.unit_width, p.n_fingers);
  CHECK(same.i_pk == p.i_pk);
  CHECK(same.r_s == p.r_s);
  const auto d = scale(p, 2 * p.unit_width, 4);
  CHECK(d.i_pk == 2 * p.i_pk);
  CHECK(d.r_s == p.r_s / 2);
  CHECK(d.c_gs == 2 * p.c_gs);
  CHECK(d.n_fingers == 4);
  for (double vg = -1.5; vg <= 0.5; vg += 0.1)
    for (double vd = 0.0; vd <= 8.0; vd += 0.5) CHECK(ids(d, vg, vd) == 2.0 * ids(p, vg, vd));
  CHECK_THROWS_AS(scale(p, 0.0, 2), InvalidArgument);
}

TEST_CASE("dc_iv_sweep") {
  const auto p = default_phemt();
  auto one = dc_iv_sweep(p, {-0.7}, {6.0});
  CHECK(one.ids(0, 0) == ids(p, -0.7, 6.0));
  auto t = dc_iv_sweep(p, default_vgs_sweep(), {0.0, 1.0, 3.0, 6.0});
  for (Eigen::Index i = 0; i < t.ids.rows(); ++i) CHECK(t.ids(i, 0) == 0.0);
  for (Eigen::Index j = 0; j < t.ids.cols(); ++j)
    for (Eigen::Index i = 1; i < t.ids.rows(); ++i) CHECK(t.ids(i, j) >= t.ids(i - 1, j));
  CHECK_THROWS_AS(dc_iv_sweep(p, {}, {1.0}), InvalidArgument);
}

TEST_CASE("bias_select on a linear table is exact") {
  IvTable t;
  t.v_gs = {-1.0, -0.5, 0.0, 0.5, 1.0};
  t.v_ds = {6.0};
  t.ids.resize(5, 1);
  for (int i = 0; i < 5; ++i) t.ids(i, 0) = 0.1 * (t.v_gs[static_cast<std::size_t>(i)] + 1.0);  // 0 .. 0.2 A
  auto a = bias_select(t, AmpClass::A, 6.0);
  CHECK(a.v_gs == doctest::Approx(0.0));
  CHECK(a.i_d == doctest::Approx(0.1));
  CHECK(a.p_dc == doctest::Approx(0.6));
  auto ab = bias_select(t, AmpClass::AB, 6.0);
  CHECK(ab.v_gs == doctest::Approx(-0.7));
  CHECK_THROWS_AS(bias_select(t, AmpClass::A, 5.0), InvalidArgument);

  IvTable flat = t;
  for (int i = 0; i < 5; ++i) flat.ids(i, 0) = 0.05 + 0.01 * i;  // 15 % of max lies below the table
  CHECK_THROWS_AS(bias_select(flat, AmpClass::AB, 6.0), InvalidArgument);
}

TEST_CASE("default device lands on the calibrated bias points") {
  const auto p = default_phemt();
  auto t = dc_iv_sweep(p, default_vgs_sweep(), {6.0});
  auto ab = bias_select(t, AmpClass::AB, 6.0);
  auto a = bias_select(t, AmpClass::A, 6.0);
  CHECK(ab.v_gs == doctest::Approx(-0.7).epsilon(2e-3));
  CHECK(a.v_gs == doctest::Approx(-0.2).epsilon(5e-3));
  CHECK(ab.i_d < a.i_d);
  CHECK(ab.p_dc == doctest::Approx(ab.v_ds * ab.i_d));
}

TEST_CASE("small-signal derivatives match finite differences on a 20x20 grid") {
  const auto p = default_phemt();
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double vg = -1.5 + 2.0 * i / 19.0;
      const double vd = 0.05 + 7.95 * j / 19.0;
      const auto ss = small_signal(p, {vg, vd, 0.0, 0.0});
      const double gm_fd = (ids(p, vg + h, vd) - ids(p, vg - h, vd)) / (2 * h);
      const double gds_fd = (ids(p, vg, vd + h) - ids(p, vg, vd - h)) / (2 * h);
      CHECK(std::abs(ss.g_m - gm_fd) <= 1e-5 * std::abs(ss.g_m));
      CHECK(std::abs(ss.g_ds - gds_fd) <= 1e-5 * std::abs(ss.g_ds));
      CHECK(ss.g_m >= 0.0);
      CHECK(ss.g_ds >= 0.0);
    }
  }
}

TEST_CASE("small-signal limits") {
  const auto p = default_phemt();
  CHECK(small_signal(p, {-20.0, 6.0, 0, 0}).g_m < 1e-12);
  const auto z = small_signal(p, {-0.2, 0.0, 0, 0});
  CHECK(z.g_m == 0.0);
  const double gate = 1.0 + std::tanh(p.p1 * (-0.2 - p.v_pk));
  CHECK(z.g_ds == doctest::Approx(p.i_pk * gate * p.alpha));
  CHECK(z.c_gs == p.c_gs);
}

TEST_CASE("validation") {
  auto p = default_phemt();
  p.validate();
  p.i_pk = -1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = default_phemt();
  p.n_fingers = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
