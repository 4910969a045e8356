#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mmpa/elements.hpp"
#include "mmpa/errors.hpp"
#include "mmpa/units.hpp"

using namespace mmpa;
using namespace mmpa::elements;
using rf::cplx;

namespace {

const cplx kJ{0.0, 1.0};

TLineSpec line(double z, double deg, double f) { return TLineSpec{z, deg, f, std::nullopt, 1.0}; }

void check_lossless_reciprocal(const rf::NPortNetwork& n) {
  auto f = rf::check_linear(n);
  CHECK(f.reciprocal);
  CHECK(f.passive);
  CHECK(f.lossless);
}

}  // namespace

TEST_CASE("tl_twoport") {
  auto g = rf::FrequencyGrid::single(90e9);
  auto s = tl_twoport(line(50, 90, 90e9), g);
  CHECK(std::abs(s(0, 0, 0)) < 1e-15);
  CHECK(std::abs(s(0, 1, 0) - (-kJ)) < 1e-15);

  CHECK(std::abs(tl_input_impedance(line(70.711, 90, 90e9), 100.0, 90e9) - 50.0) < 0.01);
  CHECK(std::abs(tl_input_impedance(line(std::sqrt(5000.0), 90, 90e9), 100.0, 90e9) - 50.0) < 1e-10);

  auto tiny = tl_twoport(line(50, 0.001, 90e9), g);
  CHECK(std::abs(tiny(0, 1, 0) - 1.0) < 1e-4);
  CHECK(std::abs(tiny(0, 0, 0)) < 1e-4);

  auto a = tl_twoport(line(37, 65, 90e9), g);
  auto b = tl_twoport(line(37, 65 + 360, 90e9), g);
  CHECK((a.at(0) - b.at(0)).cwiseAbs().maxCoeff() < 1e-9);

  check_lossless_reciprocal(tl_twoport(line(37, 65, 90e9), rf::make_grid(1e9, 200e9, 50)));

  auto lossy = line(50, 90, 90e9);
  lossy.loss_db_per_mm = 0.5;
  lossy.eps_eff = 8.3;
  auto ln = tl_twoport(lossy, g);
  const double len_mm = electrical_to_physical(90, 90e9, 8.3) * 1e3;
  CHECK(rf::mag_to_db(std::abs(ln(0, 1, 0))) == doctest::Approx(-0.5 * len_mm).epsilon(1e-9));
  auto lf = rf::check_linear(ln);
  CHECK(lf.passive);
  CHECK(lf.reciprocal);
  CHECK_FALSE(lf.lossless);

  CHECK_THROWS_AS(tl_twoport(line(-1, 90, 90e9), g), InvalidArgument);
}

TEST_CASE("quarter_wave_transformer") {
  auto q = quarter_wave_transformer(50, 25, 90e9);
  CHECK(std::abs(q.z_c - 35.3553) < 5e-5);
  CHECK(q.electrical_length == 90.0);
  CHECK(quarter_wave_transformer(50, 50, 1e9).z_c == 50.0);
  auto q2 = quarter_wave_transformer(50, 100, 90e9);
  CHECK(std::abs(q2.z_c - 70.7107) < 5e-5);
  const cplx zin = tl_input_impedance(q2, 100.0, 90e9);
  CHECK(std::abs(rf::gamma_of(zin, 50.0)) < 1e-10);
  CHECK_THROWS_AS(quarter_wave_transformer(-50, 25, 90e9), InvalidArgument);
  CHECK_THROWS_AS(quarter_wave_transformer(50, 0, 90e9), InvalidArgument);
}

TEST_CASE("microstrip analyze against the frozen oracle") {
  const auto sub = default_substrate();
  auto p = microstrip_analyze({70e-6, 1e-3}, sub, 90e9);
  // tests/oracles/microstrip_oracle.py
  CHECK(p.z0 == doctest::Approx(51.007920135189).epsilon(1e-11));
  CHECK(p.eps_eff == doctest::Approx(8.299831803259).epsilon(1e-11));
  CHECK(p.z0 > 40.0);
  CHECK(p.z0 < 60.0);
  CHECK(p.loss_db_per_mm > 0.0);

  double prev = 1e9;
  for (double u = 0.1; u <= 10.0; u *= 1.1) {
    const double z = microstrip_analyze({u * sub.height, 1e-3}, sub, 90e9).z0;
    CHECK(z < prev);
    prev = z;
  }
  SubstrateSpec air{1.0, 100e-6, 0.0, 0.0};
  CHECK(microstrip_analyze({100e-6, 1e-3}, air, 90e9).eps_eff == 1.0);
  CHECK_THROWS_AS(microstrip_analyze({5e-6, 1e-3}, sub, 90e9), InvalidArgument);
  CHECK_THROWS_AS(microstrip_analyze({2e-3, 1e-3}, sub, 90e9), InvalidArgument);
}

TEST_CASE("microstrip synthesize") {
  const auto sub = default_substrate();
  auto s = microstrip_synthesize(50.0, sub, 90e9);
  CHECK(s.w_over_h == doctest::Approx(0.732868323551).epsilon(1e-9));
  CHECK(s.eps_eff == doctest::Approx(8.326856476910).epsilon(1e-9));
  CHECK(s.w_over_h > 0.5);
  CHECK(s.w_over_h < 1.2);

  const double w = 70e-6;
  const double z = microstrip_analyze({w, 1e-3}, sub, 90e9).z0;
  CHECK(std::abs(microstrip_synthesize(z, sub, 90e9).geom.width - w) < 1e-3 * w);

  for (double zt = 30.0; zt <= 90.0; zt += 2.5) {
    auto r = microstrip_synthesize(zt, sub, 90e9);
    CHECK(std::abs(microstrip_analyze(r.geom, sub, 90e9).z0 - zt) < 0.01);
  }
  try {
    microstrip_synthesize(500.0, sub, 90e9);
    FAIL("expected range error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("8.7560") != std::string::npos);
    CHECK(std::string(e.what()).find("94.9486") != std::string::npos);
  }
}

TEST_CASE("electrical_to_physical") {
  CHECK(electrical_to_physical(90, 90e9, 6.76) == doctest::Approx(320.3e-6).epsilon(1e-4));
  CHECK(electrical_to_physical(90, 90e9, 1.0) == doctest::Approx(832.8e-6).epsilon(1e-4));
  CHECK(electrical_to_physical(360, 10e9, 4.0) == doctest::Approx(kSpeedOfLight / 10e9 / 2.0));
  CHECK_THROWS_AS(electrical_to_physical(90, 90e9, 0.5), InvalidArgument);
}

TEST_CASE("stubs") {
  CHECK(std::abs(stub_admittance(StubKind::Open, 50, 45, 90e9, 90e9) - kJ / 50.0) < 1e-15);
  CHECK(std::abs(stub_admittance(StubKind::Open, 50, 1e-6, 90e9, 90e9)) < 1e-9);
  CHECK(std::abs(stub_admittance(StubKind::Short, 50, 90, 90e9, 90e9)) < 1e-15);
  CHECK_THROWS_AS(stub_admittance(StubKind::Open, 50, 90, 90e9, 90e9), SingularMatrixError);
  CHECK_THROWS_AS(stub_admittance(StubKind::Short, 50, 90, 90e9, 180e9), SingularMatrixError);
  check_lossless_reciprocal(stub_twoport(StubKind::Open, 40, 30, 90e9, rf::make_grid(60e9, 120e9, 13)));
  check_lossless_reciprocal(stub_twoport(StubKind::Short, 40, 30, 90e9, rf::make_grid(60e9, 120e9, 13)));
}

TEST_CASE("lumped") {
  CHECK(std::abs(lumped_impedance(LumpedKind::C, 0.5e-12, 90e9)) == doctest::Approx(3.537).epsilon(1e-3));
  auto g = rf::FrequencyGrid::single(90e9);
  auto r = lumped_twoport(LumpedKind::R, Placement::Series, 1e-6, g);
  CHECK(std::abs(r(0, 1, 0) - 1.0) < 1e-7);
  auto c = lumped_twoport(LumpedKind::C, Placement::Shunt, 1e-12, rf::FrequencyGrid::single(1.0));
  CHECK(std::abs(c(0, 1, 0) - 1.0) < 1e-9);
  CHECK_THROWS_AS(lumped_twoport(LumpedKind::R, Placement::Series, 0.0, g), InvalidArgument);
  auto grid = rf::make_grid(1e9, 100e9, 7);
  check_lossless_reciprocal(lumped_twoport(LumpedKind::L, Placement::Series, 1e-10, grid));
  check_lossless_reciprocal(lumped_twoport(LumpedKind::C, Placement::Shunt, 1e-13, grid));
  auto rf_ = rf::check_linear(lumped_twoport(LumpedKind::R, Placement::Shunt, 30.0, grid));
  CHECK(rf_.passive);
  CHECK(rf_.reciprocal);
}

TEST_CASE("wilkinson") {
  auto s = wilkinson_synthesize(50, 90e9);
  CHECK(std::abs(s.branch_z - 70.7107) < 5e-5);
  CHECK(s.r_iso == 100.0);
  CHECK(std::abs(s.branch_z / s.z0 - std::sqrt(2.0)) < 1e-9);
  auto one = wilkinson_synthesize(1, 5e9);
  CHECK(one.branch_z == doctest::Approx(std::sqrt(2.0)));
  CHECK(one.r_iso == 2.0);

  auto grid = rf::make_grid(45e9, 180e9, 10);  // includes f0 = 90 GHz and 2 f0
  auto w = wilkinson_analyze(s, grid);
  const std::size_t i0 = grid.find(90e9);
  REQUIRE(i0 < grid.size());
  CHECK(rf::mag_to_db(std::abs(w(i0, 1, 0))) == doctest::Approx(-3.0103).epsilon(0.01 / 3.0103));
  CHECK(rf::mag_to_db(std::abs(w(i0, 0, 0))) < -60.0);
  CHECK(rf::mag_to_db(std::abs(w(i0, 1, 2))) < -60.0);
  CHECK(std::abs(w(i0, 1, 0) - (-kJ / std::sqrt(2.0))) < 1e-12);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(w(i, 1, 0) - w(i, 2, 0)) < 1e-12);
  auto f = rf::check_linear(w);
  CHECK(f.reciprocal);
  CHECK(f.passive);
  CHECK_FALSE(f.lossless);
}

TEST_CASE("wilkinson back to back is a through at f0") {
  auto s = wilkinson_synthesize(50, 90e9);
  auto w = wilkinson_analyze(s, rf::FrequencyGrid::single(90e9)).at(0);
  // Combiner = divider reversed; equal paths: S21_total = sum over both arms.
  const cplx through = w(1, 0) * w(0, 1) + w(2, 0) * w(0, 2);
  CHECK(rf::mag_to_db(std::abs(through)) > -0.1);
}

TEST_CASE("microstrip wilkinson") {
  auto mw = wilkinson_microstrip(wilkinson_synthesize(50, 90e9), default_substrate());
  CHECK(std::abs(mw.spec.branch_z - 70.7107) < 0.01);
  CHECK(mw.branch_length_m == doctest::Approx(electrical_to_physical(90, 90e9, mw.branch.eps_eff)));
  auto n = wilkinson_analyze(mw, rf::FrequencyGrid::single(90e9));
  CHECK(rf::mag_to_db(std::abs(n(0, 1, 0))) < -3.0103);
  CHECK(rf::mag_to_db(std::abs(n(0, 1, 0))) > -3.2);
  CHECK(rf::check_linear(n).passive);
}
