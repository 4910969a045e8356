#include <doctest.h>

#include <cmath>
#include <limits>

#include "mmpa/errors.hpp"
#include "mmpa/hb.hpp"
#include "mmpa/transient.hpp"
#include "mmpa/units.hpp"

using namespace mmpa;
using namespace mmpa::circuit;
using namespace mmpa::hb;
using rf::cplx;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kOff = -std::numeric_limits<double>::infinity();

Netlist rc_divider() {
  Netlist n;
  n.f0 = 1e9;
  n.add("P1", ElementKind::PORT, {"in", "0"}, {{"z", 50}, {"rf", 1}});
  n.add("R1", ElementKind::R, {"in", "out"}, {{"r", 100}});
  n.add("C1", ElementKind::C, {"out", "0"}, {{"c", 1e-12}});
  n.add("P2", ElementKind::PORT, {"out", "0"}, {{"z", 50}});
  return n;
}

Netlist cubic_circuit() {
  Netlist n;
  n.f0 = 1e9;
  n.add("P1", ElementKind::PORT, {"a", "0"}, {{"z", 50}, {"rf", 1}});
  n.add("N1", ElementKind::NLG, {"a", "0"}, {{"g1", 0.01}, {"g3", 0.004}});
  n.add("C1", ElementKind::C, {"a", "0"}, {{"c", 2e-12}});
  return n;
}

// Class-A common-source FET biased through DC sources in series with both ports.
Netlist class_a_fet() {
  Netlist n;
  n.f0 = 1e9;
  n.models["dev"] = device::default_phemt();
  n.add("P1", ElementKind::PORT, {"gp", "0"}, {{"z", 50}, {"rf", 1}});
  n.add("VG", ElementKind::VDC, {"g", "gp"}, {{"v", -0.2}});
  n.add("M1", ElementKind::FET, {"d", "g", "0"}, {}, "dev");
  n.add("VD", ElementKind::VDC, {"d", "dp"}, {{"v", 6.0}});
  n.add("P2", ElementKind::PORT, {"dp", "0"}, {{"z", 50}});
  return n;
}

HbConfig config_1ghz() {
  HbConfig c;
  c.f0 = 1e9;
  return c;
}

TransientResult driven_transient(const Netlist& n, double p_dbm, int periods = 30) {
  TransientOptions o;
  o.f0 = 1e9;
  o.p_avail_dbm = p_dbm;
  o.dt = 1.0 / (200 * o.f0);
  o.t_stop = periods / o.f0;
  return transient_solve(n, o);
}

// Harmonics below 1e-6 of the fundamental (symmetry zeros) are compared in
// absolute terms only.
void check_phasors(const std::vector<cplx>& hb, const std::vector<cplx>& tr, int kmax) {
  const double floor = 1e-6 * std::abs(tr[1]);
  for (int k = 0; k <= kmax; ++k) {
    const cplx a = hb[static_cast<std::size_t>(k)], b = tr[static_cast<std::size_t>(k)];
    CAPTURE(k);
    CAPTURE(a);
    CAPTURE(b);
    if (std::abs(b) < floor) {
      CHECK(std::abs(a) < floor);
      continue;
    }
    CHECK(std::abs(std::abs(a) - std::abs(b)) <= 0.01 * std::abs(b));
    if (k > 0) CHECK(std::abs(std::arg(a / b)) * 180.0 / kPi <= 2.0);
  }
}

}  // namespace

TEST_CASE("config validation") {
  HbConfig c = config_1ghz();
  CHECK_NOTHROW(c.validate());
  c.oversample = 4 * c.n_harmonics;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = config_1ghz();
  c.n_harmonics = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = config_1ghz();
  c.tol = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("linear RC divider equals AC analysis") {
  const auto n = rc_divider();
  const auto sol = hb_solve(n, config_1ghz(), 0.0);
  REQUIRE(sol.converged);
  CHECK(sol.iterations <= 2);

  const auto op = dc_operating_point(n);
  Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(op.circuit->size());
  inj[op.circuit->node_index("in")] = sol.source_amplitude / 50.0;
  const Eigen::VectorXcd v = ac_solve(op, 1e9, inj);
  for (const char* node : {"in", "out"}) {
    const cplx ref = v[op.circuit->node_index(node)];
    CHECK(std::abs(sol.voltage(node)[1] - ref) < 1e-10);
    for (int k = 2; k <= sol.harmonics(); ++k) CHECK(std::abs(sol.voltage(node)[static_cast<std::size_t>(k)]) < 1e-12);
  }
  CHECK(sol.voltage("out")[0].imag() == 0.0);
}

TEST_CASE("analytic Jacobian matches finite differences") {
  for (const auto& n : {class_a_fet(), cubic_circuit()}) {
    auto c = std::make_shared<const Circuit>(n);
    HbConfig cfg = config_1ghz();
    cfg.n_harmonics = 3;
    cfg.oversample = 32;
    HbEngine eng(c, cfg);
    Eigen::VectorXd x = Eigen::VectorXd::Random(eng.unknowns()) * 0.3;
    const Eigen::MatrixXd j = Eigen::MatrixXd(eng.jacobian(x));
    const double h = 1e-6;
    double worst = 0.0;
    for (int col = 0; col < eng.unknowns(); ++col) {
      Eigen::VectorXd xp = x, xm = x;
      xp[col] += h;
      xm[col] -= h;
      const Eigen::VectorXd fd = (eng.residual(xp, 1.0) - eng.residual(xm, 1.0)) / (2 * h);
      worst = std::max(worst, (fd - j.col(col)).cwiseAbs().maxCoeff() / (1.0 + j.col(col).cwiseAbs().maxCoeff()));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("cubic conductance agrees with the transient oracle") {
  const auto n = cubic_circuit();
  const auto sol = hb_solve(n, config_1ghz(), 10.0);
  REQUIRE(sol.converged);
  const auto tr = driven_transient(n, 10.0, 20);
  const auto spec = spectrum_of(tr.waveform("a"), 1e9, 3, 10e-9);
  check_phasors(sol.voltage("a"), spec, 3);
  const double h3 = std::abs(sol.voltage("a")[3]);
  CHECK(h3 > 1e-3);
  CHECK(std::abs(h3 - std::abs(spec[3])) <= 0.01 * std::abs(spec[3]));
}

TEST_CASE("class-A FET stage agrees with the transient oracle") {
  const auto n = class_a_fet();
  for (double p : {-10.0, 5.0}) {
    CAPTURE(p);
    const auto sol = hb_solve(n, config_1ghz(), p);
    REQUIRE(sol.converged);
    const auto tr = driven_transient(n, p);
    for (const char* node : {"d", "g"}) {
      CAPTURE(node);
      check_phasors(sol.voltage(node), spectrum_of(tr.waveform(node), 1e9, 3, 20e-9), 3);
    }
    const auto v2 = spectrum_of(tr.port_waveform(1), 1e9, 1, 20e-9);
    const double p_tr = 0.5 * std::norm(v2[1]) / 50.0;
    CHECK(std::abs(hb_power(sol, 1, 1) - p_tr) <= 0.01 * p_tr);
  }
}

TEST_CASE("power balance and energy sanity") {
  for (double p : {-20.0, 0.0, 10.0}) {
    CAPTURE(p);
    const auto sol = hb_solve(class_a_fet(), config_1ghz(), p);
    REQUIRE(sol.converged);
    const auto pb = power_balance(sol);
    CHECK(pb.relative_error() < 1e-3);
    CHECK(pb.rf_source == doctest::Approx(pb.rf_source));
    double out = 0.0;
    for (int k = 1; k <= sol.harmonics(); ++k) out += hb_power(sol, 1, k);
    CHECK(out <= sol.supply_power() + rf::dbm_to_watt(p));
  }
  const auto sol = hb_solve(cubic_circuit(), config_1ghz(), 10.0);
  CHECK(power_balance(sol).relative_error() < 1e-3);
}

TEST_CASE("oversampling and residual behaviour") {
  auto cfg = config_1ghz();
  const auto a = hb_solve(class_a_fet(), cfg, 8.0);
  cfg.oversample *= 2;
  const auto b = hb_solve(class_a_fet(), cfg, 8.0);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (int k = 0; k <= 3; ++k) {
    const cplx va = a.voltage("d")[static_cast<std::size_t>(k)], vb = b.voltage("d")[static_cast<std::size_t>(k)];
    CHECK(std::abs(va - vb) <= 1e-4 * std::abs(vb) + 1e-12);
  }
  const auto& h = a.residual_history;
  REQUIRE(h.size() >= 2);
  for (std::size_t i = h.size() >= 4 ? h.size() - 3 : 1; i < h.size(); ++i) CHECK(h[i] < h[i - 1]);
  CHECK(a.residual <= cfg.tol);
}

TEST_CASE("warm start and source stepping reach the same point") {
  auto c = std::make_shared<const Circuit>(class_a_fet());
  HbEngine eng(c, config_1ghz());
  const auto cold = eng.solve(12.0);
  const auto low = eng.solve(6.0);
  const auto warm = eng.solve(12.0, &low);
  REQUIRE(cold.converged);
  REQUIRE(warm.converged);
  CHECK((cold.state - warm.state).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hb_power conventions") {
  Netlist n;
  n.f0 = 1e9;
  n.add("P1", ElementKind::PORT, {"a", "0"}, {{"z", 50}, {"rf", 1}});
  n.add("P2", ElementKind::PORT, {"a", "0"}, {{"z", 50}});
  const auto sol = hb_solve(n, config_1ghz(), 10.0);  // 2 V source, 1 V across the load
  CHECK(std::abs(sol.voltage("a")[1]) == doctest::Approx(1.0));
  CHECK(hb_power(sol, 1, 1) == doctest::Approx(10e-3));
  CHECK(hb_power(sol, 0, 1) == doctest::Approx(-10e-3));

  const auto off = hb_solve(class_a_fet(), config_1ghz(), kOff);
  REQUIRE(off.converged);
  for (std::size_t p = 0; p < 2; ++p)
    for (int k = 1; k <= off.harmonics(); ++k) CHECK(std::abs(hb_power(off, p, k)) < 1e-20);
  CHECK(hb_power(off, 1, 0) > 0.0);

  auto bad = sol;
  bad.converged = false;
  CHECK_THROWS_AS(hb_power(bad, 1, 1), AnalysisError);
  CHECK_THROWS_AS(hb_power(sol, 5, 1), InvalidArgument);
}

TEST_CASE("non-convergence returns the best iterate") {
  auto cfg = config_1ghz();
  cfg.max_iter = 1;
  cfg.source_steps = 1;
  const auto sol = hb_solve(class_a_fet(), cfg, 15.0);
  CHECK_FALSE(sol.converged);
  CHECK(std::isfinite(sol.residual));
  CHECK(sol.residual > cfg.tol);
}

TEST_CASE("transient: RC step response") {
  Netlist n;
  n.add("V1", ElementKind::VDC, {"in", "0"}, {{"v", 1.0}});
  n.add("R1", ElementKind::R, {"in", "out"}, {{"r", 1000}});
  n.add("C1", ElementKind::C, {"out", "0"}, {{"c", 1e-9}});
  const double tau = 1e-6;
  TransientOptions o;
  o.dt = tau / 1000;
  o.t_stop = 2 * tau;
  o.start_from_dc = false;
  const auto tr = transient_solve(n, o);
  const auto w = tr.waveform("out");
  CHECK(w.x[1000] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-3));
  CHECK(w.x[0] == 0.0);
}

TEST_CASE("transient: LC resonance from zero crossings") {
  Netlist n;
  n.add("V1", ElementKind::VDC, {"in", "0"}, {{"v", 1.0}});
  n.add("L1", ElementKind::L, {"in", "a"}, {{"l", 10e-9}});
  n.add("C1", ElementKind::C, {"a", "0"}, {{"c", 1e-12}});
  const double f = 1.0 / (2 * kPi * std::sqrt(10e-9 * 1e-12));
  TransientOptions o;
  o.dt = 1.0 / (f * 1000);
  o.t_stop = 10.0 / f;
  o.start_from_dc = false;
  const auto w = transient_solve(n, o).waveform("a");
  std::vector<double> cross;
  for (std::size_t i = 1; i < w.x.size(); ++i) {
    const double y0 = w.x[i - 1] - 1.0, y1 = w.x[i] - 1.0;
    if (y0 < 0.0 && y1 >= 0.0) cross.push_back(w.t[i - 1] + (w.t[i] - w.t[i - 1]) * (-y0) / (y1 - y0));
  }
  REQUIRE(cross.size() >= 5);
  const double period = (cross.back() - cross.front()) / static_cast<double>(cross.size() - 1);
  CHECK(1.0 / period == doctest::Approx(f).epsilon(5e-3));

  o.dt = 1.0 / (f * 8);
  CHECK_THROWS_AS(transient_solve(n, o), AnalysisError);
}

TEST_CASE("transient: DC-only netlist stays at the operating point") {
  Netlist n;
  n.models["dev"] = device::default_phemt();
  n.add("VG", ElementKind::VDC, {"g", "0"}, {{"v", -0.4}});
  n.add("VD", ElementKind::VDC, {"s", "0"}, {{"v", 3.0}});
  n.add("RD", ElementKind::R, {"s", "d"}, {{"r", 20}});
  n.add("M1", ElementKind::FET, {"d", "g", "0"}, {}, "dev");
  const auto op = dc_operating_point(n);
  TransientOptions o;
  o.dt = 1e-11;
  o.t_stop = 1e-9;
  const auto tr = transient_solve(n, o);
  const auto w = tr.waveform("d");
  for (double v : w.x) CHECK(v == doctest::Approx(op.voltage("d")).epsilon(1e-9));
}

TEST_CASE("transient refuses unsupported elements and coarse steps") {
  Netlist n = rc_divider();
  n.add("B1", ElementKind::BLOCK, {"out", "x"});
  n.add("R9", ElementKind::R, {"x", "0"}, {{"r", 50}});
  TransientOptions o;
  o.dt = 1e-12;
  o.t_stop = 1e-9;
  CHECK_THROWS_AS(transient_solve(n, o), InvalidArgument);

  o.f0 = 1e9;
  o.p_avail_dbm = 0.0;
  o.dt = 1.0 / (100 * 1e9);  // 100 points per period cannot carry 7 harmonics
  CHECK_THROWS_AS(transient_solve(rc_divider(), o), InvalidArgument);
}

TEST_CASE("spectrum_of conventions") {
  const double f0 = 1e9;
  Waveform w;
  for (int i = 0; i < 64 * 6; ++i) {
    const double t = i / (64 * f0);
    w.t.push_back(t);
    w.x.push_back(std::cos(2 * kPi * f0 * t));
  }
  auto s = spectrum_of(w, f0, 3);
  CHECK(std::abs(s[1] - cplx(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(s[0]) < 1e-12);
  CHECK(std::abs(s[2]) < 1e-12);

  for (auto& x : w.x) x = 2.0;
  s = spectrum_of(w, f0, 2);
  CHECK(s[0].real() == doctest::Approx(2.0));
  CHECK(s[0].imag() == 0.0);

  for (std::size_t i = 0; i < w.t.size(); ++i) w.x[i] = std::pow(std::cos(2 * kPi * f0 * w.t[i]), 2);
  s = spectrum_of(w, f0, 2);
  CHECK(s[0].real() == doctest::Approx(0.5));
  CHECK(std::abs(s[2] - cplx(0.5, 0.0)) < 1e-12);

  CHECK_THROWS_AS(spectrum_of(w, f0, 2, 3e-9), InvalidArgument);  // 3 periods left
  CHECK_THROWS_AS(spectrum_of(w, 1.1e9, 2), InvalidArgument);      // non-integer period
}
