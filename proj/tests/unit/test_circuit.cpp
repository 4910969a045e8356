#include <doctest.h>

#include <cmath>

#include "mmpa/circuit.hpp"
#include "mmpa/errors.hpp"

using namespace mmpa;
using namespace mmpa::circuit;
using rf::cplx;

namespace {

Netlist two_port_shell() {
  Netlist n;
  n.add("P1", ElementKind::PORT, {"in", "0"}, {{"z", 50}});
  n.add("P2", ElementKind::PORT, {"out", "0"}, {{"z", 50}});
  return n;
}

double max_diff(const rf::NPortNetwork& a, const rf::NPortNetwork& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a.at(i) - b.at(i)).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("resistive divider DC") {
  Netlist n;
  n.add("V1", ElementKind::VDC, {"a", "0"}, {{"v", 3.0}});
  n.add("R1", ElementKind::R, {"a", "m"}, {{"r", 1000}});
  n.add("R2", ElementKind::R, {"m", "0"}, {{"r", 2000}});
  auto op = dc_operating_point(n);
  CHECK(op.voltage("m") == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(op.supply_current(0) == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(op.supply_power() == doctest::Approx(3e-3).epsilon(1e-9));
  CHECK(op.iterations <= 1);
}

TEST_CASE("FEED is a DC short, BLOCK a DC open") {
  Netlist n;
  n.add("V1", ElementKind::VDC, {"s", "0"}, {{"v", 2.0}});
  n.add("F1", ElementKind::FEED, {"s", "a"});
  n.add("R1", ElementKind::R, {"a", "0"}, {{"r", 100}});
  n.add("B1", ElementKind::BLOCK, {"a", "b"});
  n.add("R2", ElementKind::R, {"b", "0"}, {{"r", 100}});
  auto op = dc_operating_point(n);
  CHECK(op.voltage("a") == doctest::Approx(2.0));
  CHECK(std::abs(op.voltage("b")) < 1e-9);
  CHECK(op.supply_current(0) == doctest::Approx(0.02));
}

TEST_CASE("series resistor S-parameters") {
  auto n = two_port_shell();
  n.add("R1", ElementKind::R, {"in", "out"}, {{"r", 50}});
  auto s = small_signal_sparams(dc_operating_point(n), rf::FrequencyGrid::single(1e9));
  CHECK(std::abs(s(0, 0, 0) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(s(0, 1, 0) - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("netlist lines and stubs match element models") {
  const auto grid = rf::make_grid(30e9, 200e9, 18);  // crosses 180 deg of the line
  elements::TLineSpec spec{35.0, 90.0, 90e9, std::nullopt, 1.0};
  auto n = two_port_shell();
  n.add("T1", ElementKind::TL, {"in", "out"}, {{"z", 35}, {"deg", 90}, {"f", 90e9}});
  auto s = small_signal_sparams(dc_operating_point(n), grid);
  CHECK(max_diff(s, elements::tl_twoport(spec, grid)) < 1e-10);

  auto m = two_port_shell();
  m.add("T1", ElementKind::TL, {"in", "out"}, {{"z", 50}, {"deg", 1e-9}, {"f", 90e9}});
  m.add("S1", ElementKind::OSTUB, {"out"}, {{"z", 40}, {"deg", 30}, {"f", 90e9}});
  m.add("S2", ElementKind::SSTUB, {"in"}, {{"z", 60}, {"deg", 50}, {"f", 90e9}});
  const auto g2 = rf::make_grid(60e9, 120e9, 7);
  auto sm = small_signal_sparams(dc_operating_point(m), g2);
  auto ref = rf::cascade(elements::stub_twoport(elements::StubKind::Short, 60, 50, 90e9, g2),
                         elements::stub_twoport(elements::StubKind::Open, 40, 30, 90e9, g2));
  CHECK(max_diff(sm, ref) < 1e-9);
}

TEST_CASE("netlist Wilkinson equals the element model") {
  const auto w = elements::wilkinson_synthesize(50, 90e9);
  Netlist n;
  n.add("P1", ElementKind::PORT, {"c", "0"});
  n.add("P2", ElementKind::PORT, {"o1", "0"});
  n.add("P3", ElementKind::PORT, {"o2", "0"});
  n.add("T1", ElementKind::TL, {"c", "o1"}, {{"z", w.branch_z}, {"deg", 90}, {"f", 90e9}});
  n.add("T2", ElementKind::TL, {"c", "o2"}, {{"z", w.branch_z}, {"deg", 90}, {"f", 90e9}});
  n.add("RI", ElementKind::R, {"o1", "o2"}, {{"r", w.r_iso}});
  const auto grid = rf::make_grid(45e9, 180e9, 10);
  CHECK(max_diff(small_signal_sparams(dc_operating_point(n), grid), elements::wilkinson_analyze(w, grid)) < 1e-10);
}

TEST_CASE("lumped L and C in MNA") {
  auto n = two_port_shell();
  n.add("L1", ElementKind::L, {"in", "out"}, {{"l", 1e-9}});
  n.add("C1", ElementKind::C, {"out", "0"}, {{"c", 0.3e-12}});
  const auto grid = rf::make_grid(1e9, 20e9, 5);
  auto ref = rf::cascade(elements::lumped_twoport(elements::LumpedKind::L, elements::Placement::Series, 1e-9, grid),
                         elements::lumped_twoport(elements::LumpedKind::C, elements::Placement::Shunt, 0.3e-12, grid));
  CHECK(max_diff(small_signal_sparams(dc_operating_point(n), grid), ref) < 1e-12);
}

TEST_CASE("FET operating point and gain") {
  Netlist n;
  n.models["dev"] = device::default_phemt();
  n.add("P1", ElementKind::PORT, {"in", "0"}, {{"rf", 1}});
  n.add("B1", ElementKind::BLOCK, {"in", "g"});
  n.add("VG", ElementKind::VDC, {"vg", "0"}, {{"v", -0.2}});
  n.add("FG", ElementKind::FEED, {"vg", "g"});
  n.add("M1", ElementKind::FET, {"d", "g", "0"}, {}, "dev");
  n.add("VD", ElementKind::VDC, {"vd", "0"}, {{"v", 6.0}});
  n.add("FD", ElementKind::FEED, {"vd", "d"});
  n.add("B2", ElementKind::BLOCK, {"d", "out"});
  n.add("P2", ElementKind::PORT, {"out", "0"});
  auto op = dc_operating_point(n);
  const auto p = device::default_phemt();
  // Source resistor drops I*r_s, so solve the self-consistent current.
  const double id = op.supply_current(1);
  CHECK(id == doctest::Approx(device::ids(p, -0.2 - id * p.r_s, 6.0 - id * (p.r_s + p.r_d))).epsilon(1e-9));
  CHECK(id > 0.0);
  auto s = small_signal_sparams(op, rf::FrequencyGrid::single(1e9));
  CHECK(std::abs(s(0, 1, 0)) > 1.0);
  CHECK(std::abs(s(0, 0, 1)) < 0.1);
}

TEST_CASE("zero-gm device is passive") {
  Netlist n;
  auto p = device::default_phemt();
  n.models["dev"] = p;
  n.add("P1", ElementKind::PORT, {"g", "0"});
  n.add("M1", ElementKind::FET, {"d", "g", "0"}, {}, "dev");
  n.add("P2", ElementKind::PORT, {"d", "0"});
  n.add("VG", ElementKind::VDC, {"vg", "0"}, {{"v", -30.0}});
  n.add("RG", ElementKind::R, {"vg", "g"}, {{"r", 1e6}});
  auto s = small_signal_sparams(dc_operating_point(n), rf::FrequencyGrid::single(10e9));
  CHECK(std::abs(s(0, 1, 0)) < 1.0);
}

TEST_CASE("validation diagnostics") {
  {
    Netlist n = two_port_shell();
    n.add("R1", ElementKind::R, {"in", "out"}, {{"r", 5}}).line = 3;
    n.add("R1", ElementKind::R, {"in", "out"}, {{"r", 5}}).line = 7;
    try {
      n.validate();
      FAIL("expected duplicate error");
    } catch (const ParseError& e) {
      const std::string w = e.what();
      CHECK(w.find("'R1'") != std::string::npos);
      CHECK(w.find("line 3") != std::string::npos);
      CHECK(w.find("line 7") != std::string::npos);
      CHECK(e.line() == 7);
    }
  }
  {
    Netlist n;
    n.add("R1", ElementKind::R, {"a", "b"}, {{"r", 5}});
    n.add("R2", ElementKind::R, {"a", "b"}, {{"r", 5}});
    CHECK_THROWS_WITH_AS(n.validate(), doctest::Contains("ground"), ParseError);
  }
  {
    Netlist n = two_port_shell();
    n.add("M1", ElementKind::FET, {"out", "in", "0"}, {}, "nope");
    CHECK_THROWS_WITH_AS(n.validate(), doctest::Contains("undefined model"), ParseError);
  }
  {
    Netlist n = two_port_shell();
    n.add("R1", ElementKind::R, {"in", "out"}, {{"r", 5}});
    n.add("R2", ElementKind::R, {"out", "typo"}, {{"r", 5}});
    CHECK_THROWS_WITH_AS(n.validate(), doctest::Contains("typo"), ParseError);
  }
  {
    Netlist n;
    n.add("P1", ElementKind::PORT, {"a", "0"}, {{"rf", 1}});
    n.add("P2", ElementKind::PORT, {"a", "0"}, {{"rf", 1}});
    CHECK_THROWS_WITH_AS(n.validate(), doctest::Contains("more than one RF"), ParseError);
  }
  {
    Netlist n = two_port_shell();
    n.add("R1", ElementKind::R, {"in", "out"}, {{"r", -5}});
    CHECK_THROWS_AS(n.validate(), ParseError);
  }
}
