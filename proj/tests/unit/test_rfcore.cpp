#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mmpa/errors.hpp"
#include "mmpa/rfcore.hpp"
#include "mmpa/units.hpp"

using namespace mmpa;
using namespace mmpa::rf;

namespace {

const cplx j{0.0, 1.0};

Eigen::Matrix2cd tl_abcd(double zc, double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  Eigen::Matrix2cd m;
  m << std::cos(t), j * zc * std::sin(t), j * std::sin(t) / zc, std::cos(t);
  return m;
}

NPortNetwork one_point(const CMatrix& m, Representation rep = Representation::S, double f = 90e9) {
  return NPortNetwork(FrequencyGrid::single(f), static_cast<int>(m.rows()), rep, {m});
}

NPortNetwork attenuator_db(double db) {
  const double a = std::pow(10.0, -db / 20.0);
  CMatrix s(2, 2);
  s << 0.0, a, a, 0.0;
  return one_point(s);
}

CMatrix random_passive(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMatrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = {u(rng), u(rng)};
  Eigen::JacobiSVD<CMatrix> svd(m);
  return m * (0.9 / svd.singularValues()(0));
}

double rel_err(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("make_grid") {
  CHECK(make_grid(90e9, 90e9, 1).size() == 1);
  auto g = make_grid(70e9, 100e9, 4);
  REQUIRE(g.size() == 4);
  CHECK(g[1] == doctest::Approx(80e9));
  CHECK(g[2] == doctest::Approx(90e9));
  CHECK(g[3] == 100e9);
  auto p = make_grid(72.3e9, 92.95e9, 2);
  CHECK(p[0] == 72.3e9);
  CHECK(p[1] == 92.95e9);
  CHECK_THROWS_AS(make_grid(-1.0, 1e9, 3), InvalidArgument);
  CHECK_THROWS_AS(make_grid(2e9, 1e9, 3), InvalidArgument);
  CHECK_THROWS_AS(make_grid(1e9, 2e9, 0), InvalidArgument);
  CHECK_THROWS_AS(make_grid(1e9, 2e9, 1), InvalidArgument);
  CHECK_THROWS_AS(FrequencyGrid({1e9, 1e9}), InvalidArgument);
}

TEST_CASE("network invariants are enforced") {
  CHECK_THROWS_AS(NPortNetwork(FrequencyGrid::single(1e9), 3, Representation::ABCD, {CMatrix::Identity(3, 3)}),
                  InvalidArgument);
  CHECK_THROWS_AS(NPortNetwork(FrequencyGrid::single(1e9), 2, Representation::S, {CMatrix::Identity(3, 3)}),
                  InvalidArgument);
  CHECK_THROWS_AS(NPortNetwork(FrequencyGrid::single(1e9), 2, Representation::S, {CMatrix::Identity(2, 2)}, 0.0),
                  InvalidArgument);
}

TEST_CASE("convert: through and series resistor") {
  auto through = one_point(CMatrix::Identity(2, 2), Representation::ABCD);
  auto s = convert(through, Representation::S);
  CHECK(std::abs(s(0, 0, 0)) < 1e-15);
  CHECK(std::abs(s(0, 1, 0) - 1.0) < 1e-15);

  CMatrix r(2, 2);
  r << 1.0, 50.0, 0.0, 1.0;
  auto sr = convert(one_point(r, Representation::ABCD), Representation::S);
  CHECK(std::abs(sr(0, 0, 0) - 1.0 / 3.0) < 1e-14);
  CHECK(std::abs(sr(0, 1, 0) - 2.0 / 3.0) < 1e-14);

  CHECK_THROWS_AS(convert(one_point(CMatrix::Identity(3, 3) * 0.1), Representation::ABCD), InvalidArgument);
}

TEST_CASE("convert: singular matrix names the frequency") {
  // S = I is an open circuit: Z does not exist.
  auto open = one_point(CMatrix::Identity(2, 2), Representation::S, 12.5e9);
  try {
    convert(open, Representation::Z);
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.frequency_hz() == 12.5e9);
  }
}

TEST_CASE("convert round trips on random networks") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    for (int n = 1; n <= 4; ++n) {
      auto x = one_point(random_passive(rng, n));
      for (auto rep : {Representation::Z, Representation::Y}) {
        auto back = convert(convert(x, rep), Representation::S);
        CHECK(rel_err(back.at(0), x.at(0)) < 1e-10);
      }
      if (n == 2) {
        auto back = convert(convert(x, Representation::ABCD), Representation::S);
        CHECK(rel_err(back.at(0), x.at(0)) < 1e-10);
      }
    }
  }
}

TEST_CASE("cascade") {
  const auto grid = make_grid(80e9, 100e9, 5);
  auto through = two_port_from_abcd(grid, [](double) { return Eigen::Matrix2cd::Identity().eval(); });
  auto x = two_port_from_abcd(grid, [](double f) { return tl_abcd(35.0, 60.0 * f / 90e9); });
  auto tx = cascade(through, x);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(rel_err(tx.at(i), x.at(i)) < 1e-12);

  auto a12 = cascade(attenuator_db(6.0), attenuator_db(6.0));
  CHECK(mag_to_db(std::abs(a12(0, 1, 0))) == doctest::Approx(-12.0).epsilon(1e-12));
  CHECK(std::abs(a12(0, 0, 0)) < 1e-5);

  auto h1 = two_port_from_abcd(FrequencyGrid::single(90e9), [](double) { return tl_abcd(50.0, 45.0); });
  auto h2 = two_port_from_abcd(FrequencyGrid::single(90e9), [](double) { return tl_abcd(50.0, 90.0); });
  CHECK(rel_err(cascade(h1, h1).at(0), h2.at(0)) < 1e-10);

  CHECK_THROWS_AS(cascade(h1, x), InvalidArgument);
  CHECK_THROWS_AS(cascade(one_point(CMatrix::Identity(3, 3) * 0.1), h1), InvalidArgument);
}

TEST_CASE("cascade is associative on random passive triples") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = one_point(random_passive(rng, 2));
    auto b = one_point(random_passive(rng, 2));
    auto c = one_point(random_passive(rng, 2));
    CHECK(rel_err(cascade(cascade(a, b), c).at(0), cascade(a, cascade(b, c)).at(0)) < 1e-9);
  }
}

TEST_CASE("renormalize") {
  std::mt19937_64 rng(3);
  auto x = one_point(random_passive(rng, 2));
  CHECK(rel_err(renormalize(x, 50.0).at(0), x.at(0)) < 1e-15);
  auto back = renormalize(renormalize(x, 75.0), 50.0);
  CHECK(rel_err(back.at(0), x.at(0)) < 1e-10);

  CMatrix matched = CMatrix::Zero(1, 1);
  auto r = renormalize(one_point(matched), 25.0);
  CHECK(std::abs(r(0, 0, 0) - 1.0 / 3.0) < 1e-14);
  CHECK(r.z_ref() == 25.0);
  CHECK_THROWS_AS(renormalize(x, 0.0), InvalidArgument);
  CHECK_THROWS_AS(renormalize(x, -5.0), InvalidArgument);

  // Physical network unchanged: Z matrix identical.
  auto z1 = convert(x, Representation::Z);
  auto z2 = convert(renormalize(x, 75.0), Representation::Z);
  CHECK(rel_err(z2.at(0), z1.at(0)) < 1e-10);

  // Passivity/reciprocity verdicts carry over.
  for (int t = 0; t < 20; ++t) {
    CMatrix m = random_passive(rng, 2);
    m = 0.5 * (m + m.transpose().eval());
    auto n = one_point(m);
    auto f1 = check_linear(n);
    auto f2 = check_linear(renormalize(n, 30.0));
    CHECK(f1.passive == f2.passive);
    CHECK(f1.reciprocal == f2.reciprocal);
  }
}

TEST_CASE("check_linear") {
  auto through = one_point(CMatrix::Identity(2, 2), Representation::ABCD);
  auto f = check_linear(through);
  CHECK(f.reciprocal);
  CHECK(f.passive);
  CHECK(f.lossless);

  auto att = check_linear(attenuator_db(6.0));
  CHECK(att.reciprocal);
  CHECK(att.passive);
  CHECK_FALSE(att.lossless);

  CMatrix amp(2, 2);
  amp << 0.1, 0.01, 5.0, 0.2;
  auto a = check_linear(one_point(amp));
  CHECK_FALSE(a.passive);
  CHECK_FALSE(a.reciprocal);
}

TEST_CASE("stability") {
  CMatrix s(2, 2);
  s << 0.0, 0.5, 0.5, 0.0;
  auto rep = stability(one_point(s));
  CHECK(rep.k_factor == doctest::Approx(2.125));  // (1 + 0.25^2) / (2 * 0.25)
  CHECK(rep.delta_mag == doctest::Approx(0.25));
  CHECK(rep.unconditionally_stable);

  auto thru = stability(one_point(CMatrix::Identity(2, 2), Representation::ABCD));
  CHECK(thru.k_factor == doctest::Approx(1.0));
  CHECK_FALSE(thru.unconditionally_stable);

  CMatrix u(2, 2);
  u << 0.3, 0.0, 4.0, 0.2;
  auto ur = stability(one_point(u));
  CHECK(std::isinf(ur.k_factor));
  CHECK(ur.unilateral);
  CHECK(ur.unconditionally_stable);

  CHECK_THROWS_AS(stability(one_point(CMatrix::Identity(3, 3) * 0.1)), InvalidArgument);
}

TEST_CASE("K is invariant under renormalization") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto n = one_point(random_passive(rng, 2));
    auto a = stability(n);
    auto b = stability(renormalize(n, 25.0));
    CHECK(std::abs(a.k_factor - b.k_factor) < 1e-9 * std::max(1.0, std::abs(a.k_factor)));
    CHECK(a.unconditionally_stable == b.unconditionally_stable);
  }
}

TEST_CASE("units") {
  CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3));
  CHECK(dbm_to_watt(20.0) == doctest::Approx(0.1));
  CHECK(mag_to_db(10.0) == doctest::Approx(20.0));
  CHECK(units(20.0, Unit::Dbm, Unit::Watt) == doctest::Approx(0.1));
  CHECK(units(10.0, Unit::Magnitude, Unit::Decibel) == doctest::Approx(20.0));
  CHECK(units(-6.0, Unit::Decibel, Unit::Magnitude) == doctest::Approx(0.501187).epsilon(1e-5));
  CHECK_THROWS_AS(watt_to_dbm(0.0), InvalidArgument);
  CHECK_THROWS_AS(units(-1.0, Unit::Watt, Unit::Dbm), InvalidArgument);
  CHECK_THROWS_AS(units(1.0, Unit::Watt, Unit::Decibel), InvalidArgument);
}
