#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "mmpa/elements.hpp"
#include "mmpa/errors.hpp"

namespace mmpa::elements {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
const cplx kJ{0.0, 1.0};

Eigen::Matrix2cd shunt_abcd(cplx y) {
  Eigen::Matrix2cd m;
  m << 1.0, 0.0, y, 1.0;
  return m;
}

Eigen::Matrix2cd series_abcd(cplx z) {
  Eigen::Matrix2cd m;
  m << 1.0, z, 0.0, 1.0;
  return m;
}

double np_per_m(double db_per_mm) { return db_per_mm * 1e3 * std::numbers::ln10 / 20.0; }

}  // namespace

void SubstrateSpec::validate() const {
  if (!(eps_r >= 1.0)) throw InvalidArgument(fmt::format("SubstrateSpec: eps_r = {} < 1", eps_r));
  if (!(height > 0.0)) throw InvalidArgument(fmt::format("SubstrateSpec: height = {} must be > 0", height));
  if (!(tan_delta >= 0.0)) throw InvalidArgument(fmt::format("SubstrateSpec: tan_delta = {} < 0", tan_delta));
}

void TLineSpec::validate() const {
  if (!(z_c > 0.0)) throw InvalidArgument(fmt::format("TLineSpec: z_c = {} must be > 0", z_c));
  if (!(electrical_length > 0.0))
    throw InvalidArgument(fmt::format("TLineSpec: electrical length {} deg must be > 0", electrical_length));
  if (!(f_ref > 0.0)) throw InvalidArgument(fmt::format("TLineSpec: f_ref = {} must be > 0", f_ref));
  if (loss_db_per_mm && !(*loss_db_per_mm >= 0.0))
    throw InvalidArgument(fmt::format("TLineSpec: negative loss {}", *loss_db_per_mm));
  if (!(eps_eff >= 1.0)) throw InvalidArgument(fmt::format("TLineSpec: eps_eff = {} < 1", eps_eff));
}

double TLineSpec::theta(double f_hz) const { return electrical_length * kDegToRad * f_hz / f_ref; }

Eigen::Matrix2cd tl_abcd(const TLineSpec& spec, double f_hz) {
  spec.validate();
  const double th = spec.theta(f_hz);
  Eigen::Matrix2cd m;
  if (!spec.loss_db_per_mm || *spec.loss_db_per_mm == 0.0) {
    const double c = std::cos(th), s = std::sin(th);
    m << c, kJ * spec.z_c * s, kJ * s / spec.z_c, c;
    return m;
  }
  const double len = electrical_to_physical(spec.electrical_length, spec.f_ref, spec.eps_eff);
  const cplx gl{np_per_m(*spec.loss_db_per_mm) * len, th};
  const cplx ch = std::cosh(gl), sh = std::sinh(gl);
  m << ch, spec.z_c * sh, sh / spec.z_c, ch;
  return m;
}

rf::NPortNetwork tl_twoport(const TLineSpec& spec, const rf::FrequencyGrid& grid, double z_ref) {
  return rf::two_port_from_abcd(grid, [&](double f) { return tl_abcd(spec, f); }, z_ref);
}

cplx tl_input_impedance(const TLineSpec& spec, cplx z_load, double f_hz) {
  const Eigen::Matrix2cd m = tl_abcd(spec, f_hz);
  return (m(0, 0) * z_load + m(0, 1)) / (m(1, 0) * z_load + m(1, 1));
}

TLineSpec quarter_wave_transformer(double r_source, double r_load, double f0) {
  if (!(r_source > 0.0) || !(r_load > 0.0))
    throw InvalidArgument(
        fmt::format("quarter_wave_transformer: terminations must be real and > 0 (got {}, {})", r_source, r_load));
  if (!(f0 > 0.0)) throw InvalidArgument("quarter_wave_transformer: f0 must be > 0");
  TLineSpec t;
  t.z_c = std::sqrt(r_source * r_load);
  t.electrical_length = 90.0;
  t.f_ref = f0;
  return t;
}

namespace {

double hj_eps_eff(double u, double er) {
  const double a = 1.0 + std::log((std::pow(u, 4) + std::pow(u / 52.0, 2)) / (std::pow(u, 4) + 0.432)) / 49.0 +
                   std::log(1.0 + std::pow(u / 18.1, 3)) / 18.7;
  const double b = 0.564 * std::pow((er - 0.9) / (er + 3.0), 0.053);
  return (er + 1.0) / 2.0 + (er - 1.0) / 2.0 * std::pow(1.0 + 10.0 / u, -a * b);
}

double hj_z0(double u, double er) {
  const double f = 6.0 + (2.0 * std::numbers::pi - 6.0) * std::exp(-std::pow(30.666 / u, 0.7528));
  const double z01 = kEta0 / (2.0 * std::numbers::pi) * std::log(f / u + std::sqrt(1.0 + std::pow(2.0 / u, 2)));
  return z01 / std::sqrt(hj_eps_eff(u, er));
}

}  // namespace

MicrostripProps microstrip_analyze(const MicrostripGeom& geom, const SubstrateSpec& sub, double f_hz) {
  sub.validate();
  if (!(geom.width > 0.0)) throw InvalidArgument(fmt::format("microstrip: width {} must be > 0", geom.width));
  const double u = geom.width / sub.height;
  if (u < kMinWOverH * (1 - 1e-12) || u > kMaxWOverH * (1 + 1e-12))
    throw InvalidArgument(fmt::format("microstrip: w/h = {:.6g} outside supported range [{}, {}]", u, kMinWOverH,
                                      kMaxWOverH));
  MicrostripProps p;
  p.eps_eff = sub.eps_r == 1.0 ? 1.0 : hj_eps_eff(u, sub.eps_r);
  p.z0 = hj_z0(u, sub.eps_r);
  const double fill = sub.eps_r == 1.0 ? 1.0 : (p.eps_eff - 1.0) / (sub.eps_r - 1.0);
  const double k0 = 2.0 * std::numbers::pi * f_hz / kSpeedOfLight;
  const double alpha = k0 * sub.eps_r * fill * sub.tan_delta / (2.0 * std::sqrt(p.eps_eff));
  p.loss_db_per_mm = alpha * 20.0 / std::numbers::ln10 / 1e3;
  return p;
}

MicrostripSynthesis microstrip_synthesize(double z0_target, const SubstrateSpec& sub, double f_hz) {
  sub.validate();
  const double z_hi = hj_z0(kMinWOverH, sub.eps_r);
  const double z_lo = hj_z0(kMaxWOverH, sub.eps_r);
  if (!(z0_target >= z_lo && z0_target <= z_hi))
    throw InvalidArgument(fmt::format("microstrip_synthesize: {} ohm not achievable; range is [{:.4f}, {:.4f}] ohm",
                                      z0_target, z_lo, z_hi));
  double lo = std::log(kMinWOverH), hi = std::log(kMaxWOverH);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    // z0 decreases with w/h.
    if (hj_z0(std::exp(mid), sub.eps_r) > z0_target)
      lo = mid;
    else
      hi = mid;
  }
  MicrostripSynthesis s;
  s.w_over_h = std::exp(0.5 * (lo + hi));
  s.geom.width = s.w_over_h * sub.height;
  const auto p = microstrip_analyze(s.geom, sub, f_hz);
  s.z0 = p.z0;
  s.eps_eff = p.eps_eff;
  return s;
}

double electrical_to_physical(double electrical_length_deg, double f0, double eps_eff) {
  if (!(eps_eff >= 1.0)) throw InvalidArgument(fmt::format("electrical_to_physical: eps_eff = {} < 1", eps_eff));
  if (!(f0 > 0.0)) throw InvalidArgument("electrical_to_physical: f0 must be > 0");
  return electrical_length_deg / 360.0 * kSpeedOfLight / (f0 * std::sqrt(eps_eff));
}

const char* to_string(StubKind k) noexcept { return k == StubKind::Open ? "open" : "short"; }

cplx stub_admittance(StubKind kind, double z_c, double electrical_length, double f_ref, double f_hz) {
  TLineSpec{z_c, electrical_length, f_ref, std::nullopt, 1.0}.validate();
  const double th = electrical_length * kDegToRad * f_hz / f_ref;
  const double c = std::cos(th), s = std::sin(th);
  if (kind == StubKind::Open) {
    if (std::abs(c) < 1e-12)
      throw SingularMatrixError(fmt::format("open stub resonant (theta = {:.6g} deg) at {:.9g} Hz", th / kDegToRad, f_hz),
                                f_hz);
    return kJ * (s / c) / z_c;
  }
  if (std::abs(s) < 1e-12)
    throw SingularMatrixError(fmt::format("short stub resonant (theta = {:.6g} deg) at {:.9g} Hz", th / kDegToRad, f_hz),
                              f_hz);
  return -kJ * (c / s) / z_c;
}

rf::NPortNetwork stub_twoport(StubKind kind, double z_c, double electrical_length, double f_ref,
                              const rf::FrequencyGrid& grid, double z_ref) {
  return rf::two_port_from_abcd(
      grid, [&](double f) { return shunt_abcd(stub_admittance(kind, z_c, electrical_length, f_ref, f)); }, z_ref);
}

cplx lumped_impedance(LumpedKind kind, double value, double f_hz) {
  if (!(value > 0.0)) throw InvalidArgument(fmt::format("lumped element: value {} must be > 0", value));
  const double w = 2.0 * std::numbers::pi * f_hz;
  switch (kind) {
    case LumpedKind::R: return {value, 0.0};
    case LumpedKind::L: return kJ * w * value;
    case LumpedKind::C: return 1.0 / (kJ * w * value);
  }
  return {};
}

rf::NPortNetwork lumped_twoport(LumpedKind kind, Placement placement, double value, const rf::FrequencyGrid& grid,
                                double z_ref) {
  return rf::two_port_from_abcd(
      grid,
      [&](double f) {
        const cplx z = lumped_impedance(kind, value, f);
        return placement == Placement::Series ? series_abcd(z) : shunt_abcd(1.0 / z);
      },
      z_ref);
}

void WilkinsonSpec::validate() const {
  if (!(z0 > 0.0) || !(f0 > 0.0)) throw InvalidArgument("WilkinsonSpec: z0 and f0 must be > 0");
  if (!(branch_z > 0.0) || !(branch_length > 0.0) || !(r_iso > 0.0))
    throw InvalidArgument("WilkinsonSpec: branch impedance, length and isolation resistor must be > 0");
}

WilkinsonSpec wilkinson_synthesize(double z0, double f0) {
  if (!(z0 > 0.0) || !(f0 > 0.0)) throw InvalidArgument("wilkinson_synthesize: z0 and f0 must be > 0");
  return {z0, f0, std::sqrt(2.0) * z0, 90.0, 2.0 * z0};
}

namespace {

// Dense nodal solve of the divider. Unknowns: V1..V3, then (I_in, I_out) of
// each branch line. Line rows use the ABCD relation directly so the
// half-wave frequency (B = 0) stays regular.
rf::NPortNetwork wilkinson_mna(const WilkinsonSpec& spec, const TLineSpec& line, const rf::FrequencyGrid& grid) {
  std::vector<rf::CMatrix> out;
  out.reserve(grid.size());
  const double g0 = 1.0 / spec.z0, giso = 1.0 / spec.r_iso;
  for (double f : grid.points()) {
    const Eigen::Matrix2cd t = tl_abcd(line, f);
    Eigen::Matrix<cplx, 7, 7> a = Eigen::Matrix<cplx, 7, 7>::Zero();
    for (int p = 0; p < 3; ++p) a(p, p) += g0;
    a(1, 1) += giso;
    a(2, 2) += giso;
    a(1, 2) -= giso;
    a(2, 1) -= giso;
    for (int br = 0; br < 2; ++br) {
      const int far = 1 + br, iin = 3 + 2 * br, iout = iin + 1;
      a(0, iin) += 1.0;
      a(far, iout) -= 1.0;
      a(iin, 0) = 1.0;
      a(iin, far) = -t(0, 0);
      a(iin, iout) = -t(0, 1);
      a(iout, iin) = 1.0;
      a(iout, far) = -t(1, 0);
      a(iout, iout) = -t(1, 1);
    }
    Eigen::PartialPivLU<Eigen::Matrix<cplx, 7, 7>> lu(a);
    if (!(lu.rcond() * rf::kSingularCondition > 1.0))
      throw SingularMatrixError(fmt::format("wilkinson: singular nodal matrix at {:.9g} Hz", f), f);
    rf::CMatrix s(3, 3);
    for (int j = 0; j < 3; ++j) {
      Eigen::Matrix<cplx, 7, 1> rhs = Eigen::Matrix<cplx, 7, 1>::Zero();
      rhs(j) = 2.0 * g0;  // Norton form of a 2 V source behind z0
      const Eigen::Matrix<cplx, 7, 1> x = lu.solve(rhs);
      for (int i = 0; i < 3; ++i) s(i, j) = x(i) - (i == j ? 1.0 : 0.0);
    }
    out.push_back(std::move(s));
  }
  return rf::NPortNetwork(grid, 3, rf::Representation::S, std::move(out), spec.z0);
}

}  // namespace

rf::NPortNetwork wilkinson_analyze(const WilkinsonSpec& spec, const rf::FrequencyGrid& grid,
                                   std::optional<double> branch_loss_db_per_mm, double eps_eff) {
  spec.validate();
  TLineSpec line{spec.branch_z, spec.branch_length, spec.f0, branch_loss_db_per_mm, eps_eff};
  return wilkinson_mna(spec, line, grid);
}

MicrostripWilkinson wilkinson_microstrip(const WilkinsonSpec& spec, const SubstrateSpec& sub) {
  spec.validate();
  MicrostripWilkinson mw;
  mw.branch = microstrip_synthesize(spec.branch_z, sub, spec.f0);
  mw.spec = spec;
  mw.spec.branch_z = mw.branch.z0;
  mw.branch_length_m = electrical_to_physical(spec.branch_length, spec.f0, mw.branch.eps_eff);
  mw.branch.geom.length = mw.branch_length_m;
  mw.loss_db_per_mm = microstrip_analyze(mw.branch.geom, sub, spec.f0).loss_db_per_mm;
  return mw;
}

rf::NPortNetwork wilkinson_analyze(const MicrostripWilkinson& mw, const rf::FrequencyGrid& grid) {
  return wilkinson_analyze(mw.spec, grid, mw.loss_db_per_mm, mw.branch.eps_eff);
}

}  // namespace mmpa::elements
