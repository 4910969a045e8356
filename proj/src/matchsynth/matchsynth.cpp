#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/matchsynth.hpp"
#include "mmpa/units.hpp"

namespace mmpa::match {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Elements shorter than this (degrees, modulo 180) are dropped as identities.
constexpr double kMinLengthDeg = 1e-9;

elements::TLineSpec line_spec(double z_c, double deg, double f0) {
  return elements::TLineSpec{z_c, deg, f0, std::nullopt, 1.0};
}

// Angle in (0, 180] degrees equivalent modulo 180.
double wrap_180(double deg) {
  double d = std::fmod(deg, 180.0);
  if (d <= 0.0) d += 180.0;
  return d;
}

bool is_identity_length(double deg) {
  const double d = std::fmod(std::abs(deg), 180.0);
  return d < kMinLengthDeg || 180.0 - d < kMinLengthDeg;
}

cplx apply(const MatchElement& e, cplx z, double f) {
  switch (e.kind) {
    case ElementKind::SeriesLine:
    case ElementKind::QuarterWave: return elements::tl_input_impedance(e.line, z, f);
    case ElementKind::OpenStub:
    case ElementKind::ShortStub: {
      const auto kind = e.kind == ElementKind::OpenStub ? elements::StubKind::Open : elements::StubKind::Short;
      return 1.0 / (1.0 / z + elements::stub_admittance(kind, e.line.z_c, e.line.electrical_length, e.line.f_ref, f));
    }
  }
  return z;
}

// Shunt stub of z_c whose input admittance is j*b.
std::optional<MatchElement> stub_for(double b, double z_c, double f0, elements::StubKind kind) {
  double deg;
  if (kind == elements::StubKind::Open) {
    if (std::abs(b * z_c) < 1e-15) return std::nullopt;
    deg = wrap_180(std::atan(b * z_c) * kRadToDeg);
  } else {
    deg = wrap_180(std::atan2(-1.0, b * z_c) * kRadToDeg);
    if (std::abs(deg - 90.0) < kMinLengthDeg) return std::nullopt;  // quarter-wave short looks open
  }
  if (is_identity_length(deg)) return std::nullopt;
  return MatchElement{kind == elements::StubKind::Open ? ElementKind::OpenStub : ElementKind::ShortStub,
                      line_spec(z_c, deg, f0)};
}

struct Candidate {
  std::vector<MatchElement> elements;
  double q = 0.0;
  double folded_length = 0.0;
  bool valid = false;
};

void score(Candidate& c, cplx z_load, double z_sys, double f0) {
  MatchingNetwork n;
  n.elements = c.elements;
  n.f0 = f0;
  n.z_load = z_load;
  n.z_sys = z_sys;
  const auto rep = loci(n, z_load, f0);
  const cplx zin = rep.trajectory.back();
  c.valid = std::abs(rf::gamma_of(zin, z_sys)) < 1e-6;
  c.q = rep.max_internal_q;
  c.folded_length = 0.0;
  for (const auto& e : c.elements) {
    const double d = e.line.electrical_length;
    c.folded_length += std::min(d, 180.0 - d);
  }
}

void add_line_then_stub(std::vector<Candidate>& out, cplx z_load, double z_sys, double f0, elements::StubKind kind) {
  const double rl = z_load.real(), xl = z_load.imag(), z0 = z_sys;
  std::vector<double> ts;
  if (std::abs(rl - z0) < 1e-12 * z0) {
    ts.push_back(-xl / (2.0 * z0));
  } else {
    const double root = std::sqrt(rl * ((z0 - rl) * (z0 - rl) + xl * xl) / z0);
    ts.push_back((xl + root) / (rl - z0));
    ts.push_back((xl - root) / (rl - z0));
  }
  for (double t : ts) {
    const double deg = wrap_180(std::atan(t) * kRadToDeg);
    Candidate c;
    cplx z = z_load;
    if (!is_identity_length(deg)) {
      c.elements.push_back({ElementKind::SeriesLine, line_spec(z0, deg, f0)});
      z = elements::tl_input_impedance(c.elements.back().line, z, f0);
    }
    const cplx y = 1.0 / z;
    if (auto s = stub_for(-y.imag(), z0, f0, kind)) c.elements.push_back(*s);
    out.push_back(std::move(c));
  }
}

void add_stub_then_qw(std::vector<Candidate>& out, cplx z_load, double z_sys, double f0, elements::StubKind kind) {
  const cplx y = 1.0 / z_load;
  Candidate c;
  if (auto s = stub_for(-y.imag(), z_sys, f0, kind)) c.elements.push_back(*s);
  const double r = 1.0 / y.real();
  c.elements.push_back({ElementKind::QuarterWave, elements::quarter_wave_transformer(z_sys, r, f0)});
  out.push_back(std::move(c));
}

void add_line_then_qw(std::vector<Candidate>& out, cplx z_load, double z_sys, double f0) {
  const cplx g = rf::gamma_of(z_load, z_sys);
  const double mag = std::abs(g);
  if (mag < 1e-12) return;
  const double phase = std::arg(g);
  // Gamma rotates as e^{-j 2 theta}; real axis at phase 0 (R_max) or pi (R_min).
  for (double target : {0.0, std::numbers::pi}) {
    const double deg = wrap_180((phase - target) / 2.0 * kRadToDeg);
    Candidate c;
    cplx z = z_load;
    if (!is_identity_length(deg)) {
      c.elements.push_back({ElementKind::SeriesLine, line_spec(z_sys, deg, f0)});
      z = elements::tl_input_impedance(c.elements.back().line, z, f0);
    }
    const double r = target == 0.0 ? z_sys * (1 + mag) / (1 - mag) : z_sys * (1 - mag) / (1 + mag);
    c.elements.push_back({ElementKind::QuarterWave, elements::quarter_wave_transformer(z_sys, r, f0)});
    out.push_back(std::move(c));
  }
}

}  // namespace

const char* to_string(ElementKind k) noexcept {
  switch (k) {
    case ElementKind::SeriesLine: return "line";
    case ElementKind::OpenStub: return "open-stub";
    case ElementKind::ShortStub: return "short-stub";
    case ElementKind::QuarterWave: return "quarter-wave";
  }
  return "?";
}

std::string MatchingNetwork::describe() const {
  std::string s = fmt::format("termination {:.4f}{:+.4f}j ohm -> {} ohm at {:.6g} GHz", z_load.real(), z_load.imag(),
                              z_sys, f0 / 1e9);
  if (elements.empty()) s += "\n  (no elements: already matched)";
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    s += fmt::format("\n  {}: {:<12} z_c {:.4f} ohm, {:.4f} deg", i + 1, to_string(e.kind), e.line.z_c,
                     e.line.electrical_length);
  }
  if (constraint_violated) s += "\n  WARNING: Q constraint not met";
  return s;
}

double nodal_q(cplx z) {
  if (!(z.real() > 0.0))
    throw InvalidArgument(fmt::format("nodal_q: non-positive resistance in {}{:+}j ohm", z.real(), z.imag()));
  return std::abs(z.imag()) / z.real();
}

LociReport loci(const MatchingNetwork& net, cplx z_load, double f0) {
  LociReport r;
  r.trajectory.push_back(z_load);
  r.nodal_q.push_back(nodal_q(z_load));
  cplx z = z_load;
  for (std::size_t i = 0; i < net.elements.size(); ++i) {
    z = apply(net.elements[i], z, f0);
    if (!(z.real() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw AnalysisError(fmt::format("loci: element {} ({}) yields non-physical impedance {}{:+}j ohm", i + 1,
                                      to_string(net.elements[i].kind), z.real(), z.imag()));
    r.trajectory.push_back(z);
    r.nodal_q.push_back(nodal_q(z));
  }
  r.max_q = *std::max_element(r.nodal_q.begin(), r.nodal_q.end());
  for (std::size_t i = 1; i + 1 < r.nodal_q.size(); ++i) r.max_internal_q = std::max(r.max_internal_q, r.nodal_q[i]);
  return r;
}

Eigen::Matrix2cd network_abcd(const MatchingNetwork& net, double f_hz) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  for (auto it = net.elements.rbegin(); it != net.elements.rend(); ++it) {
    Eigen::Matrix2cd e;
    switch (it->kind) {
      case ElementKind::SeriesLine:
      case ElementKind::QuarterWave: e = elements::tl_abcd(it->line, f_hz); break;
      case ElementKind::OpenStub:
      case ElementKind::ShortStub: {
        const auto kind = it->kind == ElementKind::OpenStub ? elements::StubKind::Open : elements::StubKind::Short;
        e << 1.0, 0.0, elements::stub_admittance(kind, it->line.z_c, it->line.electrical_length, it->line.f_ref, f_hz),
            1.0;
        break;
      }
    }
    m = m * e;
  }
  return m;
}

cplx input_impedance(const MatchingNetwork& net, cplx z_load, double f_hz) {
  const Eigen::Matrix2cd m = network_abcd(net, f_hz);
  return (m(0, 0) * z_load + m(0, 1)) / (m(1, 0) * z_load + m(1, 1));
}

MatchingNetwork synthesize(cplx z_load, double z_sys, double f0, const SynthesisOptions& opt) {
  if (!(z_load.real() > 0.0))
    throw InvalidArgument(fmt::format("synthesize: Re(z_load) = {} must be > 0", z_load.real()));
  if (!(z_sys > 0.0) || !(f0 > 0.0)) throw InvalidArgument("synthesize: z_sys and f0 must be > 0");
  if (!(opt.q_max >= 0.0)) throw InvalidArgument(fmt::format("synthesize: q_max = {} < 0", opt.q_max));

  MatchingNetwork net;
  net.f0 = f0;
  net.z_load = z_load;
  net.z_sys = z_sys;
  if (std::abs(rf::gamma_of(z_load, z_sys)) < 1e-9) return net;

  std::vector<Candidate> cands;
  const bool real_load = std::abs(z_load.imag()) <= 1e-12 * std::abs(z_load);
  if (opt.topology != Topology::StubLine) {
    if (real_load) {
      Candidate c;
      c.elements.push_back({ElementKind::QuarterWave, elements::quarter_wave_transformer(z_sys, z_load.real(), f0)});
      cands.push_back(std::move(c));
    } else {
      add_stub_then_qw(cands, z_load, z_sys, f0, opt.stub);
      add_line_then_qw(cands, z_load, z_sys, f0);
    }
  }
  if (opt.topology != Topology::QuarterWave) add_line_then_stub(cands, z_load, z_sys, f0, opt.stub);

  for (auto& c : cands) score(c, z_load, z_sys, f0);
  std::erase_if(cands, [](const Candidate& c) { return !c.valid || c.elements.empty(); });
  if (cands.empty()) throw AnalysisError("synthesize: no candidate network reached the system impedance");

  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.elements.size() != b.elements.size()) return a.elements.size() < b.elements.size();
    if (std::abs(a.q - b.q) > 1e-12) return a.q < b.q;
    return a.folded_length < b.folded_length - 1e-9;
  };
  const Candidate* best = nullptr;
  const Candidate* best_any = nullptr;
  for (const auto& c : cands) {
    if (!best_any || c.q < best_any->q - 1e-12 || (std::abs(c.q - best_any->q) <= 1e-12 && better(c, *best_any)))
      best_any = &c;
    if (c.q <= opt.q_max + 1e-9 && (!best || better(c, *best))) best = &c;
  }
  if (best) {
    net.elements = best->elements;
  } else {
    net.elements = best_any->elements;
    net.constraint_violated = true;
  }
  return net;
}

VerifyResult verify(const MatchingNetwork& net, cplx z_load, const rf::FrequencyGrid& grid) {
  VerifyResult v;
  for (double f : grid.points()) {
    const cplx g = rf::gamma_of(input_impedance(net, z_load, f), net.z_sys);
    v.freq.push_back(f);
    v.s11.push_back(g);
    v.s11_db.push_back(20.0 * std::log10(std::max(std::abs(g), 1e-300)));
  }
  const auto n = v.freq.size();
  const auto ib = static_cast<std::size_t>(std::min_element(v.s11_db.begin(), v.s11_db.end()) - v.s11_db.begin());
  const double lim = -10.0;
  if (v.s11_db[ib] > lim) return v;
  auto cross = [&](std::size_t in, std::size_t out) {
    const double t = (lim - v.s11_db[in]) / (v.s11_db[out] - v.s11_db[in]);
    return v.freq[in] + t * (v.freq[out] - v.freq[in]);
  };
  std::size_t lo = ib, hi = ib;
  while (lo > 0 && v.s11_db[lo - 1] <= lim) --lo;
  while (hi + 1 < n && v.s11_db[hi + 1] <= lim) ++hi;
  v.f_lo = lo > 0 ? cross(lo, lo - 1) : v.freq[lo];
  v.f_hi = hi + 1 < n ? cross(hi, hi + 1) : v.freq[hi];
  v.match_bw = v.f_hi - v.f_lo;
  return v;
}

}  // namespace mmpa::match
