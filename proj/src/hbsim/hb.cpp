#include "mmpa/hb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/kernels.hpp"
#include "mmpa/units.hpp"

namespace mmpa::hb {

using circuit::Circuit;
using circuit::Stamp;
using Triplets = std::vector<Eigen::Triplet<double>>;

void HbConfig::validate() const {
  if (!(f0 > 0.0) || !std::isfinite(f0)) throw InvalidArgument(fmt::format("HB f0 must be > 0 (got {})", f0));
  if (n_harmonics < 1) throw InvalidArgument("HB needs at least one harmonic");
  if (!(tol > 0.0)) throw InvalidArgument("HB tolerance must be > 0");
  if (max_iter < 1) throw InvalidArgument("HB max_iter must be >= 1");
  if (source_steps < 1) throw InvalidArgument("HB source_steps must be >= 1");
  if (oversample < 4 * n_harmonics + 1)
    throw InvalidArgument(fmt::format("oversample {} below 4K+1 = {}", oversample, 4 * n_harmonics + 1));
}

namespace {

int re_slot(int k) { return 2 * k - 1; }
int im_slot(int k) { return 2 * k; }

// Fourier coefficients of a real time waveform g(t) as the C/S pair used by
// the harmonic Jacobian: g(t) = sum_m C_m cos(m t) - S_m sin(m t) over m in Z.
struct Spectral {
  std::vector<double> c, s;
  double C(int m) const { return c[static_cast<std::size_t>(std::abs(m))]; }
  double S(int m) const { return m >= 0 ? s[static_cast<std::size_t>(m)] : -s[static_cast<std::size_t>(-m)]; }
};

Spectral spectral(const std::vector<std::complex<double>>& g) {
  Spectral out;
  out.c.resize(g.size());
  out.s.resize(g.size());
  out.c[0] = g[0].real();
  out.s[0] = 0.0;
  for (std::size_t m = 1; m < g.size(); ++m) {
    out.c[m] = 0.5 * g[m].real();
    out.s[m] = -0.5 * g[m].imag();
  }
  return out;
}

// H x H block d(harmonics of g*v)/d(harmonics of v).
void conversion_block(const Spectral& g, int K, Eigen::MatrixXd& b) {
  const int h = 2 * K + 1;
  b.setZero(h, h);
  b(0, 0) = g.C(0);
  for (int l = 1; l <= K; ++l) {
    b(0, re_slot(l)) = g.C(l);
    b(0, im_slot(l)) = -g.S(l);
  }
  for (int k = 1; k <= K; ++k) {
    b(re_slot(k), 0) = 2.0 * g.C(k);
    b(im_slot(k), 0) = -2.0 * g.S(k);
    for (int l = 1; l <= K; ++l) {
      b(re_slot(k), re_slot(l)) = g.C(k - l) + g.C(k + l);
      b(re_slot(k), im_slot(l)) = -(g.S(k + l) - g.S(k - l));
      b(im_slot(k), re_slot(l)) = -(g.S(k + l) + g.S(k - l));
      b(im_slot(k), im_slot(l)) = g.C(k - l) - g.C(k + l);
    }
  }
}

}  // namespace

struct HbEngine::Impl {
  std::shared_ptr<const Circuit> c;
  HbConfig cfg;
  circuit::Terminations term;
  int n = 0, h = 0, K = 0;
  Eigen::SparseMatrix<double> lin;
  Eigen::VectorXd dc_src;   // DC supplies, full size
  Eigen::VectorXd rf_unit;  // RF source injection for a 1 V source amplitude
  kernels::DftTable table;
  double rf_z_real = 0.0;

  Impl(std::shared_ptr<const Circuit> circ, HbConfig config, circuit::Terminations t)
      : c(std::move(circ)), cfg(config), term(std::move(t)), table(static_cast<std::size_t>(config.oversample),
                                                                    static_cast<std::size_t>(2 * config.n_harmonics)) {}

  int idx(int u, int slot) const { return u * h + slot; }

  cplx phasor(const Eigen::VectorXd& x, int u, int k) const {
    if (u < 0) return {};
    if (k == 0) return {x[idx(u, 0)], 0.0};
    return {x[idx(u, re_slot(k))], x[idx(u, im_slot(k))]};
  }

  void build() {
    n = c->size();
    K = cfg.n_harmonics;
    h = 2 * K + 1;
    Triplets trip;
    Stamp<double> dc;
    c->stamp_dc(dc);
    for (const auto& e : dc.entries) trip.emplace_back(idx(e.row(), 0), idx(e.col(), 0), e.value());
    for (int k = 1; k <= K; ++k) {
      Stamp<cplx> st;
      c->stamp_linear(k * cfg.f0, st, k == 1 ? term : circuit::Terminations{});
      for (const auto& e : st.entries) {
        const double ar = e.value().real(), ai = e.value().imag();
        const int r = e.row(), col = e.col();
        trip.emplace_back(idx(r, re_slot(k)), idx(col, re_slot(k)), ar);
        trip.emplace_back(idx(r, im_slot(k)), idx(col, im_slot(k)), ar);
        if (ai != 0.0) {
          trip.emplace_back(idx(r, re_slot(k)), idx(col, im_slot(k)), -ai);
          trip.emplace_back(idx(r, im_slot(k)), idx(col, re_slot(k)), ai);
        }
      }
    }
    lin.resize(n * h, n * h);
    lin.setFromTriplets(trip.begin(), trip.end());

    dc_src = Eigen::VectorXd::Zero(n * h);
    const Eigen::VectorXd d = c->dc_sources();
    for (int u = 0; u < n; ++u) dc_src[idx(u, 0)] = d[u];

    rf_unit = Eigen::VectorXd::Zero(n * h);
    const int p = c->rf_port();
    if (p >= 0) {
      const auto& port = c->ports()[static_cast<std::size_t>(p)];
      cplx z = port.z;
      if (auto it = term.find(static_cast<std::size_t>(p)); it != term.end()) z = it->second;
      rf_z_real = z.real();
      const cplx inj = 1.0 / z;
      if (port.a >= 0) {
        rf_unit[idx(port.a, re_slot(1))] += inj.real();
        rf_unit[idx(port.a, im_slot(1))] += inj.imag();
      }
      if (port.b >= 0) {
        rf_unit[idx(port.b, re_slot(1))] -= inj.real();
        rf_unit[idx(port.b, im_slot(1))] -= inj.imag();
      }
    }
  }

  // Time samples of the branch voltage v_a - v_b.
  void samples(const Eigen::VectorXd& x, int a, int b, std::vector<double>& out,
               std::vector<std::complex<double>>& ph) const {
    ph.assign(static_cast<std::size_t>(K + 1), {});
    for (int k = 0; k <= K; ++k) ph[static_cast<std::size_t>(k)] = phasor(x, a, k) - phasor(x, b, k);
    out.resize(table.samples());
    kernels::idft_synthesize(table, ph, out);
  }

  void add_current(Eigen::VectorXd& f, int node, double sign, const std::vector<std::complex<double>>& i) const {
    if (node < 0) return;
    f[idx(node, 0)] += sign * i[0].real();
    for (int k = 1; k <= K; ++k) {
      f[idx(node, re_slot(k))] += sign * i[static_cast<std::size_t>(k)].real();
      f[idx(node, im_slot(k))] += sign * i[static_cast<std::size_t>(k)].imag();
    }
  }

  void add_block(Triplets& t, int row, int col, double sign, const Eigen::MatrixXd& b) const {
    if (row < 0 || col < 0) return;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j)
        if (b(i, j) != 0.0) t.emplace_back(idx(row, i), idx(col, j), sign * b(i, j));
  }

  // Nonlinear currents (and Jacobian triplets when jac != nullptr).
  void nonlinear(const Eigen::VectorXd& x, Eigen::VectorXd& f, Triplets* jac) const {
    const std::size_t ns = table.samples();
    std::vector<double> vgs, vds, ids(ns), gm(ns), gds(ns);
    std::vector<std::complex<double>> ph, cur(static_cast<std::size_t>(K + 1)),
        gspec(static_cast<std::size_t>(2 * K + 1));
    Eigen::MatrixXd bm, bd;
    for (const auto& q : c->fets()) {
      samples(x, q.g, q.s, vgs, ph);
      samples(x, q.d, q.s, vds, ph);
      const auto co = q.p.coeffs();
      if (jac)
        kernels::phemt_eval(co, vgs, vds, ids, gm, gds);
      else
        kernels::phemt_eval(co, vgs, vds, ids, {}, {});
      kernels::dft_project(table, ids, cur);
      add_current(f, q.d, 1.0, cur);
      add_current(f, q.s, -1.0, cur);
      if (!jac) continue;
      kernels::dft_project(table, gm, gspec);
      conversion_block(spectral(gspec), K, bm);
      kernels::dft_project(table, gds, gspec);
      conversion_block(spectral(gspec), K, bd);
      const Eigen::MatrixXd bsum = bm + bd;
      for (double sign : {1.0, -1.0}) {
        const int row = sign > 0 ? q.d : q.s;
        add_block(*jac, row, q.g, sign, bm);
        add_block(*jac, row, q.d, sign, bd);
        add_block(*jac, row, q.s, -sign, bsum);
      }
    }
    std::vector<double> v, i(ns), g(ns);
    for (const auto& q : c->cubics()) {
      samples(x, q.a, q.b, v, ph);
      for (std::size_t m = 0; m < ns; ++m) {
        i[m] = q.g1 * v[m] + q.g3 * v[m] * v[m] * v[m];
        g[m] = q.g1 + 3.0 * q.g3 * v[m] * v[m];
      }
      kernels::dft_project(table, i, cur);
      add_current(f, q.a, 1.0, cur);
      add_current(f, q.b, -1.0, cur);
      if (!jac) continue;
      kernels::dft_project(table, g, gspec);
      conversion_block(spectral(gspec), K, bm);
      add_block(*jac, q.a, q.a, 1.0, bm);
      add_block(*jac, q.a, q.b, -1.0, bm);
      add_block(*jac, q.b, q.a, -1.0, bm);
      add_block(*jac, q.b, q.b, 1.0, bm);
    }
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& x, double amp) const {
    Eigen::VectorXd f = lin * x - dc_src - amp * rf_unit;
    nonlinear(x, f, nullptr);
    return f;
  }

  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x) const {
    Triplets t;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n * h);
    nonlinear(x, f, &t);
    Eigen::SparseMatrix<double> j(n * h, n * h);
    j.setFromTriplets(t.begin(), t.end());
    return lin + j;
  }

  struct Outcome {
    Eigen::VectorXd x;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
  };

  Outcome newton(Eigen::VectorXd x, double amp) const {
    Outcome o;
    Eigen::VectorXd f = residual(x, amp);
    double norm = f.norm();
    o.history.push_back(norm);
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    while (norm > cfg.tol && o.iterations < cfg.max_iter) {
      const Eigen::SparseMatrix<double> j = jacobian(x);
      if (!analyzed) {
        lu.analyzePattern(j);
        analyzed = true;
      }
      lu.factorize(j);
      if (lu.info() != Eigen::Success)
        throw SingularMatrixError(fmt::format("singular harmonic-balance Jacobian at f0 = {} Hz", cfg.f0), cfg.f0);
      const Eigen::VectorXd dx = lu.solve(-f);
      if (!dx.allFinite())
        throw SingularMatrixError(fmt::format("singular harmonic-balance Jacobian at f0 = {} Hz", cfg.f0), cfg.f0);
      ++o.iterations;
      // Backtracking on the residual norm.
      double step = 1.0;
      Eigen::VectorXd xt, ft;
      double nt = 0.0;
      for (int tries = 0; tries < 12; ++tries) {
        xt = x + step * dx;
        ft = residual(xt, amp);
        nt = ft.norm();
        if (std::isfinite(nt) && nt < norm * (1.0 - 1e-4 * step)) break;
        step *= 0.5;
      }
      if (!std::isfinite(nt) || nt >= norm) break;  // stalled
      x = std::move(xt);
      f = std::move(ft);
      norm = nt;
      o.history.push_back(norm);
    }
    o.x = std::move(x);
    o.residual = norm;
    o.converged = norm <= cfg.tol;
    return o;
  }
};

HbEngine::HbEngine(std::shared_ptr<const Circuit> c, HbConfig cfg, circuit::Terminations term) {
  if (!c) throw InvalidArgument("HbEngine needs a circuit");
  cfg.validate();
  for (const auto& [port, z] : term) {
    if (port >= c->ports().size()) throw InvalidArgument(fmt::format("termination for unknown port {}", port));
    if (!(z.real() > 0.0)) throw InvalidArgument("termination impedance must have a positive real part");
  }
  impl_ = std::make_shared<Impl>(std::move(c), cfg, std::move(term));
  impl_->build();
  n_ = impl_->n;
  h_ = impl_->h;
}

double HbEngine::source_amplitude(double p_avail_dbm) const {
  if (impl_->c->rf_port() < 0) return 0.0;
  const double p = rf::dbm_to_watt(p_avail_dbm);
  return std::sqrt(8.0 * impl_->rf_z_real * p);
}

Eigen::VectorXd HbEngine::residual(const Eigen::VectorXd& x, double source_scale) const {
  if (x.size() != unknowns()) throw InvalidArgument("HB state has the wrong size");
  return impl_->residual(x, source_scale);
}

Eigen::SparseMatrix<double> HbEngine::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != unknowns()) throw InvalidArgument("HB state has the wrong size");
  return impl_->jacobian(x);
}

HarmonicSolution HbEngine::solve(double p_avail_dbm, const HarmonicSolution* warm) const {
  const Impl& m = *impl_;
  const double amp = source_amplitude(p_avail_dbm);
  if (!std::isfinite(amp)) throw InvalidArgument("drive power must be finite or -inf");

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(unknowns());
  double amp0 = 0.0;
  if (warm && warm->state.size() == unknowns() && warm->circuit == m.c) {
    x0 = warm->state;
    amp0 = warm->source_amplitude;
  } else {
    const auto op = circuit::dc_operating_point(m.c);
    for (int u = 0; u < m.n; ++u) x0[m.idx(u, 0)] = op.x[u];
  }

  HarmonicSolution sol;
  sol.circuit = m.c;
  sol.config = m.cfg;
  sol.terminations = m.term;
  sol.p_avail_dbm = p_avail_dbm;
  sol.source_amplitude = amp;

  auto finish = [&](Impl::Outcome& o, int total) {
    sol.state = std::move(o.x);
    sol.converged = o.converged;
    sol.iterations = o.iterations;
    sol.total_iterations = total;
    sol.residual = o.residual;
    sol.residual_history = std::move(o.history);
    return sol;
  };

  auto direct = m.newton(x0, amp);
  if (direct.converged) return finish(direct, direct.iterations);

  // Source stepping from the starting drive; failed stages are bisected.
  int total = direct.iterations;
  Eigen::VectorXd x = x0;
  double a_done = amp0;
  const double da = (amp - amp0) / m.cfg.source_steps;
  double step = da;
  Impl::Outcome last;
  int bisections = 0;
  while (true) {
    const bool final_stage = std::abs(amp - a_done) <= std::abs(step) * (1.0 + 1e-12) || step == 0.0;
    const double a_next = final_stage ? amp : a_done + step;
    auto o = m.newton(x, a_next);
    total += o.iterations;
    if (o.converged) {
      x = o.x;
      a_done = a_next;
      if (final_stage) {
        last = std::move(o);
        break;
      }
      step = std::copysign(std::min(2.0 * std::abs(step), std::abs(da)), da);
      continue;
    }
    if (++bisections > 8 * m.cfg.source_steps || std::abs(step) < std::abs(da) / 256.0) {
      // Return the best iterate at the requested drive.
      last = m.newton(x, amp);
      total += last.iterations;
      if (!last.converged && direct.residual < last.residual) last = std::move(direct);
      break;
    }
    step *= 0.5;
  }
  return finish(last, total);
}

HarmonicSolution hb_solve(const circuit::Netlist& netlist, const HbConfig& config, double p_avail_dbm,
                          const circuit::Terminations& term) {
  netlist.validate();
  if (!netlist.rf_port()) throw InvalidArgument("harmonic balance needs an RF source port (rf=1)");
  auto c = std::make_shared<const Circuit>(netlist);
  return HbEngine(c, config, term).solve(p_avail_dbm);
}

cplx HarmonicSolution::phasor(int unknown, int k) const {
  if (unknown < 0) return {};
  const int h = 2 * config.n_harmonics + 1;
  if (k < 0 || k > config.n_harmonics) throw InvalidArgument(fmt::format("harmonic {} out of range", k));
  if (k == 0) return {state[unknown * h], 0.0};
  return {state[unknown * h + re_slot(k)], state[unknown * h + im_slot(k)]};
}

std::vector<cplx> HarmonicSolution::voltage(const std::string& node) const {
  const int u = circuit->node_index(node);
  std::vector<cplx> v;
  for (int k = 0; k <= config.n_harmonics; ++k) v.push_back(phasor(u, k));
  return v;
}

std::vector<cplx> HarmonicSolution::port_voltage(std::size_t port) const {
  const auto& p = circuit->ports().at(port);
  std::vector<cplx> v;
  for (int k = 0; k <= config.n_harmonics; ++k) v.push_back(phasor(p.a, k) - phasor(p.b, k));
  return v;
}

cplx HarmonicSolution::port_termination(std::size_t port, int k) const {
  if (k == 1)
    if (auto it = terminations.find(port); it != terminations.end()) return it->second;
  return circuit->ports().at(port).z;
}

std::vector<cplx> HarmonicSolution::port_current(std::size_t port) const {
  const auto v = port_voltage(port);
  const bool src = static_cast<int>(port) == circuit->rf_port();
  std::vector<cplx> i;
  for (int k = 0; k <= config.n_harmonics; ++k) {
    const cplx vs = src && k == 1 ? cplx(source_amplitude, 0.0) : cplx{};
    i.push_back((v[static_cast<std::size_t>(k)] - vs) / port_termination(port, k));
  }
  return i;
}

double HarmonicSolution::supply_power() const {
  double p = 0.0;
  for (const auto& s : circuit->supplies()) p += s.v * -phasor(s.aux, 0).real();
  return p;
}

double hb_power(const HarmonicSolution& sol, std::size_t port, int harmonic) {
  if (!sol.converged) throw AnalysisError("hb_power: solution did not converge");
  if (port >= sol.circuit->ports().size()) throw InvalidArgument(fmt::format("no port {}", port));
  if (harmonic < 0 || harmonic > sol.harmonics()) throw InvalidArgument(fmt::format("harmonic {} out of range", harmonic));
  const auto k = static_cast<std::size_t>(harmonic);
  const cplx v = sol.port_voltage(port)[k];
  const cplx i = sol.port_current(port)[k];
  if (harmonic == 0) return v.real() * i.real();
  return 0.5 * std::real(v * std::conj(i));
}

double PowerBalance::relative_error() const {
  const double d = delivered();
  const double scale = std::max({std::abs(d), std::abs(absorbed()), 1e-30});
  return std::abs(d - absorbed()) / scale;
}

PowerBalance power_balance(const HarmonicSolution& sol) {
  const Circuit& c = *sol.circuit;
  const int K = sol.harmonics();
  auto pw = [](int k, cplx v, cplx i) { return k == 0 ? v.real() * i.real() : 0.5 * std::real(v * std::conj(i)); };
  auto vbr = [&](int a, int b, int k) { return sol.phasor(a, k) - sol.phasor(b, k); };

  PowerBalance pb;
  pb.supplies = sol.supply_power();
  for (int k = 0; k <= K; ++k) {
    for (const auto& r : c.conductances()) {
      const cplx v = vbr(r.a, r.b, k);
      pb.resistors += pw(k, v, r.g * v);
    }
    for (std::size_t p = 0; p < c.ports().size(); ++p) {
      const cplx i = sol.port_current(p)[static_cast<std::size_t>(k)];
      const cplx z = k == 0 ? cplx(c.ports()[p].z, 0.0) : sol.port_termination(p, k);
      // Current through the termination impedance, from the network side.
      pb.ports += k == 0 ? i.real() * i.real() * z.real() : 0.5 * std::norm(i) * z.real();
      if (static_cast<int>(p) == c.rf_port() && k == 1)
        pb.rf_source += 0.5 * std::real(cplx(sol.source_amplitude, 0.0) * std::conj(-i));
    }
    for (const auto& l : c.lines()) {
      pb.lines += pw(k, vbr(l.a, -1, k), sol.phasor(l.aux_in, k));
      pb.lines -= pw(k, vbr(l.b, -1, k), sol.phasor(l.aux_out, k));
    }
  }
  // Device power from the harmonic currents actually enforced by KCL.
  const std::size_t ns = static_cast<std::size_t>(sol.config.oversample);
  kernels::DftTable table(ns, static_cast<std::size_t>(K));
  auto wave = [&](int a, int b) {
    std::vector<std::complex<double>> ph;
    for (int k = 0; k <= K; ++k) ph.push_back(vbr(a, b, k));
    std::vector<double> out(ns);
    kernels::idft_synthesize(table, ph, out);
    return std::pair{out, ph};
  };
  std::vector<std::complex<double>> cur(static_cast<std::size_t>(K + 1));
  auto device_power = [&](const std::vector<std::complex<double>>& v) {
    double p = 0.0;
    for (int k = 0; k <= K; ++k) p += pw(k, v[static_cast<std::size_t>(k)], cur[static_cast<std::size_t>(k)]);
    return p;
  };
  for (const auto& q : c.fets()) {
    const auto [vgs, pg] = wave(q.g, q.s);
    const auto [vds, pd] = wave(q.d, q.s);
    std::vector<double> ids(ns);
    kernels::phemt_eval(q.p.coeffs(), vgs, vds, ids, {}, {});
    kernels::dft_project(table, ids, cur);
    pb.devices += device_power(pd);
  }
  for (const auto& q : c.cubics()) {
    const auto [v, pv] = wave(q.a, q.b);
    std::vector<double> i(ns);
    for (std::size_t m = 0; m < ns; ++m) i[m] = q.g1 * v[m] + q.g3 * v[m] * v[m] * v[m];
    kernels::dft_project(table, i, cur);
    pb.devices += device_power(pv);
  }
  return pb;
}

}  // namespace mmpa::hb
