#include "mmpa/transient.hpp"

#include <cmath>

#include <Eigen/LU>
#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/units.hpp"

namespace mmpa::hb {

using circuit::Circuit;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct System {
  const Circuit& c;
  Eigen::MatrixXd g, cap;
  Eigen::VectorXd dc, rf;  // rf: injection per volt of source amplitude
  double omega = 0.0;
  double amp = 0.0;

  Eigen::VectorXd sources(double t) const { return dc + amp * std::cos(omega * t) * rf; }

  // f(x, t) = G x + i(x) - b(t), with its Jacobian.
  Eigen::VectorXd f(const Eigen::VectorXd& x, double t, Eigen::MatrixXd* jac) const {
    Eigen::VectorXd r = g * x - sources(t);
    circuit::Stamp<double> st;
    c.eval_nonlinear(x, r, jac ? &st : nullptr);
    if (jac) {
      *jac = g;
      for (const auto& e : st.entries) (*jac)(e.row(), e.col()) += e.value();
    }
    return r;
  }
};

}  // namespace

TransientResult transient_solve(const circuit::Netlist& netlist, const TransientOptions& opt) {
  netlist.validate();
  if (!(opt.dt > 0.0) || !(opt.t_stop > 0.0) || opt.t_stop < opt.dt)
    throw InvalidArgument(fmt::format("transient needs 0 < dt <= t_stop (dt {}, t_stop {})", opt.dt, opt.t_stop));
  auto circ = std::make_shared<const Circuit>(netlist);
  const Circuit& c = *circ;
  if (!c.lines().empty() || !c.feeds().empty() || !c.blocks().empty())
    throw InvalidArgument("transient analysis supports R, L, C, VDC, PORT, FET and NLG only");

  const int n = c.size();
  System sys{c, Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), c.dc_sources(), Eigen::VectorXd::Zero(n)};
  circuit::Stamp<double> dc;
  c.stamp_dc(dc);
  for (const auto& e : dc.entries) sys.g(e.row(), e.col()) += e.value();
  auto cadd = [&](int r, int col, double v) {
    if (r >= 0 && col >= 0) sys.cap(r, col) += v;
  };
  for (const auto& k : c.capacitors()) {
    cadd(k.a, k.a, k.c);
    cadd(k.b, k.b, k.c);
    cadd(k.a, k.b, -k.c);
    cadd(k.b, k.a, -k.c);
  }
  for (const auto& l : c.inductors()) cadd(l.aux, l.aux, -l.l);

  const double f0 = opt.f0 > 0.0 ? opt.f0 : netlist.f0.value_or(0.0);
  if (c.rf_port() >= 0 && std::isfinite(opt.p_avail_dbm)) {
    if (!(f0 > 0.0)) throw InvalidArgument("driven transient needs a fundamental frequency");
    const auto& p = c.ports()[static_cast<std::size_t>(c.rf_port())];
    sys.amp = std::sqrt(8.0 * p.z * rf::dbm_to_watt(opt.p_avail_dbm));
    sys.omega = kTwoPi * f0;
    if (p.a >= 0) sys.rf[p.a] += 1.0 / p.z;
    if (p.b >= 0) sys.rf[p.b] -= 1.0 / p.z;
    const double need = 20.0 * std::max(1, opt.n_harmonics);
    if (1.0 / (f0 * opt.dt) < need * (1.0 - 1e-9))
      throw InvalidArgument(fmt::format("dt {} gives {:.1f} points per period; need >= {} for {} harmonics", opt.dt,
                                        1.0 / (f0 * opt.dt), need, opt.n_harmonics));
  }

  // Rows without a reactive term are enforced exactly at every time point.
  Eigen::VectorXd w(n);
  for (int r = 0; r < n; ++r) w[r] = sys.cap.row(r).cwiseAbs().maxCoeff() > 0.0 ? 0.5 : 1.0;

  auto newton = [&](Eigen::VectorXd x, auto&& residual_jac, const char* what, double t) {
    Eigen::MatrixXd j;
    for (int it = 0; it < opt.newton_max_iter; ++it) {
      const Eigen::VectorXd r = residual_jac(x, j);
      if (r.norm() <= opt.newton_tol) return x;
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
      Eigen::VectorXd dx = lu.solve(-r);
      if (!dx.allFinite()) throw SingularMatrixError(fmt::format("singular {} matrix at t = {} s", what, t), 0.0);
      const double vmax = c.has_nonlinear() ? dx.head(c.node_count()).cwiseAbs().maxCoeff() : 0.0;
      if (vmax > 0.5) dx *= 0.5 / vmax;
      x += dx;
    }
    const Eigen::VectorXd r = residual_jac(x, j);
    if (r.norm() > std::max(opt.newton_tol * 1e3, 1e-8))
      throw AnalysisError(fmt::format("{} Newton failed at t = {} s (residual {:.3g} A)", what, t, r.norm()));
    return x;
  };

  // Initial state: DC operating point with the sources at t = 0, reached by
  // ramping the sources from zero.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (opt.start_from_dc) {
    const int ramps = 10;
    const Eigen::VectorXd b0 = sys.sources(0.0);
    for (int s = 1; s <= ramps; ++s) {
      const double a = static_cast<double>(s) / ramps;
      x = newton(
          x,
          [&](const Eigen::VectorXd& xx, Eigen::MatrixXd& j) {
            Eigen::VectorXd r = sys.f(xx, 0.0, &j) + (1.0 - a) * b0;
            return r;
          },
          "DC", 0.0);
    }
  }

  const auto steps = static_cast<int>(std::ceil(opt.t_stop / opt.dt - 1e-9));
  TransientResult res;
  res.circuit = circ;
  res.steps = steps;
  res.time.resize(static_cast<std::size_t>(steps) + 1);
  res.states.resize(steps + 1, n);
  res.time[0] = 0.0;
  res.states.row(0) = x.transpose();

  const double h = opt.dt;
  const int nn = c.node_count();
  Eigen::VectorXd peak = x.head(nn).cwiseAbs();
  Eigen::VectorXd f_prev = sys.f(x, 0.0, nullptr);
  for (int step = 1; step <= steps; ++step) {
    const double t = step * h;
    const Eigen::VectorXd x0 = x;
    const bool euler = step == 1 && !opt.start_from_dc;
    const Eigen::VectorXd ws = euler ? Eigen::VectorXd::Ones(n) : w;
    x = newton(
        x,
        [&](const Eigen::VectorXd& xx, Eigen::MatrixXd& j) {
          Eigen::MatrixXd jf;
          const Eigen::VectorXd f1 = sys.f(xx, t, &jf);
          j = sys.cap / h;
          j.noalias() += ws.asDiagonal() * jf;
          return Eigen::VectorXd(sys.cap * (xx - x0) / h + ws.cwiseProduct(f1) +
                                 (Eigen::VectorXd::Ones(n) - ws).cwiseProduct(f_prev));
        },
        "transient", t);
    f_prev = sys.f(x, t, nullptr);
    res.time[static_cast<std::size_t>(step)] = t;
    res.states.row(step) = x.transpose();
    peak = peak.cwiseMax(x.head(nn).cwiseAbs());

    if (step >= 4) {
      const Eigen::VectorXd d3 = (res.states.row(step) - 3.0 * res.states.row(step - 1) +
                                  3.0 * res.states.row(step - 2) - res.states.row(step - 3))
                                     .head(nn)
                                     .transpose();
      for (int u = 0; u < nn; ++u) {
        const double lte = std::abs(d3[u]) / 12.0;
        const double bound = opt.lte_reltol * peak[u] + opt.lte_abstol;
        if (lte > bound)
          throw AnalysisError(fmt::format(
              "step rejected at t = {:.6g} s: local truncation estimate {:.3g} V at node {} exceeds {:.3g} V; "
              "reduce dt",
              t, lte, c.node_names()[static_cast<std::size_t>(u)], bound));
      }
    }
  }
  return res;
}

Waveform TransientResult::waveform(const std::string& node) const {
  const int u = circuit->node_index(node);
  Waveform w{time, std::vector<double>(time.size(), 0.0)};
  if (u >= 0)
    for (std::size_t i = 0; i < time.size(); ++i) w.x[i] = states(static_cast<Eigen::Index>(i), u);
  return w;
}

Waveform TransientResult::port_waveform(std::size_t port) const {
  const auto& p = circuit->ports().at(port);
  Waveform w{time, std::vector<double>(time.size(), 0.0)};
  for (std::size_t i = 0; i < time.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    w.x[i] = (p.a >= 0 ? states(r, p.a) : 0.0) - (p.b >= 0 ? states(r, p.b) : 0.0);
  }
  return w;
}

std::vector<rf::cplx> spectrum_of(const Waveform& w, double f0, int n_harmonics, double settle) {
  if (!(f0 > 0.0)) throw InvalidArgument("spectrum_of needs f0 > 0");
  if (n_harmonics < 0) throw InvalidArgument("spectrum_of needs K >= 0");
  if (w.t.size() != w.x.size() || w.t.size() < 2) throw InvalidArgument("waveform needs matching t and x with >= 2 samples");
  const double dt = w.t[1] - w.t[0];
  const double spp = 1.0 / (f0 * dt);
  const auto per = static_cast<std::size_t>(std::llround(spp));
  if (per < 2 || std::abs(spp - static_cast<double>(per)) > 1e-6 * spp)
    throw InvalidArgument(fmt::format("{:.6g} samples per period is not an integer", spp));
  if (2 * static_cast<std::size_t>(n_harmonics) >= per)
    throw InvalidArgument(fmt::format("{} samples per period cannot resolve {} harmonics", per, n_harmonics));
  std::size_t first = 0;
  while (first < w.t.size() && w.t[first] < settle - 0.5 * dt) ++first;
  const std::size_t avail = w.t.size() - first;
  const std::size_t periods = avail / per;
  if (periods < 4)
    throw InvalidArgument(fmt::format("waveform after settling covers {:.2f} periods; need at least 4",
                                      static_cast<double>(avail) / static_cast<double>(per)));
  const std::size_t len = periods * per;
  const std::size_t start = w.t.size() - len;

  std::vector<rf::cplx> out(static_cast<std::size_t>(n_harmonics) + 1);
  for (int k = 0; k <= n_harmonics; ++k) {
    rf::cplx acc{};
    for (std::size_t i = start; i < w.t.size(); ++i) {
      const double cyc = std::fmod(k * f0 * w.t[i], 1.0);
      acc += w.x[i] * std::polar(1.0, -kTwoPi * cyc);
    }
    acc *= (k == 0 ? 1.0 : 2.0) / static_cast<double>(len);
    if (k == 0) acc = {acc.real(), 0.0};
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

}  // namespace mmpa::hb
