#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "mmpa/circuit.hpp"
#include "mmpa/errors.hpp"
#include "mmpa/parallel.hpp"

namespace mmpa::circuit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double at(const Eigen::VectorXd& x, int i) { return i >= 0 ? x[i] : 0.0; }

}  // namespace

int Circuit::node(const std::string& name) {
  if (name == kGround) return -1;
  auto [it, inserted] = index_.emplace(name, n_nodes_);
  if (inserted) {
    names_.push_back(name);
    ++n_nodes_;
  }
  return it->second;
}

// Auxiliary unknowns are numbered after all nodes once compilation is done;
// until then they hold negative placeholders -2, -3, ...
int Circuit::aux() { return -2 - n_aux_++; }

Circuit::Circuit(Netlist netlist) : netlist_(std::move(netlist)) {
  netlist_.validate();
  for (const auto& e : netlist_.elements)
    for (const auto& n : e.nodes) node(n);

  for (const auto& e : netlist_.elements) {
    std::vector<int> t;
    for (const auto& n : e.nodes) t.push_back(node(n));
    switch (e.kind) {
      case ElementKind::R: res_.push_back({t[0], t[1], 1.0 / e.get("r")}); break;
      case ElementKind::L: inds_.push_back({t[0], t[1], aux(), e.get("l")}); break;
      case ElementKind::C: caps_.push_back({t[0], t[1], e.get("c")}); break;
      case ElementKind::TL: {
        elements::TLineSpec s{e.get("z"), e.get("deg"), e.get("f"), std::nullopt, e.get_or("eeff", 1.0)};
        if (e.has("loss")) s.loss_db_per_mm = e.get("loss");
        const int a1 = aux(), a2 = aux();
        lines_.push_back({t[0], t[1], a1, a2, s});
        break;
      }
      case ElementKind::OSTUB:
      case ElementKind::SSTUB: {
        elements::TLineSpec s{e.get("z"), e.get("deg"), e.get("f"), std::nullopt, 1.0};
        const int far = e.kind == ElementKind::OSTUB ? node(e.id + "#open") : -1;
        const int a1 = aux(), a2 = aux();
        lines_.push_back({t[0], far, a1, a2, s});
        break;
      }
      case ElementKind::FET: {
        device::PhemtParams p = netlist_.models.at(e.model);
        if (e.has("w") || e.has("nf"))
          p = device::scale(p, e.get_or("w", p.unit_width), static_cast<int>(e.get_or("nf", p.n_fingers)));
        auto inner = [&](int ext, double r, const char* tag) {
          if (r <= 0.0) return ext;
          const int in = node(e.id + "#" + tag);
          res_.push_back({ext, in, 1.0 / r});
          return in;
        };
        const int d = inner(t[0], p.r_d, "d"), g = inner(t[1], p.r_g, "g"), s = inner(t[2], p.r_s, "s");
        if (p.c_gs > 0) caps_.push_back({g, s, p.c_gs});
        if (p.c_gd > 0) caps_.push_back({g, d, p.c_gd});
        if (p.c_ds > 0) caps_.push_back({d, s, p.c_ds});
        fets_.push_back({g, d, s, p, e.id});
        break;
      }
      case ElementKind::NLG: cubics_.push_back({t[0], t[1], e.get_or("g1", 0.0), e.get_or("g3", 0.0), e.id}); break;
      case ElementKind::VDC: supplies_.push_back({t[0], t[1], aux(), e.get_or("v", 0.0), e.id}); break;
      case ElementKind::FEED: feeds_.push_back({t[0], t[1], aux()}); break;
      case ElementKind::BLOCK: blocks_.push_back({t[0], t[1], aux()}); break;
      case ElementKind::PORT: {
        const bool rf = e.get_or("rf", 0.0) != 0.0;
        if (rf) rf_port_ = static_cast<int>(ports_.size());
        ports_.push_back({t[0], t[1], e.get_or("z", rf::kDefaultZ0), rf, e.id});
        break;
      }
    }
  }
  auto fix = [&](int& a) {
    if (a <= -2) a = n_nodes_ + (-2 - a);
  };
  for (auto& l : inds_) fix(l.aux);
  for (auto& l : lines_) {
    fix(l.aux_in);
    fix(l.aux_out);
  }
  for (auto& s : supplies_) fix(s.aux);
  for (auto& s : feeds_) fix(s.aux);
  for (auto& s : blocks_) fix(s.aux);
}

int Circuit::node_index(const std::string& name) const {
  if (name == kGround) return -1;
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument(fmt::format("unknown node '{}'", name));
  return it->second;
}

void Circuit::stamp_linear(double f_hz, Stamp<cplx>& st, const Terminations& term) const {
  const bool dc = f_hz == 0.0;
  const double w = kTwoPi * f_hz;
  const cplx jw{0.0, w};
  auto admit = [&](int a, int b, cplx y) {
    st.add(a, a, y);
    st.add(b, b, y);
    st.add(a, b, -y);
    st.add(b, a, -y);
  };
  // Branch current unknown k flowing a -> b through the element.
  auto branch = [&](int a, int b, int k) {
    st.add(a, k, 1.0);
    st.add(b, k, -1.0);
  };
  auto short_row = [&](int a, int b, int k) {
    st.add(k, a, 1.0);
    st.add(k, b, -1.0);
  };

  for (const auto& r : res_) admit(r.a, r.b, r.g);
  if (!dc)
    for (const auto& c : caps_) admit(c.a, c.b, jw * c.c);
  for (const auto& l : inds_) {
    branch(l.a, l.b, l.aux);
    short_row(l.a, l.b, l.aux);
    if (!dc) st.add(l.aux, l.aux, -jw * l.l);
  }
  for (const auto& l : lines_) {
    const Eigen::Matrix2cd t = elements::tl_abcd(l.spec, f_hz);
    st.add(l.a, l.aux_in, 1.0);
    st.add(l.b, l.aux_out, -1.0);
    st.add(l.aux_in, l.a, 1.0);
    st.add(l.aux_in, l.b, -t(0, 0));
    st.add(l.aux_in, l.aux_out, -t(0, 1) - (dc ? kLineDcResistance : 0.0));
    st.add(l.aux_out, l.aux_in, 1.0);
    st.add(l.aux_out, l.b, -t(1, 0));
    st.add(l.aux_out, l.aux_out, -t(1, 1));
  }
  for (const auto& s : supplies_) {
    branch(s.a, s.b, s.aux);
    short_row(s.a, s.b, s.aux);
  }
  for (const auto& s : feeds_) {
    branch(s.a, s.b, s.aux);
    if (dc)
      short_row(s.a, s.b, s.aux);
    else
      st.add(s.aux, s.aux, 1.0);
  }
  for (const auto& s : blocks_) {
    branch(s.a, s.b, s.aux);
    if (dc)
      st.add(s.aux, s.aux, 1.0);
    else
      short_row(s.a, s.b, s.aux);
  }
  for (std::size_t i = 0; i < ports_.size(); ++i) {
    cplx z = ports_[i].z;
    if (!dc)
      if (auto it = term.find(i); it != term.end()) z = it->second;
    admit(ports_[i].a, ports_[i].b, 1.0 / z);
  }
}

void Circuit::stamp_dc(Stamp<double>& st) const {
  Stamp<cplx> c;
  stamp_linear(0.0, c);
  st.entries.reserve(c.entries.size() + static_cast<std::size_t>(n_nodes_));
  for (const auto& t : c.entries) st.entries.emplace_back(t.row(), t.col(), t.value().real());
  for (int i = 0; i < n_nodes_; ++i) st.entries.emplace_back(i, i, kGmin);
}

Eigen::VectorXd Circuit::dc_sources() const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(size());
  for (const auto& s : supplies_) b[s.aux] = s.v;
  return b;
}

void Circuit::eval_nonlinear(const Eigen::VectorXd& x, Eigen::VectorXd& f, Stamp<double>* jac) const {
  auto addf = [&](int i, double v) {
    if (i >= 0) f[i] += v;
  };
  for (const auto& q : fets_) {
    const double vs = at(x, q.s);
    const auto d = device::ids_derivs(q.p, at(x, q.g) - vs, at(x, q.d) - vs);
    addf(q.d, d.ids);
    addf(q.s, -d.ids);
    if (jac) {
      jac->add(q.d, q.g, d.g_m);
      jac->add(q.d, q.d, d.g_ds);
      jac->add(q.d, q.s, -d.g_m - d.g_ds);
      jac->add(q.s, q.g, -d.g_m);
      jac->add(q.s, q.d, -d.g_ds);
      jac->add(q.s, q.s, d.g_m + d.g_ds);
    }
  }
  for (const auto& c : cubics_) {
    const double v = at(x, c.a) - at(x, c.b);
    const double i = c.g1 * v + c.g3 * v * v * v;
    addf(c.a, i);
    addf(c.b, -i);
    if (jac) {
      const double g = c.g1 + 3.0 * c.g3 * v * v;
      jac->add(c.a, c.a, g);
      jac->add(c.b, c.b, g);
      jac->add(c.a, c.b, -g);
      jac->add(c.b, c.a, -g);
    }
  }
}

void Circuit::stamp_small_signal(const Eigen::VectorXd& x, Stamp<cplx>& st) const {
  Stamp<double> j;
  Eigen::VectorXd scratch = Eigen::VectorXd::Zero(size());
  eval_nonlinear(x, scratch, &j);
  for (const auto& t : j.entries) st.entries.emplace_back(t.row(), t.col(), cplx(t.value(), 0.0));
}

double OperatingPoint::voltage(const std::string& node) const { return at(x, circuit->node_index(node)); }

double OperatingPoint::supply_current(std::size_t supply) const { return -x[circuit->supplies().at(supply).aux]; }

double OperatingPoint::supply_power() const {
  double p = 0.0;
  for (std::size_t i = 0; i < circuit->supplies().size(); ++i) p += circuit->supplies()[i].v * supply_current(i);
  return p;
}

namespace {

template <typename T>
Eigen::SparseMatrix<T> assemble(int n, const std::vector<Eigen::Triplet<T>>& e) {
  Eigen::SparseMatrix<T> m(n, n);
  m.setFromTriplets(e.begin(), e.end());
  m.makeCompressed();
  return m;
}

// Newton on G x + i(x) = lambda * b from x. Returns iterations or -1.
int dc_newton(const Circuit& c, const Eigen::SparseMatrix<double>& g, const Eigen::VectorXd& b, double lambda,
              Eigen::VectorXd& x, const DcOptions& opt) {
  const int n = c.size();
  for (int it = 0; it <= opt.max_iter; ++it) {
    Eigen::VectorXd f = g * x - lambda * b;
    Stamp<double> jn;
    c.eval_nonlinear(x, f, &jn);
    if (!f.allFinite()) return -1;
    if (f.norm() <= opt.tol) return it;
    if (it == opt.max_iter) break;
    Eigen::SparseMatrix<double> j = assemble(n, jn.entries);
    j += g;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(j);
    if (lu.info() != Eigen::Success) return -1;
    Eigen::VectorXd dx = lu.solve(-f);
    if (!dx.allFinite()) return -1;
    const double vmax = c.node_count() > 0 ? dx.head(c.node_count()).cwiseAbs().maxCoeff() : 0.0;
    if (c.has_nonlinear() && vmax > opt.max_step) dx *= opt.max_step / vmax;
    x += dx;
  }
  return -1;
}

}  // namespace

OperatingPoint dc_operating_point(std::shared_ptr<const Circuit> cp, const DcOptions& opt) {
  const Circuit& c = *cp;
  Stamp<double> st;
  c.stamp_dc(st);
  const auto g = assemble(c.size(), st.entries);
  const Eigen::VectorXd b = c.dc_sources();

  OperatingPoint op{cp, Eigen::VectorXd::Zero(c.size()), 0};
  int total = 0;
  Eigen::VectorXd x = op.x;
  if (int it = dc_newton(c, g, b, 1.0, x, opt); it >= 0) {
    op.x = x;
    op.iterations = it;
    return op;
  }
  // Supply ramp with step halving.
  x.setZero();
  double lambda = 0.0, step = 1.0 / std::max(1, opt.ramp_steps);
  while (lambda < 1.0) {
    const double next = std::min(1.0, lambda + step);
    Eigen::VectorXd trial = x;
    const int it = dc_newton(c, g, b, next, trial, opt);
    if (it < 0) {
      step *= 0.5;
      if (step < 1e-6) throw AnalysisError(fmt::format("DC operating point: no convergence at supply ramp {:.6f}", next));
      continue;
    }
    total += it;
    x = trial;
    lambda = next;
    step = std::min(step * 2.0, 1.0 / std::max(1, opt.ramp_steps));
  }
  op.x = x;
  op.iterations = total;
  return op;
}

OperatingPoint dc_operating_point(const Netlist& n, const DcOptions& opt) {
  return dc_operating_point(std::make_shared<const Circuit>(n), opt);
}

namespace {

Eigen::SparseLU<Eigen::SparseMatrix<cplx>>& factor_ac(Eigen::SparseLU<Eigen::SparseMatrix<cplx>>& lu,
                                                      const OperatingPoint& op, double f_hz, const Terminations& term) {
  const Circuit& c = *op.circuit;
  Stamp<cplx> st;
  c.stamp_linear(f_hz, st, term);
  c.stamp_small_signal(op.x, st);
  const auto m = assemble(c.size(), st.entries);
  lu.compute(m);
  if (lu.info() != Eigen::Success)
    throw SingularMatrixError(fmt::format("small-signal matrix singular at {:.9g} Hz", f_hz), f_hz);
  return lu;
}

}  // namespace

Eigen::VectorXcd ac_solve(const OperatingPoint& op, double f_hz, const Eigen::VectorXcd& injection,
                          const Terminations& term) {
  if (!(f_hz > 0.0)) throw InvalidArgument("ac_solve: frequency must be > 0");
  if (injection.size() != op.circuit->size()) throw InvalidArgument("ac_solve: injection size mismatch");
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  factor_ac(lu, op, f_hz, term);
  Eigen::VectorXcd x = lu.solve(injection);
  if (!x.allFinite()) throw SingularMatrixError(fmt::format("small-signal solve failed at {:.9g} Hz", f_hz), f_hz);
  return x;
}

cplx node_impedance(const OperatingPoint& op, const std::string& node, double f_hz) {
  const int i = op.circuit->node_index(node);
  if (i < 0) throw InvalidArgument("node_impedance: ground has no impedance");
  Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(op.circuit->size());
  inj[i] = 1.0;
  return ac_solve(op, f_hz, inj)[i];
}

rf::NPortNetwork small_signal_sparams(const OperatingPoint& op, const rf::FrequencyGrid& grid, unsigned threads) {
  const Circuit& c = *op.circuit;
  const auto& ports = c.ports();
  if (ports.empty()) throw InvalidArgument("sparams: netlist has no ports");
  const double z0 = ports.front().z;
  for (const auto& p : ports)
    if (std::abs(p.z - z0) > 1e-12 * z0)
      throw InvalidArgument(fmt::format("sparams: port '{}' has z = {} but port 1 has {}", p.id, p.z, z0));
  const auto np = static_cast<int>(ports.size());
  std::vector<rf::CMatrix> data(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t fi) {
    const double f = grid[fi];
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    factor_ac(lu, op, f, {});
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(c.size(), np);
    for (int j = 0; j < np; ++j) {
      const auto& p = ports[static_cast<std::size_t>(j)];
      if (p.a >= 0) rhs(p.a, j) += 2.0 / z0;
      if (p.b >= 0) rhs(p.b, j) -= 2.0 / z0;
    }
    const Eigen::MatrixXcd x = lu.solve(rhs);
    if (!x.allFinite()) throw SingularMatrixError(fmt::format("small-signal solve failed at {:.9g} Hz", f), f);
    rf::CMatrix s(np, np);
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) {
        const auto& p = ports[static_cast<std::size_t>(i)];
        const cplx v = (p.a >= 0 ? x(p.a, j) : 0.0) - (p.b >= 0 ? x(p.b, j) : 0.0);
        s(i, j) = v - (i == j ? 1.0 : 0.0);
      }
    data[fi] = std::move(s);
  });
  return rf::NPortNetwork(grid, np, rf::Representation::S, std::move(data), z0);
}

}  // namespace mmpa::circuit
