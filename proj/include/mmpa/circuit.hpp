#pragma once

// Modified nodal analysis of a Netlist: compilation to indexed unknowns,
// frequency-domain stamping, DC operating point and small-signal analysis.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mmpa/device.hpp"
#include "mmpa/elements.hpp"
#include "mmpa/netlist.hpp"
#include "mmpa/rfcore.hpp"

namespace mmpa::circuit {

using rf::cplx;

template <typename T>
struct Stamp {
  std::vector<Eigen::Triplet<T>> entries;
  // Ground (index -1) rows and columns are dropped.
  void add(int r, int c, T v) {
    if (r >= 0 && c >= 0) entries.emplace_back(r, c, v);
  }
};

// Per-port termination impedances that replace the netlist value at a
// frequency-domain stamp (load-pull).
using Terminations = std::map<std::size_t, cplx>;

class Circuit {
 public:
  struct Conductance { int a, b; double g; };
  struct Capacitor { int a, b; double c; };
  struct Inductor { int a, b, aux; double l; };
  struct Line { int a, b, aux_in, aux_out; elements::TLineSpec spec; };
  struct Supply { int a, b, aux; double v; std::string id; };
  struct Switch { int a, b, aux; };  // FEED and BLOCK
  struct Port { int a, b; double z; bool rf; std::string id; };
  struct Fet { int g, d, s; device::PhemtParams p; std::string id; };  // internal nodes
  struct Cubic { int a, b; double g1, g3; std::string id; };

  explicit Circuit(Netlist netlist);

  const Netlist& netlist() const noexcept { return netlist_; }
  int node_count() const noexcept { return n_nodes_; }
  int size() const noexcept { return n_nodes_ + n_aux_; }
  // -1 for ground. Throws InvalidArgument for unknown names.
  int node_index(const std::string& name) const;
  const std::vector<std::string>& node_names() const noexcept { return names_; }

  const std::vector<Conductance>& conductances() const noexcept { return res_; }
  const std::vector<Capacitor>& capacitors() const noexcept { return caps_; }
  const std::vector<Inductor>& inductors() const noexcept { return inds_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  const std::vector<Supply>& supplies() const noexcept { return supplies_; }
  const std::vector<Switch>& feeds() const noexcept { return feeds_; }
  const std::vector<Switch>& blocks() const noexcept { return blocks_; }
  const std::vector<Port>& ports() const noexcept { return ports_; }
  const std::vector<Fet>& fets() const noexcept { return fets_; }
  const std::vector<Cubic>& cubics() const noexcept { return cubics_; }
  bool has_nonlinear() const noexcept { return !fets_.empty() || !cubics_.empty(); }
  int rf_port() const noexcept { return rf_port_; }  // index into ports(), -1 when absent

  // Linear part at f_hz; f_hz == 0 selects the DC topology (C open, L and
  // FEED short, BLOCK open). Port terminations included, sources excluded.
  void stamp_linear(double f_hz, Stamp<cplx>& st, const Terminations& term = {}) const;
  void stamp_dc(Stamp<double>& st) const;

  // DC source vector (supply voltages on their auxiliary rows).
  Eigen::VectorXd dc_sources() const;

  // Nonlinear branch currents and their derivatives at a real state x
  // (node voltages first). Adds to f (KCL rows) and optional jacobian.
  void eval_nonlinear(const Eigen::VectorXd& x, Eigen::VectorXd& f, Stamp<double>* jac) const;
  // Small-signal stamp of the nonlinear elements linearized at x.
  void stamp_small_signal(const Eigen::VectorXd& x, Stamp<cplx>& st) const;

  double port_z(std::size_t port) const { return ports_.at(port).z; }

 private:
  int node(const std::string& name);
  int aux();

  Netlist netlist_;
  std::map<std::string, int> index_;
  std::vector<std::string> names_;
  int n_nodes_ = 0;
  int n_aux_ = 0;
  std::vector<std::pair<int, int>> pending_aux_;

  std::vector<Conductance> res_;
  std::vector<Capacitor> caps_;
  std::vector<Inductor> inds_;
  std::vector<Line> lines_;
  std::vector<Supply> supplies_;
  std::vector<Switch> feeds_;
  std::vector<Switch> blocks_;
  std::vector<Port> ports_;
  std::vector<Fet> fets_;
  std::vector<Cubic> cubics_;
  int rf_port_ = -1;
};

// Conductance from every node to ground in DC solves, for nodes that are
// only capacitively connected.
inline constexpr double kGmin = 1e-12;
// Series resistance of every line in DC solves, so that loops of lines
// (parallel through paths) stay solvable.
inline constexpr double kLineDcResistance = 1e-6;

struct OperatingPoint {
  std::shared_ptr<const Circuit> circuit;
  Eigen::VectorXd x;  // node voltages then auxiliary currents
  int iterations = 0;

  double voltage(const std::string& node) const;
  // Current delivered by each supply into its positive node, and total power.
  double supply_current(std::size_t supply) const;
  double supply_power() const;
};

struct DcOptions {
  double tol = 1e-9;      // A, residual 2-norm
  int max_iter = 100;
  int ramp_steps = 10;    // supply ramp stages
  double max_step = 0.5;  // V, Newton voltage step limit
};

// Newton DC solve with supply ramping. Throws AnalysisError on failure.
OperatingPoint dc_operating_point(std::shared_ptr<const Circuit> c, const DcOptions& opt = {});
OperatingPoint dc_operating_point(const Netlist& n, const DcOptions& opt = {});

// Small-signal node solution at f_hz for a given current injection
// (complex, node rows only; aux rows zero).
Eigen::VectorXcd ac_solve(const OperatingPoint& op, double f_hz, const Eigen::VectorXcd& injection,
                          const Terminations& term = {});

// Impedance seen between a node and ground with every port terminated.
cplx node_impedance(const OperatingPoint& op, const std::string& node, double f_hz);

// Small-signal S parameters of all ports (in netlist order) about the DC
// operating point. Every port must share one reference impedance.
rf::NPortNetwork small_signal_sparams(const OperatingPoint& op, const rf::FrequencyGrid& grid, unsigned threads = 1);

}  // namespace mmpa::circuit
