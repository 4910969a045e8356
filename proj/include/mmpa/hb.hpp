#pragma once

// Single-tone harmonic balance on a compiled circuit.
//
// Unknowns are the MNA unknowns of the circuit (node voltages, auxiliary
// branch currents), each expanded into DC plus K harmonics and stored as real
// numbers [X0, Re X1, Im X1, ..., Re XK, Im XK]. Phasor convention:
// x(t) = X0 + sum_k Re(Xk e^{jk w0 t}).

#include <memory>
#include <string>
#include <vector>

#include "mmpa/circuit.hpp"

namespace mmpa::hb {

using rf::cplx;

struct HbConfig {
  double f0 = 0.0;
  int n_harmonics = 7;
  double tol = 1e-9;  // A, residual 2-norm
  int max_iter = 50;
  int source_steps = 10;
  int oversample = 64;  // time samples per period, >= 4K+1

  void validate() const;
};

class HarmonicSolution {
 public:
  std::shared_ptr<const circuit::Circuit> circuit;
  HbConfig config;
  circuit::Terminations terminations;  // applied at the fundamental only
  double p_avail_dbm = 0.0;
  double source_amplitude = 0.0;       // V peak of the RF port source
  Eigen::VectorXd state;
  bool converged = false;
  int iterations = 0;                  // Newton iterations of the final drive step
  int total_iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;  // final drive step

  int harmonics() const noexcept { return config.n_harmonics; }
  cplx phasor(int unknown, int k) const;
  std::vector<cplx> voltage(const std::string& node) const;
  std::vector<cplx> port_voltage(std::size_t port) const;
  // Current flowing from the network into the port termination.
  std::vector<cplx> port_current(std::size_t port) const;
  cplx port_termination(std::size_t port, int k) const;
  // DC power delivered by the supplies.
  double supply_power() const;
};

// Reusable solver for one circuit/config: the linear part is assembled once.
class HbEngine {
 public:
  HbEngine(std::shared_ptr<const circuit::Circuit> c, HbConfig cfg, circuit::Terminations term = {});

  // Solves at the given available source power. A previous solution on the
  // same engine is used as the starting point when given; otherwise the DC
  // operating point. Source stepping ramps the drive when the direct Newton
  // attempt fails.
  HarmonicSolution solve(double p_avail_dbm, const HarmonicSolution* warm = nullptr) const;

  // Residual and Jacobian at a state, for the given source scale (exposed
  // for derivative checks).
  Eigen::VectorXd residual(const Eigen::VectorXd& x, double source_scale) const;
  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x) const;
  int unknowns() const noexcept { return n_ * h_; }
  double source_amplitude(double p_avail_dbm) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  int n_ = 0;
  int h_ = 0;
};

HarmonicSolution hb_solve(const circuit::Netlist& netlist, const HbConfig& config, double p_avail_dbm,
                          const circuit::Terminations& term = {});

// 0.5 Re(V conj(I)) into the port termination at harmonic h (h = 0: V0 I0).
// Throws AnalysisError for an unconverged solution.
double hb_power(const HarmonicSolution& sol, std::size_t port, int harmonic);

struct PowerBalance {
  double supplies = 0.0;      // DC power from VDC sources
  double rf_source = 0.0;     // power from the RF port's ideal source
  double resistors = 0.0;
  double ports = 0.0;         // port terminations (including the source port's own resistance)
  double devices = 0.0;       // FET channels and cubic conductances
  double lines = 0.0;         // lossy transmission lines

  double delivered() const { return supplies + rf_source; }
  double absorbed() const { return resistors + ports + devices + lines; }
  double relative_error() const;
};

PowerBalance power_balance(const HarmonicSolution& sol);

}  // namespace mmpa::hb
