#pragma once

// Fixed-step trapezoidal time-domain solver and single-tone spectrum
// extraction. Independent of the harmonic-balance code path; used to check it.

#include <limits>
#include <string>
#include <vector>

#include "mmpa/circuit.hpp"

namespace mmpa::hb {

struct Waveform {
  std::vector<double> t;
  std::vector<double> x;
};

struct TransientOptions {
  double t_stop = 0.0;
  double dt = 0.0;
  // RF port source: cos(2 pi f0 t) with the amplitude set by the available
  // power. f0 == 0 uses the netlist .f0 directive; no drive when p is -inf.
  double f0 = 0.0;
  double p_avail_dbm = -std::numeric_limits<double>::infinity();
  int n_harmonics = 7;      // harmonics the step must resolve (20 points each)
  double lte_reltol = 5e-3; // relative to the running peak of each node
  double lte_abstol = 1e-6; // V
  // false: all unknowns start at zero with sources switched on at t = 0+
  // (step response); the first step is backward Euler.
  bool start_from_dc = true;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
};

// Supports R, L, C, VDC, PORT, FET (with its parasitics) and NLG. Lines,
// stubs, FEED and BLOCK are frequency-domain idealizations and are refused.
class TransientResult {
 public:
  std::shared_ptr<const circuit::Circuit> circuit;
  std::vector<double> time;
  Eigen::MatrixXd states;  // one row per time point, every MNA unknown
  int steps = 0;

  Waveform waveform(const std::string& node) const;
  // Branch waveform v(a) - v(b) of a port.
  Waveform port_waveform(std::size_t port) const;
};

TransientResult transient_solve(const circuit::Netlist& netlist, const TransientOptions& opt);

// Phasors 0..K of the last whole periods of a uniformly sampled waveform
// (phase referenced to t = 0). The samples after `settle` must cover at
// least 4 periods with an integer number of samples per period.
std::vector<rf::cplx> spectrum_of(const Waveform& w, double f0, int n_harmonics, double settle = 0.0);

}  // namespace mmpa::hb
