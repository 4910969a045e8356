#pragma once

// Power-amplifier assembly and metrics: CS and cascode stages with their
// bias and matching, the 2-way divider/combiner chain, small-signal gain and
// bandwidth, power sweeps with PAE and compression, load-pull and
// Monte-Carlo yield.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmpa/circuit.hpp"
#include "mmpa/device.hpp"
#include "mmpa/hb.hpp"
#include "mmpa/matchsynth.hpp"

namespace mmpa::pa {

using circuit::Netlist;
using rf::cplx;

enum class StageTopology { CommonSource, Cascode };

const char* to_string(StageTopology t) noexcept;

// Default bias capacitor of the cascode cell at 90 GHz; designs at other
// frequencies scale it by 90 GHz / f0 to keep the same reactance.
inline constexpr double kBiasCap90GHz = 0.5e-12;

struct StageSpec {
  StageTopology topology = StageTopology::CommonSource;
  device::PhemtParams device = device::default_phemt();
  device::AmpClass amp_class = device::AmpClass::AB;
  device::BiasPoint bias;              // of the common-source device
  double f0 = 90e9;
  double v_dd = 6.0;                   // drain supply
  double v_cg = 0.0;                   // cascode gate supply
  std::optional<double> bias_cap;      // F, cascode only
  double r_stab_gate = 0.0;            // RF-only shunt resistors, 0 = absent
  double r_stab_drain = 0.0;
  std::optional<match::MatchingNetwork> input_match;   // termination = device input
  std::optional<match::MatchingNetwork> output_match;  // termination = device output
  double z0 = rf::kDefaultZ0;

  void validate() const;
};

// Two-port fragments: port P1 (input, RF source) and P2 (output), both z0.
Netlist build_cs_stage(const StageSpec& spec);
Netlist build_cascode_stage(const StageSpec& spec);
Netlist build_stage(const StageSpec& spec);
// Stage without its matching networks (ports directly at gate and drain
// through DC blocks).
Netlist build_stage_core(const StageSpec& spec);

struct StageDesignOptions {
  double k_min = 1.05;         // required Rollett K at f0 after stabilization
  double max_gain_db = 10.0;   // MAG cap for the stabilization search
  double q_max = 1.2;          // matching loci bound
  double v_ds = 6.0;           // per-device drain-source voltage
  bool power_match = true;     // output matched to the load-pull optimum
  int loadpull_grid = 11;
};

// Bias selection, stabilization-resistor search and matching of one stage
// at f0. With power_match the output network presents the load-pull p_out
// optimum (at a drive that saturates the stage) and the input is
// conjugately matched to the device loaded that way; otherwise both sides
// use the simultaneous conjugate match.
StageSpec design_stage(StageTopology topology, device::AmpClass cls, double f0, const device::PhemtParams& dev,
                       const StageDesignOptions& opt = {});

// Three-port ideal Wilkinson fragment: P1 common, P2/P3 arms.
Netlist build_wilkinson(const elements::WilkinsonSpec& spec);

enum class Branches {
  Both,     // two power stages, divider and combiner
  Single,   // divider, one power stage to the output, other arm terminated in z0
  Through,  // divider and combiner with the power stages replaced by throughs
};

struct PaDesign {
  StageSpec driver1, driver2, power;
  elements::WilkinsonSpec divider, combiner;
  double f0 = 90e9;
};

// Default three-stage design: two class-AB CS drivers, class-A cascode
// power stages.
PaDesign design_pa(double f0, const device::PhemtParams& dev = device::default_phemt(),
                   const StageDesignOptions& opt = {});

// Flattens the chain into one netlist with ports P1 (input, RF) and P2.
Netlist build_pa(const PaDesign& d, Branches branches = Branches::Both);
Netlist build_pa(const StageSpec& driver1, const StageSpec& driver2, const StageSpec& power,
                 const elements::WilkinsonSpec& divider, const elements::WilkinsonSpec& combiner,
                 Branches branches = Branches::Both);

// Copies every non-port element of a fragment into target with ids, models
// and internal nodes prefixed by "<prefix>."; fragment port i's positive
// node is wired to port_nodes[i].
void instantiate(Netlist& target, const Netlist& fragment, const std::string& prefix,
                 const std::vector<std::string>& port_nodes);

// --- small-signal metrics -------------------------------------------------

struct Bandwidth {
  double f_peak = 0.0;
  double peak_db = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  double bw = 0.0;
  bool censored_lo = false;  // region reaches the first grid point
  bool censored_hi = false;
};

// Contiguous region around the peak where s21_db >= peak - 3, with edges by
// linear interpolation in dB.
Bandwidth bandwidth_3db(const std::vector<double>& freq, const std::vector<double>& s21_db);

struct SParamReport {
  rf::NPortNetwork s;
  double f0 = 0.0;
  double gain_db = 0.0;  // S21 at f0 (interpolated in dB if f0 is off-grid)
  double s11_db = 0.0;
  double s22_db = 0.0;
  Bandwidth bw;
};

SParamReport sparams(const Netlist& netlist, const rf::FrequencyGrid& grid, double f0, unsigned threads = 1);

// --- large signal ---------------------------------------------------------

// 100 (p_out - p_in) / p_dc. Throws InvalidArgument for p_dc <= 0 or
// negative powers.
double pae(double p_out_w, double p_in_w, double p_dc_w);
double drain_efficiency(double p_out_w, double p_dc_w);

struct SweepRow {
  double p_in_dbm = 0.0;   // available source power
  double p_out_dbm = 0.0;  // fundamental power into the output port
  double gain_db = 0.0;
  double p_dc_w = 0.0;
  double pae = 0.0;        // %
  double drain_eff = 0.0;  // %
};

struct PowerSweepResult {
  double f0 = 0.0;
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;  // set when the sweep was truncated
  bool truncated = false;
};

std::vector<double> power_range(double lo_dbm, double hi_dbm, double step_db);

// HB at each drive in order, each solve warm-started from the previous one.
PowerSweepResult power_sweep(const Netlist& netlist, double f0, const std::vector<double>& p_in_dbm,
                             const hb::HbConfig& base = {});

struct CompressionMetrics {
  double small_signal_gain_db = 0.0;
  std::optional<double> p1db_in_dbm;
  std::optional<double> p1db_out_dbm;
  double p_sat_dbm = 0.0;
  double pae_peak = 0.0;
  double pae_peak_p_in_dbm = 0.0;
};

CompressionMetrics compression_metrics(const PowerSweepResult& sweep);

// Index of the output (non-RF) port used for p_out.
std::size_t output_port(const Netlist& netlist);

// --- load pull ------------------------------------------------------------

enum class Objective { Pout, Pae };

const char* to_string(Objective o) noexcept;

std::vector<cplx> gamma_grid(int n, double extent = 0.9, double max_mag = 0.95);

struct LoadPullCell {
  cplx gamma{};
  cplx z{};
  bool converged = false;
  double p_out_dbm = 0.0;
  double pae = 0.0;
};

struct LoadPullResult {
  double f0 = 0.0;
  double p_in_dbm = 0.0;
  double z_ref = rf::kDefaultZ0;
  Objective objective = Objective::Pout;
  std::vector<LoadPullCell> cells;
  std::size_t optimum = 0;
  cplx optimum_gamma{};
  cplx optimum_z{};
};

// Argmax over the converged entries of values; ties go to the smaller |gamma|,
// then the lower index. Throws AnalysisError when nothing converged.
std::size_t select_optimum(const std::vector<cplx>& gammas, const std::vector<double>& values,
                           const std::vector<bool>& valid);

// Replaces the output port termination at the fundamental by
// z_ref (1 + gamma) / (1 - gamma) at each grid point.
LoadPullResult load_pull(const Netlist& netlist, const std::vector<cplx>& gammas, double f0, double p_in_dbm,
                         Objective objective, const hb::HbConfig& base = {}, unsigned threads = 1);

// --- Monte Carlo ----------------------------------------------------------

struct McThresholds {
  double s11_max_db = -10.0;
  double s21_min_db = 15.0;
  double s22_max_db = -10.0;
};

struct McMetric {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  double std_dev = 0.0;  // sample standard deviation
  int success_count = 0;
  int n_trials = 0;
  double success_rate = 0.0;  // %
};

struct McTrial {
  bool ok = false;
  double s11_db = 0.0, s21_db = 0.0, s22_db = 0.0;
};

struct MonteCarloReport {
  std::uint64_t seed = 0;
  double sigma = 0.0;
  double f0 = 0.0;
  McThresholds thresholds;
  std::vector<McMetric> metrics;  // S11, S21, S22
  std::vector<McTrial> trials;
};

// Per-trial generator: mt19937_64 seeded from splitmix64 of (seed, trial).
std::uint64_t trial_seed(std::uint64_t seed, int trial);

// Applies multiplicative N(1, sigma) perturbations to device (i_pk, v_pk,
// p1, capacitances) and line (z, deg) parameters.
Netlist perturb(const Netlist& netlist, double sigma, std::uint64_t seed);

MonteCarloReport monte_carlo(const Netlist& netlist, double f0, double sigma, int n_trials, std::uint64_t seed,
                             const McThresholds& thr = {}, unsigned threads = 1);

// Rebuilds the metrics from stored trials (success counts and statistics).
std::vector<McMetric> summarize(const std::vector<McTrial>& trials, const McThresholds& thr);

}  // namespace mmpa::pa
