#pragma once

// Passive element models: ideal and microstrip transmission lines, shunt
// stubs, lumped R/L/C, quarter-wave transformers and the 2-way Wilkinson.

#include <optional>

#include "mmpa/rfcore.hpp"

namespace mmpa::elements {

using rf::cplx;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kEta0 = 376.730313668;

struct SubstrateSpec {
  double eps_r = 12.9;
  double height = 100e-6;            // m
  double tan_delta = 0.001;
  double conductor_thickness = 0.0;  // m, carried but not used by the zero-thickness formulas

  void validate() const;
};

// Representative GaAs: eps_r 12.9, 100 um, tan_delta 1e-3.
inline SubstrateSpec default_substrate() { return {}; }

struct TLineSpec {
  double z_c = 50.0;
  double electrical_length = 90.0;  // degrees at f_ref
  double f_ref = 1e9;
  // Attenuation in dB per mm of physical length. The physical length is
  // derived from electrical_length, f_ref and eps_eff.
  std::optional<double> loss_db_per_mm;
  double eps_eff = 1.0;

  void validate() const;
  double theta(double f_hz) const;  // radians at f_hz
};

Eigen::Matrix2cd tl_abcd(const TLineSpec& spec, double f_hz);
rf::NPortNetwork tl_twoport(const TLineSpec& spec, const rf::FrequencyGrid& grid, double z_ref = rf::kDefaultZ0);

// Input impedance of a line terminated in z_load at f_hz.
cplx tl_input_impedance(const TLineSpec& spec, cplx z_load, double f_hz);

TLineSpec quarter_wave_transformer(double r_source, double r_load, double f0);

struct MicrostripGeom {
  double width = 0.0;   // m
  double length = 0.0;  // m
};

struct MicrostripProps {
  double z0 = 0.0;
  double eps_eff = 0.0;
  double loss_db_per_mm = 0.0;  // dielectric loss only
};

inline constexpr double kMinWOverH = 0.1;
inline constexpr double kMaxWOverH = 10.0;

MicrostripProps microstrip_analyze(const MicrostripGeom& geom, const SubstrateSpec& sub, double f_hz);

struct MicrostripSynthesis {
  MicrostripGeom geom;  // length left at zero
  double w_over_h = 0.0;
  double z0 = 0.0;      // achieved
  double eps_eff = 0.0;
};

// Bisection on w/h. Throws InvalidArgument listing the achievable interval
// when the target lies outside it.
MicrostripSynthesis microstrip_synthesize(double z0_target, const SubstrateSpec& sub, double f_hz);

double electrical_to_physical(double electrical_length_deg, double f0, double eps_eff);

enum class StubKind { Open, Short };

const char* to_string(StubKind k) noexcept;

// Input admittance of a stub: open +j tan(theta)/z_c, short -j cot(theta)/z_c.
// Throws SingularMatrixError at resonance.
cplx stub_admittance(StubKind kind, double z_c, double electrical_length, double f_ref, double f_hz);

rf::NPortNetwork stub_twoport(StubKind kind, double z_c, double electrical_length, double f_ref,
                              const rf::FrequencyGrid& grid, double z_ref = rf::kDefaultZ0);

enum class LumpedKind { R, L, C };
enum class Placement { Series, Shunt };

cplx lumped_impedance(LumpedKind kind, double value, double f_hz);
rf::NPortNetwork lumped_twoport(LumpedKind kind, Placement placement, double value, const rf::FrequencyGrid& grid,
                                double z_ref = rf::kDefaultZ0);

struct WilkinsonSpec {
  double z0 = 50.0;
  double f0 = 90e9;
  double branch_z = 0.0;
  double branch_length = 90.0;  // degrees at f0
  double r_iso = 0.0;

  void validate() const;
};

WilkinsonSpec wilkinson_synthesize(double z0, double f0);

// 3-port S (port 1 common, ports 2/3 outputs) referenced to spec.z0.
// branch_loss_db_per_mm and eps_eff feed the branch line model.
rf::NPortNetwork wilkinson_analyze(const WilkinsonSpec& spec, const rf::FrequencyGrid& grid,
                                   std::optional<double> branch_loss_db_per_mm = std::nullopt,
                                   double eps_eff = 1.0);

struct MicrostripWilkinson {
  WilkinsonSpec spec;          // branch_z replaced by the realized line impedance
  MicrostripSynthesis branch;  // branch width and eps_eff
  double branch_length_m = 0.0;
  double loss_db_per_mm = 0.0;
};

// Maps the ideal divider onto microstrip branches of the given substrate.
MicrostripWilkinson wilkinson_microstrip(const WilkinsonSpec& spec, const SubstrateSpec& sub);
rf::NPortNetwork wilkinson_analyze(const MicrostripWilkinson& mw, const rf::FrequencyGrid& grid);

}  // namespace mmpa::elements
