#pragma once

// Frequency grids, multi-port network parameter sets and the algebra on them
// (representation changes, two-port cascading, reference renormalization and
// linear health checks).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mmpa::rf {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kDefaultZ0 = 50.0;
inline constexpr double kStructuralTol = 1e-8;
inline constexpr double kRoundTripTol = 1e-10;
// Conversions refuse matrices whose condition estimate exceeds this.
inline constexpr double kSingularCondition = 1e12;

class FrequencyGrid {
 public:
  // Points in Hz, strictly ascending, all > 0, non-empty.
  explicit FrequencyGrid(std::vector<double> points_hz);

  static FrequencyGrid single(double f_hz) { return FrequencyGrid({f_hz}); }

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }

  // Index of an exact (relative 1e-12) match, or size() when absent.
  std::size_t find(double f_hz) const noexcept;

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

 private:
  std::vector<double> points_;
};

// n evenly spaced points including both ends.
FrequencyGrid make_grid(double start_hz, double stop_hz, std::size_t n);

enum class Representation { S, Z, Y, ABCD };

const char* to_string(Representation r) noexcept;

class NPortNetwork {
 public:
  NPortNetwork(FrequencyGrid grid, int ports, Representation rep, std::vector<CMatrix> data,
               double z_ref = kDefaultZ0);

  const FrequencyGrid& grid() const noexcept { return grid_; }
  int ports() const noexcept { return ports_; }
  Representation representation() const noexcept { return rep_; }
  double z_ref() const noexcept { return z_ref_; }

  std::size_t size() const noexcept { return data_.size(); }
  const CMatrix& at(std::size_t fi) const { return data_.at(fi); }
  const std::vector<CMatrix>& data() const noexcept { return data_; }

  // 0-based (row, col) entry at frequency index fi.
  cplx operator()(std::size_t fi, int row, int col) const { return data_.at(fi)(row, col); }

 private:
  FrequencyGrid grid_;
  int ports_;
  Representation rep_;
  std::vector<CMatrix> data_;
  double z_ref_;
};

// Builds a 2-port from a per-frequency ABCD evaluator and returns it in S.
template <typename AbcdFn>
NPortNetwork two_port_from_abcd(const FrequencyGrid& grid, AbcdFn&& abcd_at, double z_ref = kDefaultZ0);

NPortNetwork convert(const NPortNetwork& net, Representation target);
NPortNetwork cascade(const NPortNetwork& a, const NPortNetwork& b);
NPortNetwork renormalize(const NPortNetwork& net, double new_z_ref);

struct LinearFlags {
  bool reciprocal = false;
  bool passive = false;
  bool lossless = false;
};

LinearFlags check_linear(const NPortNetwork& net, double tol = kStructuralTol);

struct StabilityReport {
  double k_factor = 0.0;     // worst (smallest) Rollett K over the grid
  double delta_mag = 0.0;    // worst (largest) |S11 S22 - S12 S21|
  bool unconditionally_stable = false;
  bool unilateral = false;   // |S12 S21| == 0 somewhere; K reported as +inf there
  double worst_frequency = 0.0;
};

StabilityReport stability(const NPortNetwork& net);

// Single-matrix building blocks shared with the element and circuit code.
Eigen::Matrix2cd abcd_to_s(const Eigen::Matrix2cd& abcd, double z_ref, double f_hz = 0.0);
Eigen::Matrix2cd s_to_abcd(const Eigen::Matrix2cd& s, double z_ref, double f_hz = 0.0);

// Reflection coefficient of impedance z against a real reference.
inline cplx gamma_of(cplx z, double z_ref) { return (z - z_ref) / (z + z_ref); }
inline cplx impedance_of(cplx gamma, double z_ref) { return z_ref * (1.0 + gamma) / (1.0 - gamma); }

template <typename AbcdFn>
NPortNetwork two_port_from_abcd(const FrequencyGrid& grid, AbcdFn&& abcd_at, double z_ref) {
  std::vector<CMatrix> data;
  data.reserve(grid.size());
  for (double f : grid.points()) data.emplace_back(abcd_to_s(abcd_at(f), z_ref, f));
  return NPortNetwork(grid, 2, Representation::S, std::move(data), z_ref);
}

}  // namespace mmpa::rf
