#pragma once

// Generic large-signal pHEMT: closed-form tanh DC-IV, width scaling, bias
// selection from an IV table and analytic small-signal linearization.

#include <vector>

#include <Eigen/Dense>

#include "mmpa/kernels.hpp"

namespace mmpa::device {

struct PhemtParams {
  double i_pk = 0.04;            // A, at psi = 0
  double v_pk = -0.132826794833; // V
  double p1 = 1.649224702669;    // 1/V
  double alpha = 1.5;            // 1/V
  double lambda_mod = 0.02;      // 1/V
  double c_gs = 100e-15;
  double c_gd = 10e-15;
  double c_ds = 20e-15;
  double r_g = 2.0;
  double r_d = 3.0;
  double r_s = 1.5;
  double unit_width = 100e-6;    // m, width the values above refer to
  int n_fingers = 2;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
  kernels::PhemtCoeffs coeffs() const { return {i_pk, v_pk, p1, alpha, lambda_mod}; }
};

// Calibrated default device: 2 x 50 um. With I_max taken over the default
// gate sweep, the class rules select -0.7 V (AB) and -0.2 V (A) at 6 V.
PhemtParams default_phemt();

double ids(const PhemtParams& p, double v_gs, double v_ds);

struct IdsDerivs {
  double ids;
  double g_m;
  double g_ds;
};
IdsDerivs ids_derivs(const PhemtParams& p, double v_gs, double v_ds);

// Rescales to a new total gate width: currents and capacitances scale with
// total_width / unit_width, resistances inversely.
PhemtParams scale(const PhemtParams& p, double total_width, int n_fingers);

struct IvTable {
  std::vector<double> v_gs;
  std::vector<double> v_ds;
  Eigen::MatrixXd ids;  // rows: v_gs, cols: v_ds
};

IvTable dc_iv_sweep(const PhemtParams& p, const std::vector<double>& v_gs_list, const std::vector<double>& v_ds_list);

// -1.5 V to +0.5 V in 10 mV steps.
std::vector<double> default_vgs_sweep();

enum class AmpClass { A, AB };

const char* to_string(AmpClass c) noexcept;
// Fraction of I_max defining the quiescent current of each class.
double class_fraction(AmpClass c) noexcept;

struct BiasPoint {
  double v_gs = 0.0;
  double v_ds = 0.0;
  double i_d = 0.0;
  double p_dc = 0.0;
};

// Picks v_gs on the table column at v_ds (must be one of the table's v_ds
// values) where the current is class_fraction * column max, refined by
// linear interpolation between the bracketing rows.
BiasPoint bias_select(const IvTable& table, AmpClass amp_class, double v_ds);

struct SmallSignal {
  double g_m = 0.0;
  double g_ds = 0.0;
  double c_gs = 0.0, c_gd = 0.0, c_ds = 0.0;
  double r_g = 0.0, r_d = 0.0, r_s = 0.0;
};

SmallSignal small_signal(const PhemtParams& p, const BiasPoint& bias);

}  // namespace mmpa::device
