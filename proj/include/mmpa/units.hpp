#pragma once

namespace mmpa::rf {

enum class Unit {
  Decibel,     // 20*log10 of a magnitude
  Magnitude,   // linear voltage-like ratio
  Dbm,         // 10*log10(P / 1 mW)
  Watt,
};

// Generic conversion between compatible units. dB <-> magnitude and
// dBm <-> W are the only valid pairs (plus identity).
double units(double x, Unit from, Unit to);

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);
double mag_to_db(double mag);
double db_to_mag(double db);
double power_ratio_to_db(double ratio);

}  // namespace mmpa::rf
