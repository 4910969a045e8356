#include "mmpa/units.hpp"

#include <cmath>
#include <string>

#include "mmpa/errors.hpp"

namespace mmpa::rf {

namespace {

double checked_log10(double x, const char* what) {
  if (!(x > 0.0)) throw InvalidArgument(std::string(what) + ": logarithm of non-positive value " + std::to_string(x));
  return std::log10(x);
}

}  // namespace

double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * checked_log10(watt / 1e-3, "watt_to_dbm"); }

double mag_to_db(double mag) { return 20.0 * checked_log10(std::abs(mag), "mag_to_db"); }

double db_to_mag(double db) { return std::pow(10.0, db / 20.0); }

double power_ratio_to_db(double ratio) { return 10.0 * checked_log10(ratio, "power_ratio_to_db"); }

double units(double x, Unit from, Unit to) {
  if (from == to) return x;
  if (from == Unit::Decibel && to == Unit::Magnitude) return db_to_mag(x);
  if (from == Unit::Magnitude && to == Unit::Decibel) return mag_to_db(x);
  if (from == Unit::Dbm && to == Unit::Watt) return dbm_to_watt(x);
  if (from == Unit::Watt && to == Unit::Dbm) return watt_to_dbm(x);
  throw InvalidArgument("units: incompatible unit pair");
}

}  // namespace mmpa::rf
