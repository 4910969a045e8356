#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/paflow.hpp"
#include "mmpa/units.hpp"

namespace mmpa::pa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double db20(cplx s) { return 20.0 * std::log10(std::max(std::abs(s), 1e-300)); }

}  // namespace

Bandwidth bandwidth_3db(const std::vector<double>& freq, const std::vector<double>& s21_db) {
  if (freq.empty() || freq.size() != s21_db.size())
    throw InvalidArgument("bandwidth_3db needs matching, non-empty frequency and gain vectors");
  const auto peak = static_cast<std::size_t>(std::max_element(s21_db.begin(), s21_db.end()) - s21_db.begin());
  Bandwidth b;
  b.f_peak = freq[peak];
  b.peak_db = s21_db[peak];
  const double thr = b.peak_db - 3.0;
  auto cross = [&](std::size_t i, std::size_t j) {  // s[i] <= thr < s[j]
    if (s21_db[i] == thr) return freq[i];
    return freq[i] + (freq[j] - freq[i]) * (thr - s21_db[i]) / (s21_db[j] - s21_db[i]);
  };
  std::size_t i = peak;
  while (i > 0 && s21_db[i - 1] > thr) --i;
  if (i == 0) {
    b.f_lo = freq.front();
    b.censored_lo = true;
  } else {
    b.f_lo = cross(i - 1, i);
  }
  std::size_t j = peak;
  while (j + 1 < freq.size() && s21_db[j + 1] > thr) ++j;
  if (j + 1 == freq.size()) {
    b.f_hi = freq.back();
    b.censored_hi = true;
  } else {
    b.f_hi = cross(j + 1, j);
  }
  b.bw = b.f_hi - b.f_lo;
  return b;
}

std::size_t output_port(const Netlist& netlist) {
  std::size_t idx = 0;
  for (const auto& e : netlist.elements) {
    if (e.kind != circuit::ElementKind::PORT) continue;
    if (e.get_or("rf", 0.0) == 0.0) return idx;
    ++idx;
  }
  throw InvalidArgument("netlist has no output (non-RF) port");
}

namespace {

std::size_t input_port(const Netlist& netlist) {
  std::size_t idx = 0;
  for (const auto& e : netlist.elements) {
    if (e.kind != circuit::ElementKind::PORT) continue;
    if (e.get_or("rf", 0.0) != 0.0) return idx;
    ++idx;
  }
  return 0;
}

}  // namespace

SParamReport sparams(const Netlist& netlist, const rf::FrequencyGrid& grid, double f0, unsigned threads) {
  const auto op = circuit::dc_operating_point(netlist);
  SParamReport r{circuit::small_signal_sparams(op, grid, threads), f0, 0.0, 0.0, 0.0, {}};
  const std::size_t pi = input_port(netlist), po = output_port(netlist);
  const auto at_f0 = circuit::small_signal_sparams(op, rf::FrequencyGrid::single(f0)).at(0);
  r.gain_db = db20(at_f0(static_cast<Eigen::Index>(po), static_cast<Eigen::Index>(pi)));
  r.s11_db = db20(at_f0(static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(pi)));
  r.s22_db = db20(at_f0(static_cast<Eigen::Index>(po), static_cast<Eigen::Index>(po)));
  std::vector<double> f(grid.points().begin(), grid.points().end()), g;
  for (std::size_t k = 0; k < grid.size(); ++k)
    g.push_back(db20(r.s.at(k)(static_cast<Eigen::Index>(po), static_cast<Eigen::Index>(pi))));
  r.bw = bandwidth_3db(f, g);
  return r;
}

double pae(double p_out_w, double p_in_w, double p_dc_w) {
  if (!(p_dc_w > 0.0)) throw InvalidArgument(fmt::format("PAE needs p_dc > 0 (got {} W)", p_dc_w));
  if (p_out_w < 0.0 || p_in_w < 0.0) throw InvalidArgument("PAE needs non-negative powers");
  return 100.0 * (p_out_w - p_in_w) / p_dc_w;
}

double drain_efficiency(double p_out_w, double p_dc_w) {
  if (!(p_dc_w > 0.0)) throw InvalidArgument(fmt::format("drain efficiency needs p_dc > 0 (got {} W)", p_dc_w));
  if (p_out_w < 0.0) throw InvalidArgument("drain efficiency needs p_out >= 0");
  return 100.0 * p_out_w / p_dc_w;
}

std::vector<double> power_range(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw InvalidArgument(fmt::format("bad power range {}:{}:{}", lo, hi, step));
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

PowerSweepResult power_sweep(const Netlist& netlist, double f0, const std::vector<double>& p_in_dbm,
                             const hb::HbConfig& base) {
  if (p_in_dbm.empty()) throw InvalidArgument("power sweep needs at least one drive level");
  for (std::size_t i = 1; i < p_in_dbm.size(); ++i)
    if (!(p_in_dbm[i] > p_in_dbm[i - 1])) throw InvalidArgument("power sweep levels must be strictly ascending");
  netlist.validate();
  if (!netlist.rf_port()) throw InvalidArgument("power sweep needs an RF source port");
  const std::size_t out = output_port(netlist);
  hb::HbConfig cfg = base;
  cfg.f0 = f0;
  auto c = std::make_shared<const circuit::Circuit>(netlist);
  hb::HbEngine eng(c, cfg);

  PowerSweepResult r;
  r.f0 = f0;
  std::optional<hb::HarmonicSolution> prev;
  for (double p : p_in_dbm) {
    auto sol = eng.solve(p, prev ? &*prev : nullptr);
    if (!sol.converged) {
      r.truncated = true;
      r.warnings.push_back(fmt::format("HB did not converge at p_in = {:g} dBm (residual {:.3g} A); sweep truncated", p,
                                       sol.residual));
      break;
    }
    SweepRow row;
    row.p_in_dbm = p;
    const double p_out = std::max(hb::hb_power(sol, out, 1), 0.0);
    const double p_in = rf::dbm_to_watt(p);
    row.p_out_dbm = p_out > 0.0 ? rf::watt_to_dbm(p_out) : -std::numeric_limits<double>::infinity();
    row.gain_db = row.p_out_dbm - p;
    row.p_dc_w = sol.supply_power();
    row.pae = row.p_dc_w > 0.0 ? pae(p_out, p_in, row.p_dc_w) : kNaN;
    row.drain_eff = row.p_dc_w > 0.0 ? drain_efficiency(p_out, row.p_dc_w) : kNaN;
    r.rows.push_back(row);
    prev = std::move(sol);
  }
  return r;
}

CompressionMetrics compression_metrics(const PowerSweepResult& sweep) {
  const auto& rows = sweep.rows;
  if (rows.size() < 3) throw InvalidArgument(fmt::format("compression metrics need >= 3 sweep rows (got {})", rows.size()));
  CompressionMetrics m;
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows)
    if (std::abs(r.gain_db - rows.front().gain_db) <= 0.1) {
      sum += r.gain_db;
      ++count;
    }
  m.small_signal_gain_db = sum / count;
  const double target = m.small_signal_gain_db - 1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &a = rows[i - 1], &b = rows[i];
    if (b.gain_db <= target && a.gain_db > target) {
      const double t = (a.gain_db - target) / (a.gain_db - b.gain_db);
      m.p1db_in_dbm = a.p_in_dbm + t * (b.p_in_dbm - a.p_in_dbm);
      m.p1db_out_dbm = *m.p1db_in_dbm + target;
      break;
    }
  }
  m.p_sat_dbm = -std::numeric_limits<double>::infinity();
  m.pae_peak = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    m.p_sat_dbm = std::max(m.p_sat_dbm, r.p_out_dbm);
    if (r.pae > m.pae_peak) {
      m.pae_peak = r.pae;
      m.pae_peak_p_in_dbm = r.p_in_dbm;
    }
  }
  if (!std::isfinite(m.pae_peak)) m.pae_peak = kNaN;
  return m;
}

}  // namespace mmpa::pa
