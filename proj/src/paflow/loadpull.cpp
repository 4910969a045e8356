#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/parallel.hpp"
#include "mmpa/paflow.hpp"
#include "mmpa/units.hpp"

namespace mmpa::pa {

const char* to_string(Objective o) noexcept { return o == Objective::Pae ? "pae" : "p_out"; }

std::vector<cplx> gamma_grid(int n, double extent, double max_mag) {
  if (n < 1) throw InvalidArgument("gamma grid needs n >= 1");
  if (!(extent >= 0.0) || !(max_mag > 0.0) || max_mag >= 1.0)
    throw InvalidArgument("gamma grid needs extent >= 0 and 0 < max_mag < 1");
  std::vector<cplx> g;
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < n; ++r) {
      const double step = n > 1 ? 2.0 * extent / (n - 1) : 0.0;
      const cplx z{n > 1 ? -extent + r * step : 0.0, n > 1 ? -extent + i * step : 0.0};
      if (std::abs(z) <= max_mag + 1e-12) g.push_back(z);
    }
  return g;
}

std::size_t select_optimum(const std::vector<cplx>& gammas, const std::vector<double>& values,
                           const std::vector<bool>& valid) {
  if (gammas.size() != values.size() || values.size() != valid.size())
    throw InvalidArgument("select_optimum needs equally sized inputs");
  std::size_t best = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!valid[i] || !std::isfinite(values[i])) continue;
    if (best == values.size() || values[i] > values[best] ||
        (values[i] == values[best] && std::abs(gammas[i]) < std::abs(gammas[best])))
      best = i;
  }
  if (best == values.size()) throw AnalysisError("load pull: no grid point converged");
  return best;
}

LoadPullResult load_pull(const Netlist& netlist, const std::vector<cplx>& gammas, double f0, double p_in_dbm,
                         Objective objective, const hb::HbConfig& base, unsigned threads) {
  if (gammas.empty()) throw InvalidArgument("load pull needs a non-empty gamma grid");
  for (const auto& g : gammas)
    if (!(std::abs(g) < 1.0)) throw InvalidArgument(fmt::format("|gamma| = {} is not inside the unit circle", std::abs(g)));
  netlist.validate();
  if (!netlist.rf_port()) throw InvalidArgument("load pull needs an RF source port");
  const std::size_t out = output_port(netlist);
  auto c = std::make_shared<const circuit::Circuit>(netlist);
  const double z_ref = c->port_z(out);
  hb::HbConfig cfg = base;
  cfg.f0 = f0;

  LoadPullResult r;
  r.f0 = f0;
  r.p_in_dbm = p_in_dbm;
  r.z_ref = z_ref;
  r.objective = objective;
  r.cells.resize(gammas.size());
  parallel_for(gammas.size(), threads, [&](std::size_t i) {
    LoadPullCell& cell = r.cells[i];
    cell.gamma = gammas[i];
    cell.z = z_ref * (1.0 + gammas[i]) / (1.0 - gammas[i]);
    try {
      hb::HbEngine eng(c, cfg, {{out, cell.z}});
      const auto sol = eng.solve(p_in_dbm);
      cell.converged = sol.converged;
      if (!sol.converged) return;
      const double p_out = hb::hb_power(sol, out, 1);
      cell.p_out_dbm = p_out > 0.0 ? rf::watt_to_dbm(p_out) : -std::numeric_limits<double>::infinity();
      const double p_dc = sol.supply_power();
      cell.pae = p_dc > 0.0 ? 100.0 * (p_out - rf::dbm_to_watt(p_in_dbm)) / p_dc
                            : std::numeric_limits<double>::quiet_NaN();
    } catch (const Error&) {
      cell.converged = false;
    }
  });

  std::vector<double> values;
  std::vector<bool> valid;
  for (const auto& cell : r.cells) {
    values.push_back(objective == Objective::Pae ? cell.pae : cell.p_out_dbm);
    valid.push_back(cell.converged);
  }
  r.optimum = select_optimum(gammas, values, valid);
  r.optimum_gamma = r.cells[r.optimum].gamma;
  r.optimum_z = r.cells[r.optimum].z;
  return r;
}

}  // namespace mmpa::pa
