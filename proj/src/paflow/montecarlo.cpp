#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/parallel.hpp"
#include "mmpa/paflow.hpp"

namespace mmpa::pa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(trial));
}

Netlist perturb(const Netlist& netlist, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument(fmt::format("sigma must be >= 0 (got {})", sigma));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double& v) { v *= 1.0 + sigma * normal(rng); };
  Netlist n = netlist;
  for (auto& [name, p] : n.models) {
    draw(p.i_pk);
    draw(p.v_pk);
    draw(p.p1);
    draw(p.c_gs);
    draw(p.c_gd);
    draw(p.c_ds);
  }
  for (auto& e : n.elements) {
    using circuit::ElementKind;
    if (e.kind != ElementKind::TL && e.kind != ElementKind::OSTUB && e.kind != ElementKind::SSTUB) continue;
    draw(e.params.at("z"));
    draw(e.params.at("deg"));
  }
  return n;
}

std::vector<McMetric> summarize(const std::vector<McTrial>& trials, const McThresholds& thr) {
  struct Def {
    const char* name;
    double McTrial::*field;
    bool (*pass)(double, const McThresholds&);
  };
  const Def defs[] = {
      {"S11", &McTrial::s11_db, [](double v, const McThresholds& t) { return v < t.s11_max_db; }},
      {"S21", &McTrial::s21_db, [](double v, const McThresholds& t) { return v > t.s21_min_db; }},
      {"S22", &McTrial::s22_db, [](double v, const McThresholds& t) { return v < t.s22_max_db; }},
  };
  std::vector<McMetric> out;
  for (const auto& d : defs) {
    McMetric m;
    m.name = d.name;
    m.n_trials = static_cast<int>(trials.size());
    std::vector<double> v;
    for (const auto& t : trials)
      if (t.ok) {
        v.push_back(t.*d.field);
        if (d.pass(t.*d.field, thr)) ++m.success_count;
      }
    if (v.empty()) {
      m.min = m.max = m.std_dev = std::numeric_limits<double>::quiet_NaN();
    } else {
      m.min = *std::min_element(v.begin(), v.end());
      m.max = *std::max_element(v.begin(), v.end());
      // Shifted by the first sample so identical values give exactly zero.
      const double shift = v.front();
      double mean = 0.0;
      for (double x : v) mean += x - shift;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - shift - mean) * (x - shift - mean);
      m.std_dev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    m.success_rate = m.n_trials > 0 ? 100.0 * m.success_count / m.n_trials : 0.0;
    out.push_back(m);
  }
  return out;
}

MonteCarloReport monte_carlo(const Netlist& netlist, double f0, double sigma, int n_trials, std::uint64_t seed,
                             const McThresholds& thr, unsigned threads) {
  if (n_trials < 1) throw InvalidArgument("Monte Carlo needs n_trials >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("Monte Carlo needs sigma >= 0");
  netlist.validate();
  const auto grid = rf::FrequencyGrid::single(f0);
  MonteCarloReport r;
  r.seed = seed;
  r.sigma = sigma;
  r.f0 = f0;
  r.thresholds = thr;
  r.trials.resize(static_cast<std::size_t>(n_trials));
  parallel_for(r.trials.size(), threads, [&](std::size_t i) {
    McTrial& t = r.trials[i];
    try {
      const auto rep = sparams(perturb(netlist, sigma, trial_seed(seed, static_cast<int>(i))), grid, f0);
      t.s11_db = rep.s11_db;
      t.s21_db = rep.gain_db;
      t.s22_db = rep.s22_db;
      t.ok = std::isfinite(t.s11_db) && std::isfinite(t.s21_db) && std::isfinite(t.s22_db);
    } catch (const Error&) {
      t.ok = false;
    }
  });
  r.metrics = summarize(r.trials, thr);
  return r;
}

}  // namespace mmpa::pa
