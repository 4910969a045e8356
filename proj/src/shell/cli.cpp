#include <cmath>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mmpa/cli.hpp"
#include "mmpa/errors.hpp"
#include "mmpa/io.hpp"
#include "mmpa/kernels.hpp"
#include "mmpa/netlist_io.hpp"
#include "mmpa/parallel.hpp"
#include "mmpa/units.hpp"

namespace mmpa::io {

namespace {

std::vector<double> split_numbers(const std::string& s, char sep, std::size_t count, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) {
    char* end = nullptr;
    const double x = std::strtod(part.c_str(), &end);
    if (part.empty() || end != part.c_str() + part.size() || !std::isfinite(x))
      throw ParseError(fmt::format("{}: '{}' is not a number", what, part));
    v.push_back(x);
  }
  if (v.size() != count)
    throw ParseError(fmt::format("{}: expected {} values separated by '{}', got '{}'", what, count, sep, s));
  return v;
}

double resolve_f0(double cli, const Netlist& n) {
  if (cli > 0.0) return cli;
  if (n.f0) return *n.f0;
  throw InvalidArgument("no --f0 given and the netlist has no .f0 line");
}

std::string cplx_str(rf::cplx z) { return fmt::format("{:.6g}{:+.6g}j", z.real(), z.imag()); }

struct Common {
  std::string netlist;
  double f0 = 0.0;
  std::string out;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mm-wave PA design and analysis toolkit", "mmpa"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  unsigned threads = 1;
  std::string isa = "auto";
  app.add_option("--threads", threads, "Worker threads for parallel analyses")->check(CLI::PositiveNumber);
  app.add_option("--isa", isa, "Kernel instruction set")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  std::function<void()> action;

  // dciv
  Common dciv;
  std::string dciv_model, vgs_range = "-1.5:0.5:0.01", vds_range = "0:8:0.5";
  auto* c_dciv = app.add_subcommand("dciv", "DC-IV table of a device model");
  c_dciv->add_option("netlist", dciv.netlist, "Netlist with .model lines (default device when omitted)");
  c_dciv->add_option("--model", dciv_model, "Model name in the netlist");
  c_dciv->add_option("--vgs", vgs_range, "Gate sweep lo:hi:step (V)");
  c_dciv->add_option("--vds", vds_range, "Drain sweep lo:hi:step (V)");
  c_dciv->add_option("-o,--out", dciv.out, "CSV output");
  c_dciv->callback([&] {
    action = [&] {
      device::PhemtParams p = device::default_phemt();
      if (!dciv.netlist.empty()) {
        const auto n = read_netlist(dciv.netlist);
        if (dciv_model.empty()) {
          if (n.models.size() != 1) throw InvalidArgument("netlist has several models: pick one with --model");
          p = n.models.begin()->second;
        } else {
          auto it = n.models.find(dciv_model);
          if (it == n.models.end()) throw InvalidArgument(fmt::format("no model '{}' in the netlist", dciv_model));
          p = it->second;
        }
      }
      auto steps = [](const std::string& s, const char* what) {
        const auto r = split_numbers(s, ':', 3, what);
        if (!(r[2] > 0.0) || r[1] < r[0]) throw ParseError(fmt::format("{}: need lo <= hi and step > 0", what));
        std::vector<double> v;
        const auto count = static_cast<std::size_t>(std::floor((r[1] - r[0]) / r[2] + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) v.push_back(r[0] + static_cast<double>(i) * r[2]);
        return v;
      };
      const auto table = device::dc_iv_sweep(p, steps(vgs_range, "--vgs"), steps(vds_range, "--vds"));
      const auto csv = iv_csv_string(table);
      if (dciv.out.empty())
        out << csv;
      else
        write_file_atomic(dciv.out, csv);
      const auto ab = device::bias_select(device::dc_iv_sweep(p, device::default_vgs_sweep(), {6.0}),
                                          device::AmpClass::AB, 6.0);
      const auto a = device::bias_select(device::dc_iv_sweep(p, device::default_vgs_sweep(), {6.0}),
                                         device::AmpClass::A, 6.0);
      if (!dciv.out.empty())
        out << fmt::format("{} points written to {}\nbias at 6 V: class AB v_gs {:.4f} V ({:.4g} mA), class A v_gs "
                           "{:.4f} V ({:.4g} mA)\n",
                           table.v_gs.size() * table.v_ds.size(), dciv.out, ab.v_gs, ab.i_d * 1e3, a.v_gs,
                           a.i_d * 1e3);
    };
  });

  // sparams
  Common sp;
  std::string grid_spec;
  auto* c_sp = app.add_subcommand("sparams", "Small-signal S parameters about the DC operating point");
  c_sp->add_option("netlist", sp.netlist)->required();
  c_sp->add_option("--grid", grid_spec, "start:stop:n (Hz)")->required();
  c_sp->add_option("--f0", sp.f0, "Reference frequency for gain and bandwidth (Hz)");
  c_sp->add_option("-o,--out", sp.out, "Touchstone output (.sNp)");
  c_sp->callback([&] {
    action = [&] {
      const auto n = read_netlist(sp.netlist);
      const auto g = split_numbers(grid_spec, ':', 3, "--grid");
      if (g[2] < 1 || g[2] != std::floor(g[2])) throw ParseError("--grid: n must be a positive integer");
      const auto grid = g[2] == 1 ? rf::FrequencyGrid::single(g[0])
                                  : rf::make_grid(g[0], g[1], static_cast<std::size_t>(g[2]));
      const double f0 = sp.f0 > 0 ? sp.f0 : (n.f0 ? *n.f0 : grid[grid.size() / 2]);
      const auto r = pa::sparams(n, grid, f0, threads);
      out << fmt::format("f0 {:.6g} GHz: S21 {:.3f} dB, S11 {:.3f} dB, S22 {:.3f} dB\n", f0 / 1e9, r.gain_db,
                         r.s11_db, r.s22_db);
      if (r.s.ports() == 2) {
        out << fmt::format("3 dB band {:.6g} to {:.6g} GHz ({:.6g} GHz){}{}\n", r.bw.f_lo / 1e9, r.bw.f_hi / 1e9,
                           r.bw.bw / 1e9, r.bw.censored_lo ? ", lower edge censored" : "",
                           r.bw.censored_hi ? ", upper edge censored" : "");
        const auto st = rf::stability(r.s);
        out << fmt::format("min K {:.4g}, max |Delta| {:.4g}, {}\n", st.k_factor, st.delta_mag,
                           st.unconditionally_stable ? "unconditionally stable" : "potentially unstable");
      }
      if (!sp.out.empty()) {
        write_touchstone(r.s, sp.out);
        out << fmt::format("wrote {}\n", sp.out);
      }
    };
  });

  // hb
  Common hbc;
  int harmonics = 7;
  double pin = 0.0;
  auto* c_hb = app.add_subcommand("hb", "Single-tone harmonic balance");
  c_hb->add_option("netlist", hbc.netlist)->required();
  c_hb->add_option("--f0", hbc.f0, "Fundamental (Hz)");
  c_hb->add_option("--harmonics", harmonics, "Number of harmonics K")->check(CLI::PositiveNumber);
  c_hb->add_option("--pin", pin, "Available source power (dBm)");
  c_hb->add_option("-o,--out", hbc.out, "CSV of port voltage/current phasors");
  c_hb->callback([&] {
    action = [&] {
      const auto n = read_netlist(hbc.netlist);
      hb::HbConfig cfg;
      cfg.f0 = resolve_f0(hbc.f0, n);
      cfg.n_harmonics = harmonics;
      cfg.oversample = std::max(cfg.oversample, 8 * harmonics + 1);
      const auto sol = hb::hb_solve(n, cfg, pin);
      if (!sol.converged)
        throw AnalysisError(fmt::format("HB did not converge at {} dBm (residual {:.3g})", pin, sol.residual));
      const std::size_t po = pa::output_port(n);
      const double p_out = hb::hb_power(sol, po, 1), p_dc = sol.supply_power();
      const double p_in = rf::dbm_to_watt(pin);
      out << fmt::format("converged in {} iterations, residual {:.3g} A\n", sol.total_iterations, sol.residual);
      out << fmt::format("p_in {:.4f} dBm, p_out {:.4f} dBm, gain {:.4f} dB, p_dc {:.6g} W", pin,
                         rf::watt_to_dbm(p_out), rf::watt_to_dbm(p_out) - pin, p_dc);
      if (p_dc > 0) out << fmt::format(", PAE {:.3f} %", 100.0 * (p_out - p_in) / p_dc);
      out << "\n";
      std::string csv = "port,harmonic,v_re_v,v_im_v,i_re_a,i_im_a,p_w\n";
      const auto ports = n.ports();
      for (std::size_t p = 0; p < ports.size(); ++p) {
        const auto v = sol.port_voltage(p), i = sol.port_current(p);
        for (int k = 0; k <= harmonics; ++k) {
          const double pw = hb::hb_power(sol, p, k);
          csv += fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", n.elements[ports[p]].id, k,
                             v[k].real(), v[k].imag(), i[k].real(), i[k].imag(), pw);
          if (p == po && k >= 1 && k <= 3)
            out << fmt::format("  output harmonic {}: {:.4f} dBm\n", k, pw > 0 ? rf::watt_to_dbm(pw) : -INFINITY);
        }
      }
      if (!hbc.out.empty()) write_file_atomic(hbc.out, csv);
    };
  });

  // sweep-power
  Common sw;
  std::string pin_range = "0:20:1";
  auto* c_sw = app.add_subcommand("sweep-power", "HB power sweep with gain, PAE and compression");
  c_sw->add_option("netlist", sw.netlist)->required();
  c_sw->add_option("--f0", sw.f0, "Fundamental (Hz)");
  c_sw->add_option("--pin", pin_range, "lo:hi:step (dBm)");
  c_sw->add_option("--harmonics", harmonics, "Number of harmonics K")->check(CLI::PositiveNumber);
  c_sw->add_option("-o,--out", sw.out, "CSV output");
  c_sw->callback([&] {
    action = [&] {
      const auto n = read_netlist(sw.netlist);
      const auto r = split_numbers(pin_range, ':', 3, "--pin");
      hb::HbConfig cfg;
      cfg.n_harmonics = harmonics;
      cfg.oversample = std::max(cfg.oversample, 8 * harmonics + 1);
      const auto res = pa::power_sweep(n, resolve_f0(sw.f0, n), pa::power_range(r[0], r[1], r[2]), cfg);
      for (const auto& w : res.warnings) err << "warning: " << w << "\n";
      if (!sw.out.empty()) write_csv(res, sw.out);
      else out << csv_string(res);
      if (res.rows.size() >= 3) {
        const auto m = pa::compression_metrics(res);
        out << fmt::format("small-signal gain {:.3f} dB, P1dB(in) {}, Psat {:.3f} dBm, PAE peak {:.2f} % at {:.2f} dBm\n",
                           m.small_signal_gain_db,
                           m.p1db_in_dbm ? fmt::format("{:.3f} dBm", *m.p1db_in_dbm) : std::string("not reached"),
                           m.p_sat_dbm, m.pae_peak, m.pae_peak_p_in_dbm);
      }
      if (res.truncated) throw AnalysisError("power sweep truncated at a non-converged drive level");
    };
  });

  // loadpull
  Common lp;
  int lp_grid = 11;
  std::string objective = "pout";
  auto* c_lp = app.add_subcommand("loadpull", "Fundamental load-pull on a reflection-coefficient grid");
  c_lp->add_option("netlist", lp.netlist)->required();
  c_lp->add_option("--f0", lp.f0, "Fundamental (Hz)");
  c_lp->add_option("--pin", pin, "Available source power (dBm)");
  c_lp->add_option("--grid", lp_grid, "Grid points per axis")->check(CLI::PositiveNumber);
  c_lp->add_option("--objective", objective)->check(CLI::IsMember({"pout", "pae"}));
  c_lp->add_option("-o,--out", lp.out, "CSV output");
  c_lp->callback([&] {
    action = [&] {
      const auto n = read_netlist(lp.netlist);
      const auto res = pa::load_pull(n, pa::gamma_grid(lp_grid), resolve_f0(lp.f0, n), pin,
                                     objective == "pae" ? pa::Objective::Pae : pa::Objective::Pout, {}, threads);
      if (!lp.out.empty()) write_csv(res, lp.out);
      const auto& best = res.cells[res.optimum];
      out << fmt::format("{} cells, optimum gamma {} (Z {} ohm): p_out {:.4f} dBm, PAE {:.3f} %\n", res.cells.size(),
                         cplx_str(res.optimum_gamma), cplx_str(res.optimum_z), best.p_out_dbm, best.pae);
    };
  });

  // match
  std::string zl_spec, loci_out;
  double m_f0 = 0.0, qmax = 1.2, zsys = 50.0;
  std::string topology = "auto", stub = "open";
  auto* c_m = app.add_subcommand("match", "Synthesize a transmission-line matching network");
  c_m->add_option("--zl", zl_spec, "Termination re,im (ohm)")->required();
  c_m->add_option("--f0", m_f0, "Design frequency (Hz)")->required();
  c_m->add_option("--qmax", qmax, "Loci nodal-Q bound");
  c_m->add_option("--zsys", zsys, "System impedance (ohm)");
  c_m->add_option("--topology", topology)->check(CLI::IsMember({"auto", "quarter-wave", "stub-line"}));
  c_m->add_option("--stub", stub)->check(CLI::IsMember({"open", "short"}));
  c_m->add_option("-o,--out", loci_out, "Loci CSV");
  c_m->callback([&] {
    action = [&] {
      const auto zl = split_numbers(zl_spec, ',', 2, "--zl");
      match::SynthesisOptions o;
      o.q_max = qmax;
      o.topology = topology == "auto" ? match::Topology::Auto
                   : topology == "quarter-wave" ? match::Topology::QuarterWave
                                                : match::Topology::StubLine;
      o.stub = stub == "open" ? elements::StubKind::Open : elements::StubKind::Short;
      const rf::cplx z{zl[0], zl[1]};
      const auto net = match::synthesize(z, zsys, m_f0, o);
      const auto lr = match::loci(net, z, m_f0);
      const auto s11 = match::verify(net, z, rf::FrequencyGrid::single(m_f0)).s11_db.at(0);
      out << net.describe() << "\n";
      out << fmt::format("|S11| at f0 {:.2f} dB, max internal loci Q {:.4f}\n", s11, lr.max_internal_q);
      const auto csv = loci_csv_string(net, lr);
      if (loci_out.empty()) out << csv;
      else write_file_atomic(loci_out, csv);
      if (net.constraint_violated) throw AnalysisError("no network satisfies the Q bound");
    };
  });

  // wilkinson
  double wz0 = 50.0, wf0 = 90e9;
  std::string w_grid, w_out;
  auto* c_w = app.add_subcommand("wilkinson", "Ideal 2-way Wilkinson divider");
  c_w->add_option("--z0", wz0, "Port impedance (ohm)")->check(CLI::PositiveNumber);
  c_w->add_option("--f0", wf0, "Centre frequency (Hz)")->check(CLI::PositiveNumber);
  c_w->add_option("--grid", w_grid, "start:stop:n (Hz), default 0.5 f0 to 1.5 f0 in 101 points");
  c_w->add_option("-o,--out", w_out, "Touchstone output (default wilkinson.s3p)");
  c_w->callback([&] {
    action = [&] {
      const auto spec = elements::wilkinson_synthesize(wz0, wf0);
      auto grid = rf::make_grid(0.5 * wf0, 1.5 * wf0, 101);
      if (!w_grid.empty()) {
        const auto g = split_numbers(w_grid, ':', 3, "--grid");
        if (g[2] < 2 || g[2] != std::floor(g[2])) throw ParseError("--grid: n must be an integer >= 2");
        grid = rf::make_grid(g[0], g[1], static_cast<std::size_t>(g[2]));
      }
      const auto s = elements::wilkinson_analyze(spec, grid);
      out << fmt::format("branch {:.4f} ohm, {:.1f} deg at {:.6g} GHz, R {:.4f} ohm\n", spec.branch_z,
                         spec.branch_length, wf0 / 1e9, spec.r_iso);
      const auto at_f0 = elements::wilkinson_analyze(spec, rf::FrequencyGrid::single(wf0));
      out << fmt::format("at f0: S21 {:.4f} dB, S31 {:.4f} dB, S11 {:.1f} dB, S23 {:.1f} dB\n",
                         rf::mag_to_db(std::abs(at_f0(0, 1, 0))), rf::mag_to_db(std::abs(at_f0(0, 2, 0))),
                         rf::mag_to_db(std::abs(at_f0(0, 0, 0))), rf::mag_to_db(std::abs(at_f0(0, 1, 2))));
      const std::string path = w_out.empty() ? "wilkinson.s3p" : w_out;
      write_touchstone(s, path);
      out << fmt::format("wrote {}\n", path);
    };
  });

  // mc
  Common mc;
  int n_trials = 250;
  std::uint64_t seed = 1;
  double sigma = 0.03;
  std::string trials_out;
  auto* c_mc = app.add_subcommand("mc", "Monte-Carlo yield of the small-signal S parameters");
  c_mc->add_option("netlist", mc.netlist)->required();
  c_mc->add_option("--f0", mc.f0, "Evaluation frequency (Hz)");
  c_mc->add_option("--n", n_trials, "Trials")->check(CLI::PositiveNumber);
  c_mc->add_option("--seed", seed, "Base seed");
  c_mc->add_option("--sigma", sigma, "Relative standard deviation")->check(CLI::NonNegativeNumber);
  c_mc->add_option("-o,--out", mc.out, "Summary CSV");
  c_mc->add_option("--trials-out", trials_out, "Per-trial CSV");
  c_mc->callback([&] {
    action = [&] {
      const auto n = read_netlist(mc.netlist);
      const auto rep = pa::monte_carlo(n, resolve_f0(mc.f0, n), sigma, n_trials, seed, {}, threads);
      const auto csv = csv_string(rep);
      if (mc.out.empty()) out << csv;
      else write_file_atomic(mc.out, csv);
      if (!trials_out.empty()) write_file_atomic(trials_out, trials_csv_string(rep));
      for (const auto& m : rep.metrics)
        out << fmt::format("{}: min {:.3f} dB, max {:.3f} dB, sigma {:.4f} dB, success {:.1f} %\n", m.name, m.min,
                           m.max, m.std_dev, m.success_rate);
    };
  });

  // build-pa
  Common bp;
  std::string branches = "both";
  auto* c_bp = app.add_subcommand("build-pa", "Design the default 3-stage 2-way PA and write its netlist");
  c_bp->add_option("--f0", bp.f0, "Design frequency (Hz)")->required()->check(CLI::PositiveNumber);
  c_bp->add_option("--branches", branches)->check(CLI::IsMember({"both", "single", "through"}));
  c_bp->add_option("-o,--out", bp.out, "Netlist output")->required();
  c_bp->callback([&] {
    action = [&] {
      const auto d = pa::design_pa(bp.f0);
      const auto b = branches == "both" ? pa::Branches::Both
                     : branches == "single" ? pa::Branches::Single
                                            : pa::Branches::Through;
      const auto n = pa::build_pa(d, b);
      write_file_atomic(bp.out, serialize_netlist(n));
      out << fmt::format("{}: {} elements ({} FET, {} TL, {} stubs, {} R), {} models\n", n.title, n.elements.size(),
                         n.count(circuit::ElementKind::FET), n.count(circuit::ElementKind::TL),
                         n.count(circuit::ElementKind::OSTUB) + n.count(circuit::ElementKind::SSTUB),
                         n.count(circuit::ElementKind::R), n.models.size());
      out << fmt::format("wrote {}\n", bp.out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (isa == "scalar") kernels::force_isa(kernels::Isa::Scalar);
    else if (isa == "avx2") kernels::force_isa(kernels::Isa::Avx2);
    else kernels::force_isa(std::nullopt);
    action();
    kernels::force_isa(std::nullopt);
    return kExitOk;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    kernels::force_isa(std::nullopt);
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    kernels::force_isa(std::nullopt);
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    kernels::force_isa(std::nullopt);
    return kExitAnalysis;
  }
}

}  // namespace mmpa::io
