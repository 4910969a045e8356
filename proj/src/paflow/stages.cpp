#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/paflow.hpp"

namespace mmpa::pa {

using circuit::ElementKind;

const char* to_string(StageTopology t) noexcept {
  return t == StageTopology::Cascode ? "cascode" : "common_source";
}

void StageSpec::validate() const {
  device.validate();
  if (!(f0 > 0.0)) throw InvalidArgument("stage f0 must be > 0");
  if (!(z0 > 0.0)) throw InvalidArgument("stage z0 must be > 0");
  if (r_stab_gate < 0.0 || r_stab_drain < 0.0) throw InvalidArgument("stabilization resistors must be >= 0");
  const bool cascode = topology == StageTopology::Cascode;
  if (cascode && !bias_cap) throw InvalidArgument("cascode stage needs a bias capacitor");
  if (!cascode && bias_cap) throw InvalidArgument("bias capacitor is only defined for the cascode stage");
  if (bias_cap && !(*bias_cap > 0.0)) throw InvalidArgument("bias capacitor must be > 0");
}

namespace {

std::map<std::string, double> tl_params(const elements::TLineSpec& l) {
  std::map<std::string, double> p{{"z", l.z_c}, {"deg", l.electrical_length}, {"f", l.f_ref}};
  if (l.loss_db_per_mm) {
    p["loss"] = *l.loss_db_per_mm;
    p["eeff"] = l.eps_eff;
  }
  return p;
}

// Lays a matching network between its termination node and system node.
void add_match(Netlist& n, const match::MatchingNetwork& m, const std::string& prefix, const std::string& load_node,
               const std::string& sys_node) {
  std::string at = load_node;
  int count = 0;
  for (std::size_t i = 0; i < m.elements.size(); ++i) {
    const auto& e = m.elements[i];
    const std::string id = fmt::format("{}{}", prefix, ++count);
    switch (e.kind) {
      case match::ElementKind::SeriesLine:
      case match::ElementKind::QuarterWave: {
        const bool last_series = [&] {
          for (std::size_t j = i + 1; j < m.elements.size(); ++j)
            if (m.elements[j].kind == match::ElementKind::SeriesLine ||
                m.elements[j].kind == match::ElementKind::QuarterWave)
              return false;
          return true;
        }();
        const std::string next = last_series ? sys_node : fmt::format("{}n{}", prefix, count);
        n.add(id, ElementKind::TL, {at, next}, tl_params(e.line));
        at = next;
        break;
      }
      case match::ElementKind::OpenStub:
        n.add(id, ElementKind::OSTUB, {at}, tl_params(e.line));
        break;
      case match::ElementKind::ShortStub:
        n.add(id, ElementKind::SSTUB, {at}, tl_params(e.line));
        break;
    }
  }
  // A network of shunt stubs only (or nothing) leaves both sides on one node.
  if (at != sys_node)
    n.add(prefix + "0", ElementKind::TL, {at, sys_node}, {{"z", m.z_sys}, {"deg", 1e-9}, {"f", m.f0}});
}

Netlist stage_netlist(const StageSpec& s, bool with_match) {
  s.validate();
  if (with_match && (!s.input_match || !s.output_match))
    throw InvalidArgument(fmt::format("{} stage is missing its {} matching network", to_string(s.topology),
                                      !s.input_match ? "input" : "output"));
  Netlist n;
  n.title = fmt::format("{} stage, class {}", to_string(s.topology), device::to_string(s.amp_class));
  n.f0 = s.f0;
  n.models["dev"] = s.device;
  n.add("P1", ElementKind::PORT, {"in", "0"}, {{"z", s.z0}, {"rf", 1}});
  n.add("P2", ElementKind::PORT, {"out", "0"}, {{"z", s.z0}});
  const std::string gin = with_match ? "gm" : "in";
  const std::string dout = with_match ? "dm" : "out";
  if (with_match) {
    add_match(n, *s.input_match, "MI", gin, "in");
    add_match(n, *s.output_match, "MO", dout, "out");
  }
  n.add("BI", ElementKind::BLOCK, {gin, "g"});
  n.add("FG", ElementKind::FEED, {"g", "vg"});
  n.add("VG", ElementKind::VDC, {"vg", "0"}, {{"v", s.bias.v_gs}});
  n.add("BO", ElementKind::BLOCK, {"d", dout});
  n.add("FD", ElementKind::FEED, {"d", "vd"});
  n.add("VD", ElementKind::VDC, {"vd", "0"}, {{"v", s.v_dd}});
  if (s.r_stab_gate > 0.0) {
    n.add("RSG", ElementKind::R, {"g", "rsg"}, {{"r", s.r_stab_gate}});
    n.add("BSG", ElementKind::BLOCK, {"rsg", "0"});
  }
  if (s.r_stab_drain > 0.0) {
    n.add("RSD", ElementKind::R, {"d", "rsd"}, {{"r", s.r_stab_drain}});
    n.add("BSD", ElementKind::BLOCK, {"rsd", "0"});
  }
  if (s.topology == StageTopology::CommonSource) {
    n.add("M1", ElementKind::FET, {"d", "g", "0"}, {}, "dev");
  } else {
    n.add("M1", ElementKind::FET, {"mid", "g", "0"}, {}, "dev");
    n.add("M2", ElementKind::FET, {"d", "cg", "mid"}, {}, "dev");
    n.add("CB", ElementKind::C, {"cg", "0"}, {{"c", *s.bias_cap}});
    n.add("FC", ElementKind::FEED, {"cg", "vcg"});
    n.add("VC", ElementKind::VDC, {"vcg", "0"}, {{"v", s.v_cg}});
  }
  return n;
}

Eigen::Matrix2cd core_s(const StageSpec& s) {
  const auto op = circuit::dc_operating_point(stage_netlist(s, false));
  return circuit::small_signal_sparams(op, rf::FrequencyGrid::single(s.f0)).at(0);
}

struct Figures {
  double k = 0.0;
  double delta = 0.0;
  double mag_db = -std::numeric_limits<double>::infinity();
};

Figures figures(const Eigen::Matrix2cd& s) {
  const cplx d = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  Figures f;
  f.delta = std::abs(d);
  const double s12 = std::abs(s(0, 1)), s21 = std::abs(s(1, 0));
  f.k = (1.0 - std::norm(s(0, 0)) - std::norm(s(1, 1)) + std::norm(d)) / (2.0 * s12 * s21);
  if (f.k >= 1.0) f.mag_db = 10.0 * std::log10(s21 / s12 * (f.k - std::sqrt(f.k * f.k - 1.0)));
  return f;
}

// Source and load reflections of the simultaneous conjugate match.
std::pair<cplx, cplx> conjugate_match(const Eigen::Matrix2cd& s) {
  const cplx d = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  auto solve = [&](cplx sa, cplx sb) {
    const double b = 1.0 + std::norm(sa) - std::norm(sb) - std::norm(d);
    const cplx c = sa - d * std::conj(sb);
    const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * std::norm(c)));
    return (b - (b >= 0 ? 1.0 : -1.0) * disc) / (2.0 * c);
  };
  return {solve(s(0, 0), s(1, 1)), solve(s(1, 1), s(0, 0))};
}

}  // namespace

Netlist build_cs_stage(const StageSpec& spec) {
  if (spec.topology != StageTopology::CommonSource) throw InvalidArgument("build_cs_stage needs a common-source spec");
  return stage_netlist(spec, true);
}

Netlist build_cascode_stage(const StageSpec& spec) {
  if (spec.topology != StageTopology::Cascode) throw InvalidArgument("build_cascode_stage needs a cascode spec");
  return stage_netlist(spec, true);
}

Netlist build_stage(const StageSpec& spec) { return stage_netlist(spec, true); }
Netlist build_stage_core(const StageSpec& spec) { return stage_netlist(spec, false); }

StageSpec design_stage(StageTopology topology, device::AmpClass cls, double f0, const device::PhemtParams& dev,
                       const StageDesignOptions& opt) {
  StageSpec s;
  s.topology = topology;
  s.device = dev;
  s.amp_class = cls;
  s.f0 = f0;
  const auto table = device::dc_iv_sweep(dev, device::default_vgs_sweep(), {opt.v_ds});
  s.bias = device::bias_select(table, cls, opt.v_ds);
  if (topology == StageTopology::Cascode) {
    s.v_dd = 2.0 * opt.v_ds;
    s.v_cg = opt.v_ds + s.bias.v_gs;
    s.bias_cap = kBiasCap90GHz * 90e9 / f0;
  } else {
    s.v_dd = opt.v_ds;
  }

  // Stabilization: RF shunt resistor pair with K >= k_min and |Delta| < 1.
  // Among those, MAG is steered toward max_gain_db from below; candidates within
  // 0.5 dB of the best prefer the lower-Q conjugate terminations.
  std::vector<double> rs{0.0};
  for (int i = 0; i <= 24; ++i) rs.push_back(std::pow(10.0, 1.0 + 3.0 * i / 24.0));
  struct Cand {
    double rg, rd, score, q;
  };
  std::vector<Cand> ok;
  for (double rg : rs)
    for (double rd : rs) {
      s.r_stab_gate = rg;
      s.r_stab_drain = rd;
      const auto sm = core_s(s);
      const Figures f = figures(sm);
      if (!(f.k >= opt.k_min && f.delta < 1.0)) continue;
      const auto [gs, gl] = conjugate_match(sm);
      const double q = std::max(match::nodal_q(s.z0 * (1.0 + gs) / (1.0 - gs)),
                                match::nodal_q(s.z0 * (1.0 + gl) / (1.0 - gl)));
      const double over = std::max(0.0, f.mag_db - opt.max_gain_db);
      ok.push_back({rg, rd, f.mag_db - 2.0 * over, q});
    }
  if (ok.empty()) throw AnalysisError(fmt::format("no stabilization resistor reaches K >= {} at {} Hz", opt.k_min, f0));
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : ok) top = std::max(top, c.score);
  const Cand* pick = nullptr;
  for (const auto& c : ok)
    if (c.score >= top - 0.5 && (!pick || c.q < pick->q)) pick = &c;
  s.r_stab_gate = pick->rg;
  s.r_stab_drain = pick->rd;

  const Eigen::Matrix2cd sm = core_s(s);
  const auto [gs, gl] = conjugate_match(sm);
  match::SynthesisOptions mo;
  mo.q_max = opt.q_max;
  auto z_of = [&](cplx g) { return s.z0 * (1.0 + g) / (1.0 - g); };
  s.input_match = match::synthesize(std::conj(z_of(gs)), s.z0, f0, mo);
  if (!opt.power_match) {
    s.output_match = match::synthesize(std::conj(z_of(gl)), s.z0, f0, mo);
    return s;
  }

  // Output power match: load pull of the input-matched stage, driven about
  // 3 dB past a class-A saturation estimate.
  const double i_max = table.ids.col(0).maxCoeff();
  const double swing = (topology == StageTopology::Cascode ? s.v_dd : opt.v_ds) - 1.0;
  const double p_sat = 0.5 * 0.5 * i_max * swing;
  const double drive = 10.0 * std::log10(p_sat / 1e-3) - std::min(top, opt.max_gain_db) + 3.0;
  Netlist lp = stage_netlist(s, false);
  {
    Netlist with_in;
    with_in.title = lp.title;
    with_in.f0 = lp.f0;
    with_in.models = lp.models;
    for (const auto& e : lp.elements)
      if (e.id == "P1")
        with_in.add("P1", circuit::ElementKind::PORT, {"src", "0"}, e.params);
      else
        with_in.add(e.id, e.kind, e.nodes, e.params, e.model);
    add_match(with_in, *s.input_match, "MI", "in", "src");
    lp = std::move(with_in);
  }
  const auto pull = load_pull(lp, gamma_grid(opt.loadpull_grid), f0, drive, Objective::Pout);
  const cplx z_opt = pull.optimum_z;
  s.output_match = match::synthesize(std::conj(z_opt), s.z0, f0, mo);
  const cplx gamma_l = (z_opt - s.z0) / (z_opt + s.z0);
  const cplx gamma_in = sm(0, 0) + sm(0, 1) * sm(1, 0) * gamma_l / (1.0 - sm(1, 1) * gamma_l);
  s.input_match = match::synthesize(z_of(gamma_in), s.z0, f0, mo);
  return s;
}

Netlist build_wilkinson(const elements::WilkinsonSpec& spec) {
  spec.validate();
  Netlist n;
  n.title = "Wilkinson divider";
  n.f0 = spec.f0;
  n.add("P1", ElementKind::PORT, {"c", "0"}, {{"z", spec.z0}, {"rf", 1}});
  n.add("P2", ElementKind::PORT, {"a", "0"}, {{"z", spec.z0}});
  n.add("P3", ElementKind::PORT, {"b", "0"}, {{"z", spec.z0}});
  const std::map<std::string, double> tl{{"z", spec.branch_z}, {"deg", spec.branch_length}, {"f", spec.f0}};
  n.add("TA", ElementKind::TL, {"c", "a"}, tl);
  n.add("TB", ElementKind::TL, {"c", "b"}, tl);
  n.add("RI", ElementKind::R, {"a", "b"}, {{"r", spec.r_iso}});
  return n;
}

void instantiate(Netlist& target, const Netlist& fragment, const std::string& prefix,
                 const std::vector<std::string>& port_nodes) {
  std::map<std::string, std::string> rename;
  std::size_t pi = 0;
  for (const auto& e : fragment.elements) {
    if (e.kind != ElementKind::PORT) continue;
    if (pi >= port_nodes.size())
      throw InvalidArgument(fmt::format("fragment {} has more ports than connections ({})", prefix, port_nodes.size()));
    if (e.nodes[1] != "0") throw InvalidArgument(fmt::format("fragment {} port {} is not ground-referenced", prefix, e.id));
    rename[e.nodes[0]] = port_nodes[pi++];
  }
  if (pi != port_nodes.size())
    throw InvalidArgument(fmt::format("fragment {} has {} ports, {} connections given", prefix, pi, port_nodes.size()));
  auto map_node = [&](const std::string& node) {
    if (node == "0") return node;
    if (auto it = rename.find(node); it != rename.end()) return it->second;
    return prefix + "." + node;
  };
  for (const auto& [name, p] : fragment.models) target.models[prefix + "." + name] = p;
  for (const auto& e : fragment.elements) {
    if (e.kind == ElementKind::PORT) continue;
    std::vector<std::string> nodes;
    for (const auto& node : e.nodes) nodes.push_back(map_node(node));
    target.add(prefix + "." + e.id, e.kind, nodes, e.params, e.model.empty() ? e.model : prefix + "." + e.model);
  }
}

PaDesign design_pa(double f0, const device::PhemtParams& dev, const StageDesignOptions& opt) {
  PaDesign d;
  d.f0 = f0;
  d.driver1 = design_stage(StageTopology::CommonSource, device::AmpClass::AB, f0, dev, opt);
  d.driver2 = d.driver1;
  d.power = design_stage(StageTopology::Cascode, device::AmpClass::A, f0, dev, opt);
  d.divider = elements::wilkinson_synthesize(d.driver1.z0, f0);
  d.combiner = d.divider;
  return d;
}

Netlist build_pa(const PaDesign& d, Branches branches) {
  return build_pa(d.driver1, d.driver2, d.power, d.divider, d.combiner, branches);
}

Netlist build_pa(const StageSpec& driver1, const StageSpec& driver2, const StageSpec& power,
                 const elements::WilkinsonSpec& divider, const elements::WilkinsonSpec& combiner, Branches branches) {
  const double z0 = driver1.z0;
  if (driver2.z0 != z0 || power.z0 != z0 || divider.z0 != z0 || combiner.z0 != z0)
    throw InvalidArgument("all PA fragments must share one reference impedance");
  Netlist n;
  n.title = fmt::format("3-stage 2-way PA at {:g} GHz", driver1.f0 * 1e-9);
  n.f0 = driver1.f0;
  n.add("P1", ElementKind::PORT, {"in", "0"}, {{"z", z0}, {"rf", 1}});
  n.add("P2", ElementKind::PORT, {"out", "0"}, {{"z", z0}});
  instantiate(n, build_stage(driver1), "D1", {"in", "n1"});
  instantiate(n, build_stage(driver2), "D2", {"n1", "n2"});
  instantiate(n, build_wilkinson(divider), "WD", {"n2", "a1", "a2"});
  switch (branches) {
    case Branches::Both:
      instantiate(n, build_stage(power), "PA", {"a1", "b1"});
      instantiate(n, build_stage(power), "PB", {"a2", "b2"});
      instantiate(n, build_wilkinson(combiner), "WC", {"out", "b1", "b2"});
      break;
    case Branches::Single:
      instantiate(n, build_stage(power), "PA", {"a1", "out"});
      n.add("RT", ElementKind::R, {"a2", "0"}, {{"r", z0}});
      break;
    case Branches::Through: {
      instantiate(n, build_wilkinson(combiner), "WC", {"out", "b1", "b2"});
      // Zero-length z0 lines stand in for the power stages.
      const std::map<std::string, double> thru{{"z", z0}, {"deg", 1e-9}, {"f", driver1.f0}};
      n.add("TA", ElementKind::TL, {"a1", "b1"}, thru);
      n.add("TB", ElementKind::TL, {"a2", "b2"}, thru);
      break;
    }
  }
  n.validate();
  return n;
}

}  // namespace mmpa::pa
