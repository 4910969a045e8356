#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/io.hpp"

namespace mmpa::io {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}': {}", tmp.string(), std::strerror(errno)));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(fmt::format("write to '{}' failed", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(fmt::format("cannot rename onto '{}': {}", path, ec.message()));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- Touchstone -------------------------------------------------------------

namespace {

std::string sci(double v) { return fmt::format("{:.8e}", v); }

// Position of S(row, col) within a frequency block as written by v1:
// two-port files are column-major (11 21 12 22), others row-major.
std::pair<int, int> entry(int n, int idx) {
  if (n == 2) return {idx % 2, idx / 2};
  return {idx / n, idx % n};
}

}  // namespace

std::string touchstone_string(const rf::NPortNetwork& in) {
  const int n = in.ports();
  if (n < 1 || n > 4) throw InvalidArgument(fmt::format("Touchstone export supports 1 to 4 ports, got {}", n));
  const auto net = in.representation() == rf::Representation::S ? in : rf::convert(in, rf::Representation::S);
  std::string s = fmt::format("! {}-port S parameters\n# GHz S RI R {}\n", n, fmt::format("{:.15g}", net.z_ref()));
  const int per_line = n == 2 ? 4 : std::min(n, 4);
  for (std::size_t fi = 0; fi < net.size(); ++fi) {
    s += fmt::format("{:.15g}", net.grid()[fi] / 1e9);
    for (int idx = 0; idx < n * n; ++idx) {
      if (idx > 0 && idx % per_line == 0) s += "\n";
      const auto [r, c] = entry(n, idx);
      const auto v = net(fi, r, c);
      s += " " + sci(v.real()) + " " + sci(v.imag());
    }
    s += "\n";
  }
  return s;
}

void write_touchstone(const rf::NPortNetwork& net, const std::string& path) {
  write_file_atomic(path, touchstone_string(net));
}

TouchstoneData parse_touchstone(std::string_view text, int n, const std::string& source) {
  if (n < 1 || n > 4) throw ParseError(fmt::format("unsupported port count {}", n), source);
  std::vector<std::string> warnings;
  double scale = 1e9, z_ref = 50.0;
  std::string format = "MA";
  bool have_options = false;

  std::vector<double> values;
  std::vector<int> value_line;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto err = [&](const std::string& what) { return ParseError(what, source, line_no); };
    if (auto bang = line.find('!'); bang != std::string::npos) line.resize(bang);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok[0] == '#') {
      if (have_options) {
        warnings.push_back(fmt::format("line {}: extra option line ignored", line_no));
        continue;
      }
      have_options = true;
      std::vector<std::string> opts;
      if (tok.size() > 1) opts.push_back(tok.substr(1));
      while (ls >> tok) opts.push_back(tok);
      for (std::size_t i = 0; i < opts.size(); ++i) {
        std::string o = opts[i];
        for (auto& c : o) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (o == "HZ") scale = 1.0;
        else if (o == "KHZ") scale = 1e3;
        else if (o == "MHZ") scale = 1e6;
        else if (o == "GHZ") scale = 1e9;
        else if (o == "S") {
        } else if (o == "Y" || o == "Z" || o == "G" || o == "H")
          throw err(fmt::format("{} parameters are not supported", o));
        else if (o == "RI" || o == "MA" || o == "DB") format = o;
        else if (o == "R") {
          if (i + 1 >= opts.size()) throw err("option R needs a value");
          try {
            std::size_t used = 0;
            z_ref = std::stod(opts[i + 1], &used);
            if (used != opts[i + 1].size()) throw std::invalid_argument("trailing");
          } catch (const std::exception&) {
            throw err(fmt::format("bad reference impedance '{}'", opts[i + 1]));
          }
          if (!(z_ref > 0.0)) throw err("reference impedance must be > 0");
          ++i;
        } else
          throw err(fmt::format("unknown option '{}'", opts[i]));
      }
      continue;
    }
    if (!have_options && values.empty()) warnings.push_back("no option line; assuming # GHz S MA R 50");
    do {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(v)) throw err(fmt::format("bad number '{}'", tok));
      values.push_back(v);
      value_line.push_back(line_no);
    } while (ls >> tok);
  }

  const std::size_t block = 1 + 2 * static_cast<std::size_t>(n * n);
  if (values.empty()) throw ParseError("no data", source, line_no);
  if (values.size() % block != 0)
    throw ParseError(fmt::format("incomplete frequency block ({} values, blocks of {})", values.size(), block), source,
                     value_line.back());
  std::vector<double> freq;
  std::vector<rf::CMatrix> data;
  for (std::size_t b = 0; b * block < values.size(); ++b) {
    const double* v = values.data() + b * block;
    const int ln = value_line[b * block];
    const double f = v[0] * scale;
    if (!(f > 0.0)) throw ParseError("frequency must be > 0", source, ln);
    if (!freq.empty() && !(f > freq.back()))
      throw ParseError(fmt::format("frequencies must be strictly ascending ({} after {})", v[0], freq.back() / scale),
                       source, ln);
    freq.push_back(f);
    rf::CMatrix m(n, n);
    for (int idx = 0; idx < n * n; ++idx) {
      const double a = v[1 + 2 * idx], c = v[2 + 2 * idx];
      rf::cplx x;
      if (format == "RI") x = {a, c};
      else if (format == "MA") x = std::polar(a, c * M_PI / 180.0);
      else x = std::polar(std::pow(10.0, a / 20.0), c * M_PI / 180.0);
      const auto [r, col] = entry(n, idx);
      m(r, col) = x;
    }
    data.push_back(std::move(m));
  }
  return {rf::NPortNetwork(rf::FrequencyGrid(std::move(freq)), n, rf::Representation::S, std::move(data), z_ref),
          std::move(warnings)};
}

TouchstoneData read_touchstone(const std::string& path) {
  static const std::regex ext(R"(\.s([1-4])p$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(path, m, ext))
    throw ParseError("cannot infer the port count: expected a .s1p to .s4p extension", path);
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ParseError(e.what(), path);
  }
  return parse_touchstone(text, std::stoi(m[1].str()), path);
}

// --- CSV --------------------------------------------------------------------

namespace {

std::string g(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

std::string csv_string(const pa::PowerSweepResult& r) {
  std::string s = "p_in_dbm,p_out_dbm,gain_db,p_dc_w,pae_pct,drain_eff_pct\n";
  for (const auto& row : r.rows)
    s += fmt::format("{},{},{},{},{},{}\n", g(row.p_in_dbm), g(row.p_out_dbm), g(row.gain_db), g(row.p_dc_w),
                     g(row.pae), g(row.drain_eff));
  return s;
}

std::string csv_string(const pa::LoadPullResult& r) {
  std::string s = "gamma_re,gamma_im,z_re_ohm,z_im_ohm,converged,p_out_dbm,pae_pct,optimum\n";
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const auto& c = r.cells[i];
    s += fmt::format("{},{},{},{},{},{},{},{}\n", g(c.gamma.real()), g(c.gamma.imag()), g(c.z.real()), g(c.z.imag()),
                     c.converged ? 1 : 0, c.converged ? g(c.p_out_dbm) : "", c.converged ? g(c.pae) : "",
                     i == r.optimum ? 1 : 0);
  }
  return s;
}

std::string csv_string(const pa::MonteCarloReport& r) {
  std::string s = "metric,min_db,max_db,std_dev_db,success_count,n_trials,success_rate_pct\n";
  for (const auto& m : r.metrics)
    s += fmt::format("{},{},{},{},{},{},{}\n", m.name, g(m.min), g(m.max), g(m.std_dev), m.success_count, m.n_trials,
                     g(m.success_rate));
  return s;
}

std::string trials_csv_string(const pa::MonteCarloReport& r) {
  std::string s = "trial,ok,s11_db,s21_db,s22_db\n";
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const auto& t = r.trials[i];
    s += fmt::format("{},{},{},{},{}\n", i, t.ok ? 1 : 0, g(t.s11_db), g(t.s21_db), g(t.s22_db));
  }
  return s;
}

std::string loci_csv_string(const match::MatchingNetwork& net, const match::LociReport& loci) {
  std::string s = "step,element,z_re_ohm,z_im_ohm,nodal_q\n";
  for (std::size_t i = 0; i < loci.trajectory.size(); ++i) {
    const char* what = i == 0 ? "termination" : match::to_string(net.elements.at(i - 1).kind);
    s += fmt::format("{},{},{},{},{}\n", i, what, g(loci.trajectory[i].real()), g(loci.trajectory[i].imag()),
                     g(loci.nodal_q[i]));
  }
  return s;
}

std::string iv_csv_string(const device::IvTable& t) {
  std::string s = "v_gs_v,v_ds_v,i_ds_a\n";
  for (std::size_t r = 0; r < t.v_gs.size(); ++r)
    for (std::size_t c = 0; c < t.v_ds.size(); ++c)
      s += fmt::format("{},{},{}\n", g(t.v_gs[r]), g(t.v_ds[c]), g(t.ids(static_cast<Eigen::Index>(r),
                                                                          static_cast<Eigen::Index>(c))));
  return s;
}

}  // namespace mmpa::io
