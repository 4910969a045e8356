#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/io.hpp"
#include "mmpa/netlist_io.hpp"

namespace mmpa::io {

namespace fs = std::filesystem;
using circuit::Element;
using circuit::ElementKind;

namespace {

struct Field {
  const char* name;
  double device::PhemtParams::*member;
};

const std::vector<Field>& fields() {
  using P = device::PhemtParams;
  static const std::vector<Field> f = {
      {"i_pk", &P::i_pk},   {"v_pk", &P::v_pk}, {"p1", &P::p1},   {"alpha", &P::alpha},
      {"lambda", &P::lambda_mod}, {"c_gs", &P::c_gs}, {"c_gd", &P::c_gd}, {"c_ds", &P::c_ds},
      {"r_g", &P::r_g},     {"r_d", &P::r_d},   {"r_s", &P::r_s}, {"unit_width", &P::unit_width},
  };
  return f;
}

std::string lower(std::string_view s) {
  std::string r(s);
  for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> t;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) t.push_back(line.substr(start, i - start));
  }
  return t;
}

class Parser {
 public:
  explicit Parser(Netlist& n) : n_(n) {}

  void parse(std::string_view text, const std::string& source, const fs::path& base, bool top, int depth) {
    if (depth > 16) throw ParseError("include nesting too deep", source, 0);
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      line = strip_comment(line);
      const auto tok = tokens(line);
      if (tok.empty()) {
        if (end == text.size()) break;
        continue;
      }
      auto err = [&](const std::string& what) { return ParseError(what, source, line_no); };
      if (tok[0].front() == '.')
        directive(tok, line, source, base, top, depth, line_no);
      else if (!top)
        throw err("only .model and .include lines are allowed in an included file");
      else
        element(tok, source, line_no);
      if (end == text.size()) break;
    }
  }

 private:
  static double number(std::string_view s, const std::string& source, int line, std::string_view what) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
      throw ParseError(fmt::format("{}: '{}' is not a number", what, s), source, line);
    return v;
  }

  static std::pair<std::string, std::string_view> key_value(std::string_view t, const std::string& source, int line) {
    const auto eq = t.find('=');
    if (eq == 0 || eq == t.size() - 1)
      throw ParseError(fmt::format("malformed parameter '{}'", t), source, line);
    return {lower(t.substr(0, eq)), t.substr(eq + 1)};
  }

  void directive(const std::vector<std::string_view>& tok, std::string_view line, const std::string& source,
                 const fs::path& base, bool top, int depth, int line_no) {
    auto err = [&](const std::string& what) { return ParseError(what, source, line_no); };
    const std::string d = lower(tok[0]);
    if (d == ".model") {
      if (tok.size() < 2 || tok[1].find('=') != std::string_view::npos) throw err(".model needs a name");
      const std::string name(tok[1]);
      if (n_.models.count(name)) throw err(fmt::format("model '{}' defined twice", name));
      device::PhemtParams p = device::default_phemt();
      for (std::size_t i = 2; i < tok.size(); ++i) {
        if (tok[i].find('=') == std::string_view::npos) throw err(fmt::format("expected key=value, got '{}'", tok[i]));
        const auto [k, v] = key_value(tok[i], source, line_no);
        const double x = number(v, source, line_no, k);
        if (k == "n_fingers") {
          if (x != std::floor(x) || x < 1) throw err("n_fingers must be a positive integer");
          p.n_fingers = static_cast<int>(x);
          continue;
        }
        bool found = false;
        for (const auto& f : fields())
          if (k == f.name) {
            p.*f.member = x;
            found = true;
          }
        if (!found) throw err(fmt::format("model '{}': unknown field '{}'", name, k));
      }
      try {
        p.validate();
      } catch (const InvalidArgument& e) {
        throw err(fmt::format("model '{}': {}", name, e.what()));
      }
      n_.models.emplace(name, p);
      return;
    }
    if (d == ".include") {
      if (tok.size() != 2) throw err(".include takes one path");
      fs::path p(tok[1]);
      if (p.is_relative()) p = base / p;
      std::ifstream in(p, std::ios::binary);
      if (!in) throw err(fmt::format("cannot open include file '{}'", p.string()));
      std::stringstream ss;
      ss << in.rdbuf();
      parse(ss.str(), p.string(), p.parent_path(), false, depth + 1);
      return;
    }
    if (!top) throw err(fmt::format("{} is not allowed in an included file", tok[0]));
    if (d == ".title") {
      const auto at = line.find(tok[0]) + tok[0].size();
      auto rest = line.substr(at);
      while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
      while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.remove_suffix(1);
      n_.title = std::string(rest);
      return;
    }
    if (d == ".temp" || d == ".f0") {
      if (tok.size() != 2) throw err(fmt::format("{} takes one value", d));
      const double v = number(tok[1], source, line_no, d);
      if (!(v > 0.0)) throw err(fmt::format("{} must be > 0", d));
      (d == ".temp" ? n_.temperature : n_.f0.emplace()) = v;
      return;
    }
    throw err(fmt::format("unknown directive '{}'", tok[0]));
  }

  void element(const std::vector<std::string_view>& tok, const std::string& source, int line_no) {
    auto err = [&](const std::string& what) { return ParseError(what, source, line_no); };
    if (tok.size() < 2) throw err(fmt::format("'{}': missing element kind", tok[0]));
    if (tok[0].find('=') != std::string_view::npos) throw err(fmt::format("expected an element id, got '{}'", tok[0]));
    const auto kind = circuit::kind_from_keyword(tok[1]);
    if (!kind) throw err(fmt::format("'{}': unknown element kind '{}'", tok[0], tok[1]));
    Element e;
    e.id = std::string(tok[0]);
    e.kind = *kind;
    e.line = line_no;
    std::size_t i = 2;
    for (; i < tok.size() && tok[i].find('=') == std::string_view::npos; ++i) e.nodes.emplace_back(tok[i]);
    for (; i < tok.size(); ++i) {
      if (tok[i].find('=') == std::string_view::npos)
        throw err(fmt::format("'{}': node '{}' after parameters", e.id, tok[i]));
      const auto [k, v] = key_value(tok[i], source, line_no);
      if (k == "model") {
        e.model = std::string(v);
        continue;
      }
      if (!e.params.emplace(k, number(v, source, line_no, k)).second)
        throw err(fmt::format("'{}': parameter '{}' given twice", e.id, k));
    }
    n_.elements.push_back(std::move(e));
  }

  Netlist& n_;
};

std::string num(double v) { return fmt::format("{}", v); }  // shortest round-trip form

}  // namespace

const std::vector<std::string>& model_fields() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& f : fields()) v.emplace_back(f.name);
    v.emplace_back("n_fingers");
    return v;
  }();
  return names;
}

Netlist parse_netlist(std::string_view text, const std::string& source, const std::string& base_dir) {
  Netlist n;
  n.source = source;
  Parser(n).parse(text, source, base_dir, true, 0);
  n.validate();
  return n;
}

Netlist read_netlist(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return parse_netlist(text, path, fs::path(path).parent_path().string());
}

std::string serialize_netlist(const Netlist& n) {
  std::string s;
  if (!n.title.empty()) {
    std::string t = n.title;
    for (auto& c : t)
      if (c == '\n' || c == '\r' || c == '#') c = ' ';
    s += ".title " + t + "\n";
  }
  s += ".temp " + num(n.temperature) + "\n";
  if (n.f0) s += ".f0 " + num(*n.f0) + "\n";
  for (const auto& [name, p] : n.models) {
    s += ".model " + name;
    for (const auto& f : fields()) s += fmt::format(" {}={}", f.name, num(p.*f.member));
    s += fmt::format(" n_fingers={}\n", p.n_fingers);
  }
  for (const auto& e : n.elements) {
    s += e.id + " " + circuit::keyword(e.kind);
    for (const auto& node : e.nodes) s += " " + node;
    for (const auto& [k, v] : e.params) s += " " + k + "=" + num(v);
    if (!e.model.empty()) s += " model=" + e.model;
    s += "\n";
  }
  return s;
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
  if (a.title != b.title || a.temperature != b.temperature || a.f0 != b.f0) return false;
  if (a.elements.size() != b.elements.size() || a.models.size() != b.models.size()) return false;
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    const auto &x = a.elements[i], &y = b.elements[i];
    if (x.id != y.id || x.kind != y.kind || x.nodes != y.nodes || x.params != y.params || x.model != y.model)
      return false;
  }
  for (auto ia = a.models.begin(), ib = b.models.begin(); ia != a.models.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.n_fingers != ib->second.n_fingers) return false;
    for (const auto& f : fields())
      if (ia->second.*f.member != ib->second.*f.member) return false;
  }
  return true;
}

}  // namespace mmpa::io
