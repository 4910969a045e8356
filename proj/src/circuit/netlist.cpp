#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/netlist.hpp"

namespace mmpa::circuit {

namespace {

struct KindInfo {
  ElementKind kind;
  const char* word;
  std::size_t terminals;
  std::vector<std::string> required;  // must be present and > 0
  std::vector<std::string> optional;
};

const std::vector<KindInfo>& kind_table() {
  static const std::vector<KindInfo> t = {
      {ElementKind::R, "R", 2, {"r"}, {}},
      {ElementKind::L, "L", 2, {"l"}, {}},
      {ElementKind::C, "C", 2, {"c"}, {}},
      {ElementKind::TL, "TL", 2, {"z", "deg", "f"}, {"loss", "eeff"}},
      {ElementKind::OSTUB, "OSTUB", 1, {"z", "deg", "f"}, {}},
      {ElementKind::SSTUB, "SSTUB", 1, {"z", "deg", "f"}, {}},
      {ElementKind::FET, "FET", 3, {}, {"w", "nf"}},
      {ElementKind::NLG, "NLG", 2, {}, {"g1", "g3"}},
      {ElementKind::VDC, "VDC", 2, {}, {"v"}},
      {ElementKind::FEED, "FEED", 2, {}, {}},
      {ElementKind::BLOCK, "BLOCK", 2, {}, {}},
      {ElementKind::PORT, "PORT", 2, {}, {"z", "rf"}},
  };
  return t;
}

const KindInfo& info(ElementKind k) {
  for (const auto& i : kind_table())
    if (i.kind == k) return i;
  throw Error("unknown element kind");
}

}  // namespace

const char* keyword(ElementKind k) noexcept {
  for (const auto& i : kind_table())
    if (i.kind == k) return i.word;
  return "?";
}

std::optional<ElementKind> kind_from_keyword(std::string_view word) noexcept {
  std::string up(word);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto& i : kind_table())
    if (up == i.word) return i.kind;
  return std::nullopt;
}

std::size_t terminal_count(ElementKind k) noexcept {
  for (const auto& i : kind_table())
    if (i.kind == k) return i.terminals;
  return 0;
}

double Element::get(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw ParseError(fmt::format("element '{}' is missing parameter '{}'", id, key), {}, line);
  return it->second;
}

double Element::get_or(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Element& Netlist::add(std::string id, ElementKind kind, std::vector<std::string> nodes,
                      std::map<std::string, double> params, std::string model) {
  Element e;
  e.id = std::move(id);
  e.kind = kind;
  e.nodes = std::move(nodes);
  e.params = std::move(params);
  e.model = std::move(model);
  elements.push_back(std::move(e));
  return elements.back();
}

const Element* Netlist::find(std::string_view id) const {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

Element* Netlist::find(std::string_view id) {
  for (auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

std::size_t Netlist::count(ElementKind k) const {
  return static_cast<std::size_t>(std::count_if(elements.begin(), elements.end(), [&](const Element& e) { return e.kind == k; }));
}

std::set<std::string> Netlist::nodes() const {
  std::set<std::string> s;
  for (const auto& e : elements) s.insert(e.nodes.begin(), e.nodes.end());
  return s;
}

std::vector<std::size_t> Netlist::ports() const {
  std::vector<std::size_t> p;
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].kind == ElementKind::PORT) p.push_back(i);
  return p;
}

std::optional<std::size_t> Netlist::rf_port() const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].kind == ElementKind::PORT && elements[i].get_or("rf", 0.0) != 0.0) return i;
  return std::nullopt;
}

void Netlist::validate() const {
  auto err = [&](const std::string& what, int line) { return ParseError(what, source, line); };

  std::unordered_map<std::string, const Element*> seen;
  std::map<std::string, int> connections;
  std::map<std::string, int> first_line;
  const Element* rf = nullptr;
  bool has_ground = false;

  for (const auto& e : elements) {
    if (e.id.empty()) throw err("element with empty id", e.line);
    if (auto [it, inserted] = seen.emplace(e.id, &e); !inserted)
      throw err(fmt::format("duplicate element id '{}' (first defined on line {}, again on line {})", e.id,
                            it->second->line, e.line),
                e.line);
    const auto& ki = info(e.kind);
    if (e.nodes.size() != ki.terminals)
      throw err(fmt::format("{} '{}' needs {} node(s), got {}", ki.word, e.id, ki.terminals, e.nodes.size()), e.line);
    for (const auto& [k, v] : e.params) {
      const bool known = std::find(ki.required.begin(), ki.required.end(), k) != ki.required.end() ||
                         std::find(ki.optional.begin(), ki.optional.end(), k) != ki.optional.end();
      if (!known) throw err(fmt::format("{} '{}': unknown parameter '{}'", ki.word, e.id, k), e.line);
      if (!std::isfinite(v)) throw err(fmt::format("{} '{}': parameter '{}' is not finite", ki.word, e.id, k), e.line);
    }
    for (const auto& k : ki.required) {
      if (!e.has(k)) throw err(fmt::format("{} '{}' is missing parameter '{}'", ki.word, e.id, k), e.line);
      if (!(e.get(k) > 0.0)) throw err(fmt::format("{} '{}': parameter '{}' must be > 0", ki.word, e.id, k), e.line);
    }
    switch (e.kind) {
      case ElementKind::FET:
        if (e.model.empty()) throw err(fmt::format("FET '{}' has no model=", e.id), e.line);
        if (!models.count(e.model)) throw err(fmt::format("FET '{}': undefined model '{}'", e.id, e.model), e.line);
        if (e.has("w") && !(e.get("w") > 0.0)) throw err(fmt::format("FET '{}': w must be > 0", e.id), e.line);
        if (e.has("nf") && !(e.get("nf") >= 1.0)) throw err(fmt::format("FET '{}': nf must be >= 1", e.id), e.line);
        break;
      case ElementKind::PORT:
        if (e.has("z") && !(e.get("z") > 0.0)) throw err(fmt::format("PORT '{}': z must be > 0", e.id), e.line);
        if (e.nodes[0] == e.nodes[1]) throw err(fmt::format("PORT '{}' connects a node to itself", e.id), e.line);
        if (e.get_or("rf", 0.0) != 0.0) {
          if (rf)
            throw err(fmt::format("more than one RF source port ('{}' on line {} and '{}' on line {})", rf->id,
                                  rf->line, e.id, e.line),
                      e.line);
          rf = &e;
        }
        break;
      case ElementKind::TL:
        if (e.has("loss") && !(e.get("loss") >= 0.0)) throw err(fmt::format("TL '{}': negative loss", e.id), e.line);
        if (e.has("eeff") && !(e.get("eeff") >= 1.0)) throw err(fmt::format("TL '{}': eeff must be >= 1", e.id), e.line);
        break;
      default: break;
    }
    if (!e.model.empty() && e.kind != ElementKind::FET)
      throw err(fmt::format("{} '{}': model= only applies to FET", ki.word, e.id), e.line);
    for (const auto& n : e.nodes) {
      if (n.empty()) throw err(fmt::format("element '{}' has an empty node name", e.id), e.line);
      if (n == kGround) has_ground = true;
      ++connections[n];
      first_line.emplace(n, e.line);
    }
  }
  for (const auto& [name, m] : models) {
    try {
      m.validate();
    } catch (const InvalidArgument& ex) {
      throw err(fmt::format("model '{}': {}", name, ex.what()), 0);
    }
  }
  if (!elements.empty() && !has_ground) throw err("no ground node '0'", 0);
  for (const auto& [n, c] : connections)
    if (c < 2 && n != kGround)
      throw err(fmt::format("node '{}' has a single connection (undefined or dangling node)", n), first_line[n]);
}

}  // namespace mmpa::circuit
