#pragma once

// In-memory netlist: elements on named nodes, device models, metadata.
// Text parsing and serialization live in mmpa/netlist_io.hpp.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmpa/device.hpp"

namespace mmpa::circuit {

inline constexpr const char* kGround = "0";

enum class ElementKind { R, L, C, TL, OSTUB, SSTUB, FET, NLG, VDC, FEED, BLOCK, PORT };

const char* keyword(ElementKind k) noexcept;
std::optional<ElementKind> kind_from_keyword(std::string_view word) noexcept;
std::size_t terminal_count(ElementKind k) noexcept;

struct Element {
  std::string id;
  ElementKind kind = ElementKind::R;
  std::vector<std::string> nodes;
  std::map<std::string, double> params;
  std::string model;  // FET only
  int line = 0;       // source line, 0 when built programmatically

  bool has(const std::string& key) const { return params.count(key) != 0; }
  // Throws ParseError (with the element's line) when missing.
  double get(const std::string& key) const;
  double get_or(const std::string& key, double fallback) const;
};

struct Netlist {
  std::string title;
  double temperature = 300.0;  // K, metadata only
  std::optional<double> f0;    // Hz, default analysis frequency
  std::vector<Element> elements;
  std::map<std::string, device::PhemtParams> models;
  std::string source;          // file name used in diagnostics

  Element& add(std::string id, ElementKind kind, std::vector<std::string> nodes,
               std::map<std::string, double> params = {}, std::string model = {});

  const Element* find(std::string_view id) const;
  Element* find(std::string_view id);
  std::size_t count(ElementKind k) const;
  std::set<std::string> nodes() const;

  // Indices into `elements` of the PORT elements, in order of appearance.
  std::vector<std::size_t> ports() const;
  std::optional<std::size_t> rf_port() const;

  // Throws ParseError with line numbers on the first violated invariant:
  // arity, parameters, duplicate ids, undefined models, missing ground,
  // dangling nodes, more than one RF port.
  void validate() const;
};

}  // namespace mmpa::circuit
