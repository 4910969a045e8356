#pragma once

// Netlist text format.
//
//   # comment (also after any token)
//   .title <text>
//   .temp <K>
//   .f0 <Hz>
//   .model <name> <field=value...>     pHEMT parameter set
//   .include <path>                    file of .model/.include lines,
//                                      relative to the including file
//   <id> <KIND> <nodes...> <key=value...>
//
// FET elements name their parameter set with model=<name>. Keywords and
// kinds are case-insensitive, ids and node names are not.

#include <string>
#include <string_view>

#include "mmpa/netlist.hpp"

namespace mmpa::io {

using circuit::Netlist;

// Throws ParseError with file and line for syntax errors, duplicate ids,
// undefined nodes or models, a missing ground and more than one RF port.
Netlist parse_netlist(std::string_view text, const std::string& source = "<input>",
                      const std::string& base_dir = ".");
Netlist read_netlist(const std::string& path);

// Round-trips through parse_netlist: models are written inline.
std::string serialize_netlist(const Netlist& n);

// Same elements, models and metadata; source lines are ignored.
bool structurally_equal(const Netlist& a, const Netlist& b);

// Parameter names accepted by .model, in declaration order.
const std::vector<std::string>& model_fields();

}  // namespace mmpa::io
