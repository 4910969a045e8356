#pragma once

// Touchstone v1 and CSV output. Every file is written once, through a
// temporary in the same directory that is renamed over the target.

#include <string>
#include <string_view>
#include <vector>

#include "mmpa/device.hpp"
#include "mmpa/matchsynth.hpp"
#include "mmpa/paflow.hpp"
#include "mmpa/rfcore.hpp"

namespace mmpa::io {

void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

// `# GHz S RI R <z_ref>`, one frequency block per point, at most four
// value pairs per line, 9 significant digits. 1 to 4 ports.
std::string touchstone_string(const rf::NPortNetwork& net);
void write_touchstone(const rf::NPortNetwork& net, const std::string& path);

struct TouchstoneData {
  rf::NPortNetwork network;
  std::vector<std::string> warnings;
};

// Port count from the .sNp extension. Accepts Hz/kHz/MHz/GHz, S parameters
// in RI, MA or DB. Throws ParseError (with line) on malformed content or
// frequencies that are not strictly ascending.
TouchstoneData parse_touchstone(std::string_view text, int ports, const std::string& source = "<input>");
TouchstoneData read_touchstone(const std::string& path);

std::string csv_string(const pa::PowerSweepResult& r);
std::string csv_string(const pa::LoadPullResult& r);
// One row per metric: min, max, sigma and success rate.
std::string csv_string(const pa::MonteCarloReport& r);
std::string trials_csv_string(const pa::MonteCarloReport& r);
std::string loci_csv_string(const match::MatchingNetwork& net, const match::LociReport& loci);
std::string iv_csv_string(const device::IvTable& t);

template <typename T>
void write_csv(const T& result, const std::string& path) {
  write_file_atomic(path, csv_string(result));
}

}  // namespace mmpa::io
