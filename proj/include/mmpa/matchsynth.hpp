#pragma once

// Transmission-line matching networks from a complex termination to a real
// system impedance, selected under a nodal-Q bound on the matching loci.

#include <string>
#include <vector>

#include "mmpa/elements.hpp"

namespace mmpa::match {

using rf::cplx;

enum class ElementKind { SeriesLine, OpenStub, ShortStub, QuarterWave };

const char* to_string(ElementKind k) noexcept;

struct MatchElement {
  ElementKind kind = ElementKind::SeriesLine;
  elements::TLineSpec line;
};

struct MatchingNetwork {
  // Ordered from the termination toward the system-impedance side.
  std::vector<MatchElement> elements;
  double f0 = 0.0;
  cplx z_load{};
  double z_sys = rf::kDefaultZ0;
  // Set when no candidate satisfied the Q bound; the network is the
  // best effort (smallest loci Q).
  bool constraint_violated = false;

  std::string describe() const;
};

double nodal_q(cplx z);

enum class Topology {
  Auto,         // every candidate family
  QuarterWave,  // families ending in a quarter-wave section
  StubLine,     // series line + shunt stub (the two closed-form solutions)
};

struct SynthesisOptions {
  double q_max = 1.2;
  Topology topology = Topology::Auto;
  elements::StubKind stub = elements::StubKind::Open;
};

MatchingNetwork synthesize(cplx z_load, double z_sys, double f0, const SynthesisOptions& opt = {});

struct LociReport {
  std::vector<cplx> trajectory;  // z_load, then the impedance after each element
  std::vector<double> nodal_q;
  double max_q = 0.0;            // over every point, termination included
  double max_internal_q = 0.0;   // over points strictly between termination and system side
};

LociReport loci(const MatchingNetwork& net, cplx z_load, double f0);

// Chain matrix from the system side to the termination side.
Eigen::Matrix2cd network_abcd(const MatchingNetwork& net, double f_hz);
// Input impedance of the network terminated in z_load, by ABCD analysis.
cplx input_impedance(const MatchingNetwork& net, cplx z_load, double f_hz);

struct VerifyResult {
  std::vector<double> freq;
  std::vector<cplx> s11;
  std::vector<double> s11_db;
  double match_bw = 0.0;  // Hz where |S11| <= -10 dB, around the best match
  double f_lo = 0.0;
  double f_hi = 0.0;
};

VerifyResult verify(const MatchingNetwork& net, cplx z_load, const rf::FrequencyGrid& grid);

}  // namespace mmpa::match
