#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "mmpa/errors.hpp"
#include "mmpa/rfcore.hpp"

namespace mmpa::rf {

FrequencyGrid::FrequencyGrid(std::vector<double> points_hz) : points_(std::move(points_hz)) {
  if (points_.empty()) throw InvalidArgument("FrequencyGrid: no points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i] > 0.0) || !std::isfinite(points_[i]))
      throw InvalidArgument(fmt::format("FrequencyGrid: non-positive frequency {} Hz at index {}", points_[i], i));
    if (i > 0 && !(points_[i] > points_[i - 1]))
      throw InvalidArgument(fmt::format("FrequencyGrid: not strictly ascending at index {}", i));
  }
}

std::size_t FrequencyGrid::find(double f_hz) const noexcept {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (std::abs(points_[i] - f_hz) <= 1e-12 * std::abs(f_hz)) return i;
  return points_.size();
}

FrequencyGrid make_grid(double start_hz, double stop_hz, std::size_t n) {
  if (!(start_hz > 0.0)) throw InvalidArgument(fmt::format("make_grid: non-positive start {} Hz", start_hz));
  if (stop_hz < start_hz) throw InvalidArgument("make_grid: stop < start");
  if (n == 0) throw InvalidArgument("make_grid: n = 0");
  if (n == 1) {
    if (stop_hz != start_hz) throw InvalidArgument("make_grid: n = 1 requires start = stop");
    return FrequencyGrid::single(start_hz);
  }
  if (stop_hz == start_hz) throw InvalidArgument("make_grid: n > 1 requires stop > start");
  std::vector<double> pts(n);
  const double step = (stop_hz - start_hz) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) pts[i] = start_hz + step * static_cast<double>(i);
  pts.back() = stop_hz;
  return FrequencyGrid(std::move(pts));
}

const char* to_string(Representation r) noexcept {
  switch (r) {
    case Representation::S: return "S";
    case Representation::Z: return "Z";
    case Representation::Y: return "Y";
    case Representation::ABCD: return "ABCD";
  }
  return "?";
}

NPortNetwork::NPortNetwork(FrequencyGrid grid, int ports, Representation rep, std::vector<CMatrix> data,
                           double z_ref)
    : grid_(std::move(grid)), ports_(ports), rep_(rep), data_(std::move(data)), z_ref_(z_ref) {
  if (ports_ < 1) throw InvalidArgument("NPortNetwork: port count must be >= 1");
  if (rep_ == Representation::ABCD && ports_ != 2) throw InvalidArgument("NPortNetwork: ABCD requires 2 ports");
  if (!(z_ref_ > 0.0)) throw InvalidArgument("NPortNetwork: z_ref must be > 0");
  if (data_.size() != grid_.size())
    throw InvalidArgument(fmt::format("NPortNetwork: {} matrices for {} frequencies", data_.size(), grid_.size()));
  for (const auto& m : data_)
    if (m.rows() != ports_ || m.cols() != ports_) throw InvalidArgument("NPortNetwork: matrix size != port count");
}

namespace {

// Solves A X = B, refusing ill-conditioned A.
CMatrix checked_solve(const CMatrix& a, const CMatrix& b, double f_hz, const char* what) {
  Eigen::PartialPivLU<CMatrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc * kSingularCondition > 1.0))
    throw SingularMatrixError(fmt::format("{}: singular matrix at {:.9g} Hz (rcond {:.3g})", what, f_hz, rc), f_hz);
  return lu.solve(b);
}

CMatrix to_s(const CMatrix& m, Representation rep, double z0, double f) {
  const auto n = m.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  switch (rep) {
    case Representation::S: return m;
    case Representation::Z: return checked_solve(m + z0 * id, m - z0 * id, f, "Z->S");
    case Representation::Y: return checked_solve(id + z0 * m, id - z0 * m, f, "Y->S");
    case Representation::ABCD: return abcd_to_s(m, z0, f);
  }
  return m;
}

CMatrix from_s(const CMatrix& s, Representation rep, double z0, double f) {
  const auto n = s.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  switch (rep) {
    case Representation::S: return s;
    // (I+S)(I-S)^-1 == (I-S)^-1 (I+S): both factors are polynomials in S.
    case Representation::Z: return z0 * checked_solve(id - s, id + s, f, "S->Z");
    case Representation::Y: return checked_solve(id + s, id - s, f, "S->Y") / z0;
    case Representation::ABCD: return s_to_abcd(s, z0, f);
  }
  return s;
}

void require_same_grid(const NPortNetwork& a, const NPortNetwork& b, const char* what) {
  if (!(a.grid() == b.grid())) throw InvalidArgument(std::string(what) + ": frequency grids differ");
  if (std::abs(a.z_ref() - b.z_ref()) > 1e-12 * a.z_ref())
    throw InvalidArgument(std::string(what) + ": reference impedances differ");
}

}  // namespace

Eigen::Matrix2cd abcd_to_s(const Eigen::Matrix2cd& m, double z0, double f_hz) {
  const cplx a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const cplx den = a + b / z0 + c * z0 + d;
  const double scale = std::abs(a) + std::abs(b) / z0 + std::abs(c) * z0 + std::abs(d);
  if (!(std::abs(den) * kSingularCondition > scale))
    throw SingularMatrixError(fmt::format("ABCD->S: singular at {:.9g} Hz", f_hz), f_hz);
  Eigen::Matrix2cd s;
  s(0, 0) = (a + b / z0 - c * z0 - d) / den;
  s(0, 1) = 2.0 * (a * d - b * c) / den;
  s(1, 0) = 2.0 / den;
  s(1, 1) = (-a + b / z0 - c * z0 + d) / den;
  return s;
}

Eigen::Matrix2cd s_to_abcd(const Eigen::Matrix2cd& s, double z0, double f_hz) {
  const cplx s11 = s(0, 0), s12 = s(0, 1), s21 = s(1, 0), s22 = s(1, 1);
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if (!(std::abs(s21) * kSingularCondition > scale))
    throw SingularMatrixError(fmt::format("S->ABCD: S21 vanishes at {:.9g} Hz", f_hz), f_hz);
  const cplx k = 1.0 / (2.0 * s21);
  const cplx p = s12 * s21;
  Eigen::Matrix2cd m;
  m(0, 0) = ((1.0 + s11) * (1.0 - s22) + p) * k;
  m(0, 1) = z0 * ((1.0 + s11) * (1.0 + s22) - p) * k;
  m(1, 0) = ((1.0 - s11) * (1.0 - s22) - p) * k / z0;
  m(1, 1) = ((1.0 - s11) * (1.0 + s22) + p) * k;
  return m;
}

NPortNetwork convert(const NPortNetwork& net, Representation target) {
  if (target == Representation::ABCD && net.ports() != 2)
    throw InvalidArgument(fmt::format("convert: ABCD target requires a 2-port, got {} ports", net.ports()));
  if (target == net.representation()) return net;
  std::vector<CMatrix> out;
  out.reserve(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const double f = net.grid()[i];
    out.push_back(from_s(to_s(net.at(i), net.representation(), net.z_ref(), f), target, net.z_ref(), f));
  }
  return NPortNetwork(net.grid(), net.ports(), target, std::move(out), net.z_ref());
}

NPortNetwork cascade(const NPortNetwork& a, const NPortNetwork& b) {
  if (a.ports() != 2 || b.ports() != 2) throw InvalidArgument("cascade: both networks must be 2-ports");
  require_same_grid(a, b, "cascade");
  const NPortNetwork ta = convert(a, Representation::ABCD);
  const NPortNetwork tb = convert(b, Representation::ABCD);
  std::vector<CMatrix> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Eigen::Matrix2cd prod = ta.at(i) * tb.at(i);
    out.emplace_back(abcd_to_s(prod, a.z_ref(), a.grid()[i]));
  }
  return NPortNetwork(a.grid(), 2, Representation::S, std::move(out), a.z_ref());
}

NPortNetwork renormalize(const NPortNetwork& net, double new_z_ref) {
  if (!(new_z_ref > 0.0)) throw InvalidArgument(fmt::format("renormalize: non-positive impedance {}", new_z_ref));
  if (net.representation() != Representation::S) {
    // Z, Y and ABCD do not depend on the reference.
    return NPortNetwork(net.grid(), net.ports(), net.representation(), net.data(), new_z_ref);
  }
  const double g = (new_z_ref - net.z_ref()) / (new_z_ref + net.z_ref());
  std::vector<CMatrix> out;
  out.reserve(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const CMatrix& s = net.at(i);
    const CMatrix id = CMatrix::Identity(s.rows(), s.cols());
    out.push_back(checked_solve(id - g * s, s - g * id, net.grid()[i], "renormalize"));
  }
  return NPortNetwork(net.grid(), net.ports(), Representation::S, std::move(out), new_z_ref);
}

LinearFlags check_linear(const NPortNetwork& net, double tol) {
  const NPortNetwork s = convert(net, Representation::S);
  double asym = 0.0, sigma_max = 0.0, unitarity = 0.0;
  for (const auto& m : s.data()) {
    asym = std::max(asym, (m - m.transpose()).cwiseAbs().maxCoeff());
    Eigen::JacobiSVD<CMatrix> svd(m);
    sigma_max = std::max(sigma_max, svd.singularValues()(0));
    const CMatrix dev = m.adjoint() * m - CMatrix::Identity(m.rows(), m.cols());
    unitarity = std::max(unitarity, dev.cwiseAbs().maxCoeff());
  }
  return {asym <= tol, sigma_max <= 1.0 + tol, unitarity <= tol};
}

StabilityReport stability(const NPortNetwork& net) {
  if (net.ports() != 2) throw InvalidArgument("stability: 2-port required");
  const NPortNetwork s = convert(net, Representation::S);
  StabilityReport rep;
  rep.k_factor = std::numeric_limits<double>::infinity();
  rep.delta_mag = 0.0;
  rep.worst_frequency = s.grid()[0];
  for (std::size_t i = 0; i < s.size(); ++i) {
    const CMatrix& m = s.at(i);
    const cplx delta = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double loop = std::abs(m(0, 1) * m(1, 0));
    double k = std::numeric_limits<double>::infinity();
    if (loop > 0.0) {
      k = (1.0 - std::norm(m(0, 0)) - std::norm(m(1, 1)) + std::norm(delta)) / (2.0 * loop);
    } else {
      rep.unilateral = true;
    }
    if (k < rep.k_factor) {
      rep.k_factor = k;
      rep.worst_frequency = s.grid()[i];
    }
    rep.delta_mag = std::max(rep.delta_mag, std::abs(delta));
  }
  rep.unconditionally_stable = rep.k_factor > 1.0 && rep.delta_mag < 1.0;
  return rep;
}

}  // namespace mmpa::rf
