#include "bvtomo/synthetic.hpp"

#include <cmath>
#include <random>

#include "bvtomo/error.hpp"
#include "text_util.hpp"

namespace bvtomo {

namespace {

constexpr double kDomainRadius = 2.0;

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= kDomainRadius + 1e-9))
    fail(ErrorCode::InvalidArgument, "point outside the disc of radius 2");
}

// Eccentric solutions in bipolar coordinates. The foci sit on the x axis;
// tau is constant on the outer circle (tau1) and on the inclusion (tau2).
struct Bipolar {
  double a;
  double tau1;
  double tau2;
  double alpha2 = 2.0;

  double p1() const { return -2.0 * a / (1.0 - std::exp(-2.0 * tau1)); }
  double p2() const { return p1() * std::exp(-2.0 * tau1); }

  double potential(double x, double y) const {
    const double d1 = std::hypot(x - p1(), y);
    const double d2 = std::hypot(x - p2(), y);
    const double tau = std::log(d1 / d2);
    const double pre = 2.0 * a * y / (d1 * d2);
    if (tau > tau2) return pre * std::exp(-tau);
    return pre * (0.5 * (1.0 + alpha2) * std::exp(-tau) +
                  0.5 * (1.0 - alpha2) * std::exp(-2.0 * tau2) * std::exp(tau));
  }
  double coef_f() const {
    return 0.5 * (1.0 + alpha2) * std::exp(-tau1) + 0.5 * (1.0 - alpha2) * std::exp(-2.0 * tau2) * std::exp(tau1);
  }
  double coef_g() const {
    return 0.5 * (1.0 + alpha2) * std::exp(-tau1) - 0.5 * (1.0 - alpha2) * std::exp(-2.0 * tau2) * std::exp(tau1);
  }
};

const Bipolar& strong() {
  static const Bipolar b{0.5, std::log((std::sqrt(17.0) + 1.0) / 4.0), std::log((std::sqrt(5.0) + 1.0) / 2.0)};
  return b;
}

const Bipolar& mild() {
  static const Bipolar b{4.0 / 3.0 * std::sqrt(10.0), std::log((2.0 * std::sqrt(10.0) + 7.0) / 3.0),
                         std::log((4.0 * std::sqrt(10.0) + 13.0) / 3.0)};
  return b;
}

double harmonic_scale(int m) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "harmonic index must be at least 1");
  if (m > 30) fail(ErrorCode::InvalidArgument, "harmonic index too large");
  return static_cast<double>(m) * (3.0 * std::pow(4.0, m) + 1.0);
}

}  // namespace

std::string_view to_string(Geometry g) {
  switch (g) {
    case Geometry::Concentric: return "concentric";
    case Geometry::StrongEccentric: return "strong_eccentric";
    case Geometry::MildEccentric: return "mild_eccentric";
  }
  return "concentric";
}

Geometry geometry_from_string(std::string_view s) {
  if (s == "concentric") return Geometry::Concentric;
  if (s == "strong_eccentric") return Geometry::StrongEccentric;
  if (s == "mild_eccentric") return Geometry::MildEccentric;
  fail(ErrorCode::InvalidArgument, "unknown geometry '" + std::string(s) + "'");
}

double InclusionSpec::distance(const Point2& p) const { return std::hypot(p.x - center.x, p.y - center.y); }

InclusionSpec inclusion_for(Geometry g) {
  InclusionSpec inc;
  switch (g) {
    case Geometry::Concentric: break;
    case Geometry::StrongEccentric: inc.center = {(std::sqrt(5.0) - std::sqrt(17.0)) / 2.0, 0.0}; break;
    case Geometry::MildEccentric: inc.center = {-1.0 / 3.0, 0.0}; break;
  }
  return inc;
}

double multiharmonic_exact(int m, double rho, double phi) {
  check_rho(rho);
  const double d = harmonic_scale(m);
  const double c = std::cos(m * phi);
  if (rho <= 1.0) return 1.0 + 13.0 / 8.0 * std::pow(2.0, m + 2) / d * std::pow(rho, m) * c;
  return 1.0 + 13.0 / 8.0 * std::pow(2.0, m + 1) / d * (3.0 * std::pow(rho, m) - std::pow(rho, -m)) * c;
}

double concentric_exact(double rho, double phi) { return multiharmonic_exact(1, rho, phi); }

double strong_eccentric_exact(double rho, double phi) {
  check_rho(rho);
  return strong().potential(rho * std::cos(phi), rho * std::sin(phi));
}

double mild_eccentric_exact(double rho, double phi) {
  check_rho(rho);
  return mild().potential(rho * std::cos(phi), rho * std::sin(phi));
}

double exact_potential(Geometry g, int m, double rho, double phi) {
  switch (g) {
    case Geometry::Concentric: return multiharmonic_exact(m, rho, phi);
    case Geometry::StrongEccentric: return strong_eccentric_exact(rho, phi);
    case Geometry::MildEccentric: return mild_eccentric_exact(rho, phi);
  }
  return 0.0;
}

double multiharmonic_f(int m, double phi) {
  const double d = harmonic_scale(m);
  return 1.0 + 13.0 / 8.0 * (3.0 * std::pow(2.0, 2 * m + 1) - 2.0) / d * std::cos(m * phi);
}

double multiharmonic_g(int m, double phi) {
  harmonic_scale(m);
  return 13.0 / 8.0 * std::cos(m * phi);
}

double strong_eccentric_f(double phi) {
  return strong().coef_f() * std::sin(phi) / (std::sqrt(17.0) + 4.0 * std::cos(phi));
}

double strong_eccentric_g(double phi) {
  const double q = std::sqrt(17.0) + 4.0 * std::cos(phi);
  return strong().coef_g() * 0.5 * std::sin(phi) / (q * q);
}

double mild_eccentric_f(double phi) {
  return mild().coef_f() * (8.0 / 3.0) * std::sqrt(10.0) * std::sin(phi) / (28.0 / 3.0 + 4.0 * std::cos(phi));
}

double mild_eccentric_g(double phi) {
  const double q = 28.0 / 3.0 + 4.0 * std::cos(phi);
  return mild().coef_g() * (320.0 / 9.0) * std::sin(phi) / (q * q);
}

BoundaryDataSet make_boundary_data(const TriMesh& mesh, Geometry g, int count) {
  if (count < 1) fail(ErrorCode::InvalidArgument, "need at least one data pair");
  if (g != Geometry::Concentric && count != 1)
    fail(ErrorCode::InvalidArgument, "eccentric geometries provide a single data pair");
  BoundaryDataSet data;
  const auto& bn = mesh.boundary_nodes();
  const auto nb = static_cast<Eigen::Index>(bn.size());
  for (int b : bn) data.angles.push_back(mesh.angle(b));
  for (int m = 1; m <= count; ++m) {
    DataPair p{BoundaryValues(nb), BoundaryValues(nb)};
    for (Eigen::Index k = 0; k < nb; ++k) {
      const double phi = data.angles[static_cast<std::size_t>(k)];
      switch (g) {
        case Geometry::Concentric:
          p.f[k] = multiharmonic_f(m, phi);
          p.g[k] = multiharmonic_g(m, phi);
          break;
        case Geometry::StrongEccentric:
          p.f[k] = strong_eccentric_f(phi);
          p.g[k] = strong_eccentric_g(phi);
          break;
        case Geometry::MildEccentric:
          p.f[k] = mild_eccentric_f(phi);
          p.g[k] = mild_eccentric_g(phi);
          break;
      }
    }
    data.pairs.push_back(std::move(p));
  }
  return data;
}

double uniform_pm1(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

BoundaryDataSet add_noise(const BoundaryDataSet& data, double theta, std::uint64_t seed) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) fail(ErrorCode::InvalidArgument, "noise level must be non-negative");
  BoundaryDataSet out = data;
  if (theta == 0.0) return out;
  std::mt19937_64 gen(seed);
  for (auto& p : out.pairs) {
    for (Eigen::Index k = 0; k < p.f.size(); ++k) p.f[k] += std::abs(p.f[k]) * uniform_pm1(gen()) * theta;
  }
  return out;
}

std::string_view to_string(Omega0Rule r) { return r == Omega0Rule::Band ? "band" : "centroid"; }

Omega0Rule omega0_rule_from_string(std::string_view s) {
  if (s == "band") return Omega0Rule::Band;
  if (s == "centroid") return Omega0Rule::Centroid;
  fail(ErrorCode::InvalidArgument, "unknown omega0 rule '" + std::string(s) + "'");
}

ElementField build_omega0(const TriMesh& mesh, const InclusionSpec& inc, double ell, bool tikhonov,
                          Omega0Rule rule) {
  ElementField w = ElementField::constant(mesh.triangle_count(), 1.0);
  if (tikhonov) return w;
  if (!(ell >= 0.0)) fail(ErrorCode::InvalidArgument, "ring width must be non-negative");
  const double lo = inc.radius - ell / 2.0;
  const double hi = inc.radius + ell / 2.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    bool ring = false;
    if (rule == Omega0Rule::Centroid) {
      const double d = inc.distance(mesh.centroid(t));
      ring = d >= lo && d <= hi;
    } else {
      double dmin = 1e300, dmax = -1e300;
      for (int v : mesh.triangle(t)) {
        const double d = inc.distance(mesh.node(v));
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
      ring = dmax >= lo && dmin <= hi;
    }
    if (ring) w[static_cast<Eigen::Index>(t)] = 0.0;
  }
  return w;
}

std::string_view to_string(Alpha0Mode m) {
  switch (m) {
    case Alpha0Mode::Banded: return "banded";
    case Alpha0Mode::Constant: return "constant";
    case Alpha0Mode::ThreeValued: return "three_valued";
  }
  return "banded";
}

Alpha0Mode alpha0_mode_from_string(std::string_view s) {
  if (s == "banded") return Alpha0Mode::Banded;
  if (s == "constant") return Alpha0Mode::Constant;
  if (s == "three_valued") return Alpha0Mode::ThreeValued;
  fail(ErrorCode::InvalidArgument, "unknown alpha0 mode '" + std::string(s) + "'");
}

NodalField build_alpha0(const TriMesh& mesh, Alpha0Mode mode, const InclusionSpec& inc, double ell,
                        double zone_value) {
  NodalField a = NodalField::constant(mesh.node_count(), 0.0);
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const int node = static_cast<int>(i);
    const double d = inc.distance(mesh.node(node));
    double v = 0.0;
    switch (mode) {
      case Alpha0Mode::Banded: v = d > inc.radius + ell / 2.0 ? 1.0 : 2.5; break;
      case Alpha0Mode::Constant: v = 2.5; break;
      case Alpha0Mode::ThreeValued: v = d < inc.radius ? 5.0 : 0.5; break;
    }
    if (mesh.in_delta_zone(node)) v = zone_value;
    a[static_cast<Eigen::Index>(i)] = v;
  }
  return a;
}

ElementField exact_alpha_elements(const TriMesh& mesh, const InclusionSpec& inc) {
  ElementField a = ElementField::constant(mesh.triangle_count(), inc.alpha_out);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (inc.distance(mesh.centroid(t)) < inc.radius) a[static_cast<Eigen::Index>(t)] = inc.alpha_in;
  }
  return a;
}

NodalField exact_alpha_nodes(const TriMesh& mesh, const InclusionSpec& inc) {
  NodalField a = NodalField::constant(mesh.node_count(), inc.alpha_out);
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    if (inc.distance(mesh.node(static_cast<int>(i))) < inc.radius) a[static_cast<Eigen::Index>(i)] = inc.alpha_in;
  }
  return a;
}

std::string boundary_data_csv(const BoundaryDataSet& data) {
  std::string out = "angle";
  for (std::size_t m = 1; m <= data.pairs.size(); ++m)
    out += ",f_" + std::to_string(m) + ",g_" + std::to_string(m);
  out += '\n';
  for (std::size_t k = 0; k < data.angles.size(); ++k) {
    out += detail::format_double(data.angles[k]);
    for (const auto& p : data.pairs) {
      out += ',';
      out += detail::format_double(p.f[static_cast<Eigen::Index>(k)]);
      out += ',';
      out += detail::format_double(p.g[static_cast<Eigen::Index>(k)]);
    }
    out += '\n';
  }
  return out;
}

BoundaryDataSet boundary_data_from_csv(std::string_view text) {
  const auto lines = detail::split_lines(text);
  BoundaryDataSet data;
  std::size_t pairs = 0;
  bool header = false;
  std::vector<std::vector<double>> cols;
  for (const auto& line : lines) {
    if (detail::trim(line.text).empty()) continue;
    const auto cells = detail::split_char(line.text, ',');
    if (!header) {
      header = true;
      if (cells.size() < 3 || (cells.size() - 1) % 2 != 0 || cells[0] != "angle")
        detail::parse_fail("boundary_data.csv", line.number, "expected header angle,f_1,g_1,...");
      pairs = (cells.size() - 1) / 2;
      for (std::size_t m = 0; m < pairs; ++m) {
        if (cells[1 + 2 * m] != "f_" + std::to_string(m + 1) || cells[2 + 2 * m] != "g_" + std::to_string(m + 1))
          detail::parse_fail("boundary_data.csv", line.number, "unexpected column name");
      }
      cols.assign(2 * pairs, {});
      continue;
    }
    if (cells.size() != 1 + 2 * pairs) detail::parse_fail("boundary_data.csv", line.number, "wrong field count");
    double v = 0.0;
    if (!detail::parse_double(cells[0], v)) detail::parse_fail("boundary_data.csv", line.number, "bad angle");
    data.angles.push_back(v);
    for (std::size_t c = 0; c < 2 * pairs; ++c) {
      if (!detail::parse_double(cells[1 + c], v)) detail::parse_fail("boundary_data.csv", line.number, "bad value");
      cols[c].push_back(v);
    }
  }
  if (!header) fail(ErrorCode::Parse, "boundary_data.csv: empty file");
  for (std::size_t m = 0; m < pairs; ++m) {
    DataPair p{Eigen::Map<const Eigen::VectorXd>(cols[2 * m].data(), static_cast<Eigen::Index>(cols[2 * m].size())),
               Eigen::Map<const Eigen::VectorXd>(cols[2 * m + 1].data(),
                                                 static_cast<Eigen::Index>(cols[2 * m + 1].size()))};
    data.pairs.push_back(std::move(p));
  }
  return data;
}

}  // namespace bvtomo
