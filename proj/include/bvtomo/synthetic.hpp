#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bvtomo/fem.hpp"

namespace bvtomo {

enum class Geometry { Concentric, StrongEccentric, MildEccentric };

std::string_view to_string(Geometry g);
Geometry geometry_from_string(std::string_view s);

/// Disc inclusion D with constant conductivity inside and outside.
struct InclusionSpec {
  Point2 center{};
  double radius = 1.0;
  double alpha_in = 2.0;
  double alpha_out = 1.0;

  double distance(const Point2& p) const;
};

InclusionSpec inclusion_for(Geometry g);

struct DataPair {
  BoundaryValues f;
  BoundaryValues g;
};

/// Measurement pairs sampled at boundary nodes, with the node angles used.
struct BoundaryDataSet {
  std::vector<double> angles;
  std::vector<DataPair> pairs;

  std::size_t size() const { return pairs.size(); }
};

/// Exact potentials for the analytic cases. Points outside the closed disc
/// of radius 2 (plus 1e-9) are rejected.
double concentric_exact(double rho, double phi);
double multiharmonic_exact(int m, double rho, double phi);
double strong_eccentric_exact(double rho, double phi);
double mild_eccentric_exact(double rho, double phi);
double exact_potential(Geometry g, int m, double rho, double phi);

/// Boundary data as functions of the polar angle on the circle of radius 2.
double multiharmonic_f(int m, double phi);
double multiharmonic_g(int m, double phi);
double strong_eccentric_f(double phi);
double strong_eccentric_g(double phi);
double mild_eccentric_f(double phi);
double mild_eccentric_g(double phi);

/// N pairs sampled at the mesh boundary nodes. Concentric uses harmonics
/// 1..N; the eccentric cases have a single pair.
BoundaryDataSet make_boundary_data(const TriMesh& mesh, Geometry g, int count = 1);

/// f -> f + |f| U theta with U uniform on [-1, 1) from a seeded 64-bit
/// Mersenne Twister, pair by pair and node by node. g is untouched.
BoundaryDataSet add_noise(const BoundaryDataSet& data, double theta, std::uint64_t seed);

/// Uniform in [-1, 1) from the top 53 bits of one mt19937_64 output.
double uniform_pm1(std::uint64_t raw);

enum class Omega0Rule {
  /// Zero where the triangle's vertex-distance range meets the band.
  Band,
  /// Zero where the centroid distance lies within the band.
  Centroid,
};

std::string_view to_string(Omega0Rule r);
Omega0Rule omega0_rule_from_string(std::string_view s);

/// Initial dual field: 0 on the ring |dist - radius| <= ell/2, 1 elsewhere.
/// `tikhonov` gives the all-ones field.
ElementField build_omega0(const TriMesh& mesh, const InclusionSpec& inc, double ell, bool tikhonov,
                          Omega0Rule rule = Omega0Rule::Band);

enum class Alpha0Mode { Banded, Constant, ThreeValued };

std::string_view to_string(Alpha0Mode m);
Alpha0Mode alpha0_mode_from_string(std::string_view s);

/// Initial conductivity. Zone nodes get `zone_value`.
///  banded: 1 where dist > radius + ell/2, 2.5 otherwise
///  constant: 2.5
///  three_valued: 5 inside D, 0.5 outside
NodalField build_alpha0(const TriMesh& mesh, Alpha0Mode mode, const InclusionSpec& inc, double ell,
                        double zone_value = 1.0);

/// Piecewise-constant true conductivity by triangle centroid.
ElementField exact_alpha_elements(const TriMesh& mesh, const InclusionSpec& inc);
/// Nodal true conductivity: alpha_in where dist < radius.
NodalField exact_alpha_nodes(const TriMesh& mesh, const InclusionSpec& inc);

std::string boundary_data_csv(const BoundaryDataSet& data);
BoundaryDataSet boundary_data_from_csv(std::string_view text);

}  // namespace bvtomo
