#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bvtomo/functional.hpp"
#include "bvtomo/recon.hpp"
#include "bvtomo/synthetic.hpp"

namespace bvtomo {

/// Where the mesh comes from. Exactly one source is used, in this priority:
/// CSV pair, Triangle pair, generated disc.
struct MeshSource {
  double h = 0.27;
  /// Generated meshes get a node ring on the inclusion circle when it is concentric.
  bool conform = false;
  std::string node_file, ele_file;
  std::string nodes_csv, elements_csv;
};

/// Everything that determines one run. Serializes to flat key=value text.
struct ExperimentSpec {
  Geometry geometry = Geometry::Concentric;
  double ell = 0.2;
  bool tikhonov = false;
  bool physical = false;
  int pairs = 1;
  double theta = 0.0;
  MeshSource mesh;
  /// Optional boundary_data.csv to use instead of the closed-form data.
  std::string data_file;
  /// Optional alpha.csv for the forward solve instead of the true conductivity.
  std::string alpha_file;
  /// Unset means banded for the concentric case and constant otherwise.
  std::optional<Alpha0Mode> alpha0;
  Omega0Rule omega0_rule = Omega0Rule::Band;
  /// When set, the run fails unless the mesh has this content hash.
  std::string expected_mesh_hash;
  ReconConfig recon;

  void validate() const;
  Alpha0Mode alpha0_mode() const;
};

/// Ordered key=value pairs. '#' starts a comment; blank lines are skipped.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(std::string_view text, std::string_view origin);

/// Applies one setting. Unknown keys and malformed values raise InvalidArgument.
void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value);
void apply_settings(ExperimentSpec& spec, const KeyValues& kv);
/// Current value of one key in its canonical text form.
std::string get_setting(const ExperimentSpec& spec, std::string_view key);
/// All keys in a fixed order.
const std::vector<std::string>& setting_keys();
/// Full dump; feeding it back through apply_settings reproduces the spec.
std::string spec_to_text(const ExperimentSpec& spec);

TriMesh build_mesh(const ExperimentSpec& spec);
BoundaryDataSet build_data(const ExperimentSpec& spec, const TriMesh& mesh);

/// Manifest: the spec dump plus mesh identity and the library version.
std::string manifest_text(const ExperimentSpec& spec, const TriMesh& mesh);

struct ForwardOutput {
  std::shared_ptr<const P1Space> space;
  ElementField alpha;
  std::vector<NodalField> dirichlet;  // one total potential per pair
  std::vector<NodalField> neumann;    // zero lumped-mean potentials
  /// Errors against the closed form for the first pair; NaN when the
  /// conductivity was read from a file.
  double l2_error = 0.0;
  double h1_error = 0.0;
  double neumann_l2_error = 0.0;
};

/// Direct Dirichlet and Neumann solves for every data pair.
ForwardOutput run_forward(const ExperimentSpec& spec, const TriMesh& mesh, const BoundaryDataSet& data);

/// L2 norm of (v_h - v) with the edge-midpoint rule, and the H1 seminorm of
/// the same difference with the exact gradient taken by central differences
/// at centroids.
struct FieldErrors {
  double l2 = 0.0;
  double h1 = 0.0;
};
template <class F>
FieldErrors field_errors(const P1Space& space, const NodalField& v, F&& exact);

struct InversionOutput {
  std::shared_ptr<const P1Space> space;
  InclusionSpec inclusion;
  ReconResult result;
};

InversionOutput run_inversion(const ExperimentSpec& spec, const TriMesh& mesh, const BoundaryDataSet& data);

/// Writes alpha.csv, omega.csv, history.csv, fields.vtk and manifest.txt.
void write_inversion(const std::string& dir, const ExperimentSpec& spec, const TriMesh& mesh,
                     const InversionOutput& out);
/// Writes forward.vtk, u_<m>.csv, w_<m>.csv, errors.csv and manifest.txt.
void write_forward(const std::string& dir, const ExperimentSpec& spec, const TriMesh& mesh, const ForwardOutput& out);

struct Report {
  std::string markdown;
  /// Run directories that have a manifest but no usable history.
  std::vector<std::string> missing;
};

/// Collects every immediate subdirectory of `dir` holding manifest.txt and
/// history.csv into markdown tables, one block per geometry, mode and noise
/// level, one row per (ell, mu, N).
Report build_report(const std::string& dir);

std::string_view library_version();

template <class F>
FieldErrors field_errors(const P1Space& space, const NodalField& v, F&& exact) {
  const auto& mesh = space.mesh();
  FieldErrors e;
  const double step = 1e-6;
  const auto grads = space.gradient(v.values);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    const double area = space.areas()[static_cast<Eigen::Index>(t)];
    double sq = 0.0;
    for (int k = 0; k < 3; ++k) {
      const int a = tri[static_cast<std::size_t>(k)];
      const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
      const Point2 p{0.5 * (mesh.node(a).x + mesh.node(b).x), 0.5 * (mesh.node(a).y + mesh.node(b).y)};
      const double d = 0.5 * (v[a] + v[b]) - exact(p.x, p.y);
      sq += d * d;
    }
    e.l2 += area * sq / 3.0;
    const Point2 c = mesh.centroid(t);
    const double gx = (exact(c.x + step, c.y) - exact(c.x - step, c.y)) / (2.0 * step);
    const double gy = (exact(c.x, c.y + step) - exact(c.x, c.y - step)) / (2.0 * step);
    const auto ti = static_cast<Eigen::Index>(t);
    const double dx = grads(ti, 0) - gx;
    const double dy = grads(ti, 1) - gy;
    e.h1 += area * (dx * dx + dy * dy);
  }
  e.l2 = std::sqrt(e.l2);
  e.h1 = std::sqrt(e.h1);
  return e;
}

}  // namespace bvtomo
