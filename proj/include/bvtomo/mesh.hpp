#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bvtomo {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class NodeTag : std::uint8_t { Interior = 0, Boundary = 1, DeltaZone = 2 };

std::string_view to_string(NodeTag tag);
NodeTag node_tag_from_string(std::string_view s);

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Conforming triangulation of a disc centred at the origin.
///
/// Triangles are stored counter-clockwise. Boundary edges form one closed
/// counter-clockwise cycle; `boundary_nodes()` lists the cycle's nodes in the
/// same order, starting from the node with the smallest polar angle in [0, 2pi).
/// Instances are immutable once built.
class TriMesh {
 public:
  TriMesh() = default;

  /// Validates and completes a mesh from raw nodes/triangles: reorients
  /// clockwise triangles, extracts the boundary cycle and computes h.
  /// `radius` <= 0 means "estimate from the boundary nodes".
  static TriMesh from_parts(std::vector<Point2> nodes, std::vector<Triangle> triangles,
                            double radius = 0.0);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  const std::vector<NodeTag>& tags() const { return tags_; }

  const Point2& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
  NodeTag tag(int i) const { return tags_[static_cast<std::size_t>(i)]; }
  bool is_boundary(int i) const { return boundary_slot_[static_cast<std::size_t>(i)] >= 0; }
  /// Position of node i in `boundary_nodes()`, or -1 for interior nodes.
  int boundary_slot(int i) const { return boundary_slot_[static_cast<std::size_t>(i)]; }
  /// True for every node tagged BOUNDARY or DELTA_ZONE.
  bool in_delta_zone(int i) const { return tag(i) != NodeTag::Interior; }

  double radius() const { return radius_; }
  double delta() const { return delta_; }
  /// Maximum edge length.
  double h() const { return h_; }
  double signed_area(std::size_t t) const;
  double total_area() const;
  Point2 centroid(std::size_t t) const;
  /// Polar angle in [0, 2pi) of node i.
  double angle(int i) const;

  /// Copy of this mesh with zone tags recomputed for band width `delta`.
  TriMesh with_delta_zone(double delta) const;

  /// FNV-1a digest of coordinates and connectivity, as 16 hex digits.
  std::string content_hash() const;

 private:
  friend TriMesh mesh_from_csv(std::string_view, std::string_view);

  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  std::vector<int> boundary_nodes_;
  std::vector<int> boundary_slot_;
  std::vector<NodeTag> tags_;
  double radius_ = 0.0;
  double delta_ = 0.0;
  double h_ = 0.0;
};

/// Ring-by-ring triangulation of the disc {rho < radius}. Radial spacing is
/// target_h / 2; rings are inserted at every radius in `conform_radii` so that
/// concentric interfaces are resolved by mesh edges.
TriMesh generate_disc_mesh(double radius, double target_h,
                           std::span<const double> conform_radii = {});

/// Parses Triangle's .node/.ele formats. Index base (0 or 1) is taken from
/// the first vertex index of the .node text.
TriMesh load_triangle_format(std::string_view node_text, std::string_view ele_text);

/// Recomputes zone tags: nodes with radius - rho < delta become DELTA_ZONE.
TriMesh tag_delta_zone(const TriMesh& mesh, double delta);

std::string nodes_csv(const TriMesh& mesh);
std::string elements_csv(const TriMesh& mesh);
/// Inverse of nodes_csv/elements_csv. Coordinates round-trip bit-exactly and
/// tags are taken verbatim from the tag column.
TriMesh mesh_from_csv(std::string_view nodes_text, std::string_view elements_text);

}  // namespace bvtomo
