#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

#include "bvtomo/mesh.hpp"

namespace bvtomo {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// One value per mesh node.
struct NodalField {
  Eigen::VectorXd values;

  NodalField() = default;
  explicit NodalField(Eigen::VectorXd v) : values(std::move(v)) {}
  static NodalField constant(std::size_t n, double c) {
    return NodalField(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), c));
  }
  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index i) const { return values[i]; }
  double& operator[](Eigen::Index i) { return values[i]; }
};

/// One value per triangle.
struct ElementField {
  Eigen::VectorXd values;

  ElementField() = default;
  explicit ElementField(Eigen::VectorXd v) : values(std::move(v)) {}
  static ElementField constant(std::size_t n, double c) {
    return ElementField(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), c));
  }
  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index i) const { return values[i]; }
  double& operator[](Eigen::Index i) { return values[i]; }
};

/// Values at boundary nodes, ordered as TriMesh::boundary_nodes().
using BoundaryValues = Eigen::VectorXd;

/// Per-triangle gradients, one row per triangle.
using ElementGradients = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Geometric precomputation for P1 elements on a fixed mesh: basis gradients,
/// areas, lumped mass and a cached sparsity pattern for fast reassembly.
class P1Space {
 public:
  explicit P1Space(TriMesh mesh);

  const TriMesh& mesh() const { return mesh_; }
  Eigen::Index node_count() const { return static_cast<Eigen::Index>(mesh_.node_count()); }
  Eigen::Index triangle_count() const { return static_cast<Eigen::Index>(mesh_.triangle_count()); }
  const Eigen::VectorXd& areas() const { return area_; }
  /// Row sums of the consistent mass matrix: area/3 per incident triangle.
  const Eigen::VectorXd& lumped_mass() const { return mass_; }

  ElementGradients gradient(const Eigen::VectorXd& v) const;
  /// |grad v|^2 per triangle.
  Eigen::VectorXd gradient_sq(const Eigen::VectorXd& v) const;
  /// Per-triangle mean of the three nodal values.
  ElementField element_mean(const NodalField& v) const;
  /// Adjoint of element_mean: scatters e_T/3 to the triangle's nodes.
  Eigen::VectorXd scatter_to_nodes(const Eigen::VectorXd& per_element) const;

  SparseMatrix stiffness(const ElementField& weight) const;
  SparseMatrix stiffness(const NodalField& weight) const;
  /// Writes stiffness values for `weight` into `k`, which must come from stiffness().
  void restiffen(const ElementField& weight, SparseMatrix& k) const;

  /// Trapezoidal edge quadrature of the boundary pairing: L.w ~ int g w ds.
  Eigen::VectorXd boundary_load(const BoundaryValues& g) const;
  /// int g ds by the same quadrature.
  double boundary_integral(const BoundaryValues& g) const;
  /// Boundary-node restriction of a nodal vector.
  BoundaryValues boundary_trace(const Eigen::VectorXd& v) const;

  /// Gradient of basis function k (0..2) on triangle t.
  Eigen::Vector2d basis_gradient(Eigen::Index t, int k) const {
    return {bgrad_(t, 2 * k), bgrad_(t, 2 * k + 1)};
  }

 private:
  TriMesh mesh_;
  Eigen::VectorXd area_;
  Eigen::VectorXd mass_;
  Eigen::Matrix<double, Eigen::Dynamic, 6> bgrad_;
  // Local unit-weight element stiffness, 9 entries per triangle (row-major).
  Eigen::Matrix<double, Eigen::Dynamic, 9> kloc_;
  SparseMatrix pattern_;
  std::vector<Eigen::Index> slot_;  // 9 per triangle, index into pattern_ values
  std::vector<double> bedge_len_;   // length of boundary edge k -> k+1
};

/// Factorizes the conductivity-weighted Dirichlet and Neumann problems for
/// one conductivity at a time. Reuses the symbolic analysis across updates.
class ForwardSolver {
 public:
  explicit ForwardSolver(std::shared_ptr<const P1Space> space);

  const P1Space& space() const { return *space_; }

  /// Factorizes for element conductivity `weight`. Rejects non-positive values.
  void set_conductivity(const ElementField& weight);
  void set_conductivity(const NodalField& alpha);
  const SparseMatrix& stiffness() const { return k_; }

  /// Total potential with the given boundary trace.
  NodalField dirichlet(const BoundaryValues& f) const;
  /// Lumped-mass zero-mean solution of K w = L - lambda m, lambda chosen so
  /// the system is solvable. Equals the Lagrange-bordered solution.
  NodalField neumann_from_load(const Eigen::VectorXd& load) const;
  NodalField neumann(const BoundaryValues& g) const;

 private:
  std::shared_ptr<const P1Space> space_;
  SparseMatrix k_;
  std::vector<Eigen::Index> interior_;  // non-boundary nodes
  std::vector<Eigen::Index> free_;      // all nodes but the Neumann pin
  std::vector<Eigen::Index> interior_pos_;
  std::vector<Eigen::Index> free_pos_;
  SparseMatrix kii_, kff_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> kii_map_, kff_map_;
  Eigen::SimplicialLDLT<SparseMatrix> dir_, neu_;
  bool ready_ = false;
};

ElementGradients element_gradient(const P1Space& space, const NodalField& v);
SparseMatrix assemble_weighted_stiffness(const P1Space& space, const ElementField& weight);
SparseMatrix assemble_weighted_stiffness(const P1Space& space, const NodalField& weight);
Eigen::VectorXd assemble_boundary_pairing(const P1Space& space, const BoundaryValues& g);
/// Discrete harmonic extension of boundary values.
NodalField extend_trace(const P1Space& space, const BoundaryValues& f);
NodalField solve_dirichlet(const P1Space& space, const NodalField& alpha, const BoundaryValues& f);
/// Rejects g unless |int g ds| <= 1e-8 * int |g| ds.
NodalField solve_neumann(const P1Space& space, const NodalField& alpha, const BoundaryValues& g);
/// v^T K_alpha v.
double energy(const P1Space& space, const NodalField& alpha, const NodalField& v);

}  // namespace bvtomo
