#include "bvtomo/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bvtomo/error.hpp"

namespace bvtomo {

namespace {

using Index = Eigen::Index;

void check_size(Index got, Index want, const char* what) {
  if (got != want)
    fail(ErrorCode::InvalidArgument, std::string(what) + ": expected " + std::to_string(want) +
                                         " values, got " + std::to_string(got));
}

// Extracts the principal submatrix on nodes with pos >= 0 and records value-slot pairs so
// later refills are a flat copy.
void build_submatrix(const SparseMatrix& full, const std::vector<Index>& pos, Index m,
                     SparseMatrix& sub, std::vector<std::pair<Index, Index>>& map) {
  std::vector<Eigen::Triplet<double>> trip;
  for (Index c = 0; c < full.outerSize(); ++c) {
    if (pos[static_cast<std::size_t>(c)] < 0) continue;
    for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
      if (pos[static_cast<std::size_t>(it.row())] < 0) continue;
      trip.emplace_back(pos[static_cast<std::size_t>(it.row())], pos[static_cast<std::size_t>(c)], 1.0);
    }
  }
  sub.resize(m, m);
  sub.setFromTriplets(trip.begin(), trip.end());
  sub.makeCompressed();
  map.clear();
  for (Index c = 0; c < full.outerSize(); ++c) {
    const Index pc = pos[static_cast<std::size_t>(c)];
    if (pc < 0) continue;
    for (Index k = full.outerIndexPtr()[c]; k < full.outerIndexPtr()[c + 1]; ++k) {
      const Index pr = pos[static_cast<std::size_t>(full.innerIndexPtr()[k])];
      if (pr < 0) continue;
      // Locate (pr, pc) in the compressed submatrix column.
      const auto* begin = sub.innerIndexPtr() + sub.outerIndexPtr()[pc];
      const auto* end = sub.innerIndexPtr() + sub.outerIndexPtr()[pc + 1];
      const auto* hit = std::lower_bound(begin, end, static_cast<int>(pr));
      map.emplace_back(k, static_cast<Index>(hit - sub.innerIndexPtr()));
    }
  }
}

void refill(const SparseMatrix& full, SparseMatrix& sub, const std::vector<std::pair<Index, Index>>& map) {
  double* dst = sub.valuePtr();
  const double* src = full.valuePtr();
  for (const auto& [a, b] : map) dst[b] = src[a];
}

}  // namespace

P1Space::P1Space(TriMesh mesh) : mesh_(std::move(mesh)) {
  const Index n = node_count();
  const Index m = triangle_count();
  area_.resize(m);
  mass_ = Eigen::VectorXd::Zero(n);
  bgrad_.resize(m, 6);
  kloc_.resize(m, 9);
  for (Index t = 0; t < m; ++t) {
    const auto& tri = mesh_.triangle(static_cast<std::size_t>(t));
    const double a = mesh_.signed_area(static_cast<std::size_t>(t));
    area_[t] = a;
    for (int k = 0; k < 3; ++k) {
      const Point2& p = mesh_.node(tri[static_cast<std::size_t>((k + 1) % 3)]);
      const Point2& q = mesh_.node(tri[static_cast<std::size_t>((k + 2) % 3)]);
      bgrad_(t, 2 * k) = (p.y - q.y) / (2.0 * a);
      bgrad_(t, 2 * k + 1) = (q.x - p.x) / (2.0 * a);
      mass_[tri[static_cast<std::size_t>(k)]] += a / 3.0;
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        kloc_(t, 3 * i + j) =
            a * (bgrad_(t, 2 * i) * bgrad_(t, 2 * j) + bgrad_(t, 2 * i + 1) * bgrad_(t, 2 * j + 1));
      }
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(9 * m));
  for (Index t = 0; t < m; ++t) {
    const auto& tri = mesh_.triangle(static_cast<std::size_t>(t));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)], 0.0);
  }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();
  slot_.resize(static_cast<std::size_t>(9 * m));
  for (Index t = 0; t < m; ++t) {
    const auto& tri = mesh_.triangle(static_cast<std::size_t>(t));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int r = tri[static_cast<std::size_t>(i)];
        const int c = tri[static_cast<std::size_t>(j)];
        const auto* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[c];
        const auto* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[c + 1];
        const auto* hit = std::lower_bound(begin, end, r);
        slot_[static_cast<std::size_t>(9 * t + 3 * i + j)] = hit - pattern_.innerIndexPtr();
      }
    }
  }

  const auto& bn = mesh_.boundary_nodes();
  bedge_len_.resize(bn.size());
  for (std::size_t k = 0; k < bn.size(); ++k) {
    const Point2& p = mesh_.node(bn[k]);
    const Point2& q = mesh_.node(bn[(k + 1) % bn.size()]);
    bedge_len_[k] = std::hypot(p.x - q.x, p.y - q.y);
  }
}

ElementGradients P1Space::gradient(const Eigen::VectorXd& v) const {
  check_size(v.size(), node_count(), "gradient");
  ElementGradients g(triangle_count(), 2);
  for (Index t = 0; t < triangle_count(); ++t) {
    const auto& tri = mesh_.triangle(static_cast<std::size_t>(t));
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double vk = v[tri[static_cast<std::size_t>(k)]];
      gx += vk * bgrad_(t, 2 * k);
      gy += vk * bgrad_(t, 2 * k + 1);
    }
    g(t, 0) = gx;
    g(t, 1) = gy;
  }
  return g;
}

Eigen::VectorXd P1Space::gradient_sq(const Eigen::VectorXd& v) const {
  return gradient(v).rowwise().squaredNorm();
}

ElementField P1Space::element_mean(const NodalField& v) const {
  check_size(v.size(), node_count(), "element_mean");
  Eigen::VectorXd e(triangle_count());
  for (Index t = 0; t < triangle_count(); ++t) {
    const auto& tri = mesh_.triangle(static_cast<std::size_t>(t));
    e[t] = (v[tri[0]] + v[tri[1]] + v[tri[2]]) / 3.0;
  }
  return ElementField(std::move(e));
}

Eigen::VectorXd P1Space::scatter_to_nodes(const Eigen::VectorXd& per_element) const {
  check_size(per_element.size(), triangle_count(), "scatter_to_nodes");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(node_count());
  for (Index t = 0; t < triangle_count(); ++t) {
    const auto& tri = mesh_.triangle(static_cast<std::size_t>(t));
    const double share = per_element[t] / 3.0;
    for (int v : tri) out[v] += share;
  }
  return out;
}

SparseMatrix P1Space::stiffness(const ElementField& weight) const {
  SparseMatrix k = pattern_;
  restiffen(weight, k);
  return k;
}

SparseMatrix P1Space::stiffness(const NodalField& weight) const {
  for (Index i = 0; i < weight.size(); ++i) {
    if (!(weight[i] >= 0.0)) fail(ErrorCode::InvalidArgument, "stiffness weight must be non-negative and finite");
  }
  return stiffness(element_mean(weight));
}

void P1Space::restiffen(const ElementField& weight, SparseMatrix& k) const {
  check_size(weight.size(), triangle_count(), "stiffness weight");
  if (k.nonZeros() != pattern_.nonZeros()) fail(ErrorCode::Internal, "stiffness pattern mismatch");
  double* val = k.valuePtr();
  std::fill(val, val + k.nonZeros(), 0.0);
  for (Index t = 0; t < triangle_count(); ++t) {
    const double w = weight[t];
    if (!(w >= 0.0) || !std::isfinite(w))
      fail(ErrorCode::InvalidArgument, "stiffness weight must be non-negative and finite (triangle " +
                                           std::to_string(t) + ")");
    for (int q = 0; q < 9; ++q) val[slot_[static_cast<std::size_t>(9 * t + q)]] += w * kloc_(t, q);
  }
}

Eigen::VectorXd P1Space::boundary_load(const BoundaryValues& g) const {
  const auto& bn = mesh_.boundary_nodes();
  check_size(g.size(), static_cast<Index>(bn.size()), "boundary values");
  Eigen::VectorXd load = Eigen::VectorXd::Zero(node_count());
  for (std::size_t k = 0; k < bn.size(); ++k) {
    const std::size_t k1 = (k + 1) % bn.size();
    const double half = 0.5 * bedge_len_[k];
    load[bn[k]] += half * g[static_cast<Index>(k)];
    load[bn[k1]] += half * g[static_cast<Index>(k1)];
  }
  return load;
}

double P1Space::boundary_integral(const BoundaryValues& g) const {
  return boundary_load(g).sum();
}

BoundaryValues P1Space::boundary_trace(const Eigen::VectorXd& v) const {
  check_size(v.size(), node_count(), "boundary_trace");
  const auto& bn = mesh_.boundary_nodes();
  BoundaryValues out(static_cast<Index>(bn.size()));
  for (std::size_t k = 0; k < bn.size(); ++k) out[static_cast<Index>(k)] = v[bn[k]];
  return out;
}

ForwardSolver::ForwardSolver(std::shared_ptr<const P1Space> space) : space_(std::move(space)) {
  if (!space_) fail(ErrorCode::InvalidArgument, "null P1Space");
  const auto& mesh = space_->mesh();
  const Index n = space_->node_count();
  interior_pos_.assign(static_cast<std::size_t>(n), -1);
  free_pos_.assign(static_cast<std::size_t>(n), -1);
  const Index pin = mesh.boundary_nodes().front();
  for (Index i = 0; i < n; ++i) {
    if (!mesh.is_boundary(static_cast<int>(i))) {
      interior_pos_[static_cast<std::size_t>(i)] = static_cast<Index>(interior_.size());
      interior_.push_back(i);
    }
    if (i != pin) {
      free_pos_[static_cast<std::size_t>(i)] = static_cast<Index>(free_.size());
      free_.push_back(i);
    }
  }
  k_ = space_->stiffness(ElementField::constant(mesh.triangle_count(), 1.0));
  build_submatrix(k_, free_pos_, static_cast<Index>(free_.size()), kff_, kff_map_);
  neu_.analyzePattern(kff_);
  if (!interior_.empty()) {
    build_submatrix(k_, interior_pos_, static_cast<Index>(interior_.size()), kii_, kii_map_);
    dir_.analyzePattern(kii_);
  }
}

void ForwardSolver::set_conductivity(const ElementField& weight) {
  for (Index t = 0; t < weight.size(); ++t) {
    if (!(weight[t] > 0.0))
      fail(ErrorCode::InvalidArgument, "conductivity must be positive (triangle " + std::to_string(t) + ")");
  }
  space_->restiffen(weight, k_);
  refill(k_, kff_, kff_map_);
  neu_.factorize(kff_);
  if (neu_.info() != Eigen::Success) fail(ErrorCode::Solver, "Neumann factorization failed");
  if (!interior_.empty()) {
    refill(k_, kii_, kii_map_);
    dir_.factorize(kii_);
    if (dir_.info() != Eigen::Success) fail(ErrorCode::Solver, "Dirichlet factorization failed");
  }
  ready_ = true;
}

void ForwardSolver::set_conductivity(const NodalField& alpha) {
  for (Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] >= 0.0)) fail(ErrorCode::InvalidArgument, "conductivity must be non-negative");
  }
  set_conductivity(space_->element_mean(alpha));
}

NodalField ForwardSolver::dirichlet(const BoundaryValues& f) const {
  if (!ready_) fail(ErrorCode::Internal, "conductivity not set");
  const auto& bn = space_->mesh().boundary_nodes();
  check_size(f.size(), static_cast<Index>(bn.size()), "Dirichlet data");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(space_->node_count());
  for (std::size_t k = 0; k < bn.size(); ++k) u[bn[k]] = f[static_cast<Index>(k)];
  if (interior_.empty()) return NodalField(std::move(u));
  const Eigen::VectorXd ku = k_ * u;
  Eigen::VectorXd rhs(static_cast<Index>(interior_.size()));
  for (std::size_t k = 0; k < interior_.size(); ++k) rhs[static_cast<Index>(k)] = -ku[interior_[k]];
  const Eigen::VectorXd x = dir_.solve(rhs);
  if (dir_.info() != Eigen::Success) fail(ErrorCode::Solver, "Dirichlet solve failed");
  for (std::size_t k = 0; k < interior_.size(); ++k) u[interior_[k]] = x[static_cast<Index>(k)];
  return NodalField(std::move(u));
}

NodalField ForwardSolver::neumann_from_load(const Eigen::VectorXd& load) const {
  if (!ready_) fail(ErrorCode::Internal, "conductivity not set");
  check_size(load.size(), space_->node_count(), "Neumann load");
  const Eigen::VectorXd& m = space_->lumped_mass();
  const double total_mass = m.sum();
  // Lagrange multiplier of the mean constraint; zero for compatible loads.
  const double lambda = load.sum() / total_mass;
  Eigen::VectorXd rhs(static_cast<Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const Index i = free_[k];
    rhs[static_cast<Index>(k)] = load[i] - lambda * m[i];
  }
  const Eigen::VectorXd x = neu_.solve(rhs);
  if (neu_.info() != Eigen::Success) fail(ErrorCode::Solver, "Neumann solve failed");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(space_->node_count());
  for (std::size_t k = 0; k < free_.size(); ++k) w[free_[k]] = x[static_cast<Index>(k)];
  w.array() -= m.dot(w) / total_mass;
  return NodalField(std::move(w));
}

NodalField ForwardSolver::neumann(const BoundaryValues& g) const {
  return neumann_from_load(space_->boundary_load(g));
}

ElementGradients element_gradient(const P1Space& space, const NodalField& v) {
  return space.gradient(v.values);
}

SparseMatrix assemble_weighted_stiffness(const P1Space& space, const ElementField& weight) {
  return space.stiffness(weight);
}

SparseMatrix assemble_weighted_stiffness(const P1Space& space, const NodalField& weight) {
  return space.stiffness(weight);
}

Eigen::VectorXd assemble_boundary_pairing(const P1Space& space, const BoundaryValues& g) {
  return space.boundary_load(g);
}

namespace {
std::shared_ptr<const P1Space> borrow(const P1Space& space) {
  return std::shared_ptr<const P1Space>(&space, [](const P1Space*) {});
}
}  // namespace

NodalField extend_trace(const P1Space& space, const BoundaryValues& f) {
  ForwardSolver solver(borrow(space));
  solver.set_conductivity(ElementField::constant(space.mesh().triangle_count(), 1.0));
  return solver.dirichlet(f);
}

NodalField solve_dirichlet(const P1Space& space, const NodalField& alpha, const BoundaryValues& f) {
  ForwardSolver solver(borrow(space));
  solver.set_conductivity(alpha);
  return solver.dirichlet(f);
}

NodalField solve_neumann(const P1Space& space, const NodalField& alpha, const BoundaryValues& g) {
  const Eigen::VectorXd load = space.boundary_load(g);
  const double net = load.sum();
  const double scale = space.boundary_load(g.cwiseAbs()).sum();
  if (std::abs(net) > 1e-8 * scale)
    fail(ErrorCode::Incompatible, "flux data is not compatible: boundary integral " + std::to_string(net));
  ForwardSolver solver(borrow(space));
  solver.set_conductivity(alpha);
  return solver.neumann_from_load(load);
}

double energy(const P1Space& space, const NodalField& alpha, const NodalField& v) {
  const SparseMatrix k = space.stiffness(alpha);
  return v.values.dot(k * v.values);
}

}  // namespace bvtomo
