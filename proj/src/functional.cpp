#include "bvtomo/functional.hpp"

#include <cmath>
#include <string>

#include "bvtomo/error.hpp"

namespace bvtomo {

std::string_view to_string(DataTerm d) {
  switch (d) {
    case DataTerm::Absolute: return "abs";
    case DataTerm::Signed: return "signed";
    case DataTerm::Auto: return "auto";
  }
  return "abs";
}

DataTerm data_term_from_string(std::string_view s) {
  if (s == "abs") return DataTerm::Absolute;
  if (s == "signed") return DataTerm::Signed;
  if (s == "auto") return DataTerm::Auto;
  fail(ErrorCode::InvalidArgument, "unknown data term '" + std::string(s) + "'");
}

std::string_view to_string(InnerMode m) { return m == InnerMode::Reduced ? "reduced" : "joint"; }

InnerMode inner_mode_from_string(std::string_view s) {
  if (s == "reduced") return InnerMode::Reduced;
  if (s == "joint") return InnerMode::Joint;
  fail(ErrorCode::InvalidArgument, "unknown inner mode '" + std::string(s) + "'");
}

void ReconConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidArgument, m); };
  if (!std::isfinite(kappa)) bad("kappa must be finite");
  if (!(mu >= 0.0) || !std::isfinite(mu)) bad("mu must be non-negative");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be non-negative");
  potential().validate();
  if (!(lower > 0.0)) bad("lower bound b must be positive");
  if (!(lower <= upper) || !std::isfinite(upper)) bad("bounds must satisfy b <= c");
  if (!(delta >= 0.0)) bad("delta must be non-negative");
  if (max_iters < 0) bad("max_iters must be non-negative");
  if (!(tol > 0.0)) bad("tol must be positive");
  if (max_evals < 1) bad("max_evals must be positive");
  if (!(max_step > 0.0)) bad("max_step must be positive");
  if (lbfgs_memory < 1) bad("lbfgs_memory must be positive");
  if (!std::isnan(zone_value) && !(zone_value > 0.0)) bad("zone_value must be positive");
}

Problem::Problem(std::shared_ptr<const P1Space> space, BoundaryDataSet data, ReconConfig cfg, NodalField alpha_ref)
    : space_(std::move(space)), data_(std::move(data)), cfg_(cfg), alpha_ref_(std::move(alpha_ref)) {
  if (!space_) fail(ErrorCode::InvalidArgument, "null P1Space");
  cfg_.validate();
  if (data_.size() == 0) fail(ErrorCode::InvalidArgument, "no boundary data");
  const auto& mesh = space_->mesh();
  const auto nb = static_cast<Eigen::Index>(mesh.boundary_nodes().size());
  if (alpha_ref_.size() != space_->node_count())
    fail(ErrorCode::InvalidArgument, "reference conductivity has the wrong length");
  ForwardSolver unit(space_);
  unit.set_conductivity(ElementField::constant(mesh.triangle_count(), 1.0));
  for (const auto& p : data_.pairs) {
    if (p.f.size() != nb || p.g.size() != nb)
      fail(ErrorCode::InvalidArgument, "boundary data size does not match the mesh boundary");
    if (!p.f.allFinite() || !p.g.allFinite()) fail(ErrorCode::InvalidArgument, "boundary data is not finite");
    eta_.push_back(unit.dirichlet(p.f));
    load_.push_back(space_->boundary_load(p.g));
    gf_.push_back(space_->boundary_load(p.g).dot(eta_.back().values));
  }
  free_.assign(mesh.node_count(), 1);
  if (cfg_.pin_zone) {
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if (mesh.in_delta_zone(static_cast<int>(i))) free_[i] = 0;
    }
  }
}

EtildeTerms Problem::eval_Etilde(std::size_t m, const NodalField& u, const NodalField& w,
                                 const SparseMatrix& k_alpha) const {
  const double k = cfg_.kappa;
  const Eigen::VectorXd big_u = u.values + eta_[m].values;
  EtildeTerms e;
  e.dirichlet = 0.5 * (k + 1.0) * big_u.dot(k_alpha * big_u);
  e.neumann = (1.0 - k) * (0.5 * w.values.dot(k_alpha * w.values) - load_[m].dot(w.values));
  e.boundary = -k * gf_[m];
  return e;
}

std::vector<double> Problem::data_signs(const std::vector<EtildeTerms>& e) const {
  std::vector<double> s(e.size(), 1.0);
  const bool absolute = cfg_.data_term == DataTerm::Absolute || (cfg_.data_term == DataTerm::Auto && e.size() > 1);
  if (absolute) {
    for (std::size_t m = 0; m < e.size(); ++m) s[m] = e[m].total() < 0.0 ? -1.0 : 1.0;
  }
  return s;
}

double Problem::combine_data(const std::vector<EtildeTerms>& e) const {
  const auto s = data_signs(e);
  double d = 0.0;
  for (std::size_t m = 0; m < e.size(); ++m) d += s[m] * e[m].total();
  return d;
}

JTerms Problem::eval_J(const JState& s, const ElementField& omega) const {
  if (s.u.size() != pair_count() || s.w.size() != pair_count())
    fail(ErrorCode::InvalidArgument, "state does not match the number of data pairs");
  const SparseMatrix k_alpha = space_->stiffness(s.alpha);
  JTerms j;
  for (std::size_t m = 0; m < pair_count(); ++m) j.etilde.push_back(eval_Etilde(m, s.u[m], s.w[m], k_alpha));
  j.data = combine_data(j.etilde);
  const auto spec = cfg_.potential();
  const Eigen::VectorXd gsq = space_->gradient_sq(s.alpha.values);
  const auto& area = space_->areas();
  if (omega.size() != space_->triangle_count()) fail(ErrorCode::InvalidArgument, "omega has the wrong length");
  for (Eigen::Index t = 0; t < omega.size(); ++t) {
    j.smooth += cfg_.mu * area[t] * omega[t] * gsq[t];
    if (cfg_.mu != 0.0) j.dual += cfg_.mu * area[t] * psi_eps_or_inf(omega[t], spec);
  }
  if (cfg_.lambda != 0.0) {
    const auto& mesh = space_->mesh();
    const auto& mass = space_->lumped_mass();
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if (!mesh.in_delta_zone(static_cast<int>(i))) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double d = s.alpha[ii] - alpha_ref_[ii];
      j.reference += 0.5 * cfg_.lambda * mass[ii] * d * d;
    }
  }
  return j;
}

JGradient Problem::grad_J(const JState& s, const ElementField& omega) const {
  const double k = cfg_.kappa;
  const SparseMatrix k_alpha = space_->stiffness(s.alpha);
  std::vector<EtildeTerms> e;
  for (std::size_t m = 0; m < pair_count(); ++m) e.push_back(eval_Etilde(m, s.u[m], s.w[m], k_alpha));
  const auto sign = data_signs(e);
  const auto& mesh = space_->mesh();
  const auto& area = space_->areas();

  JGradient g;
  Eigen::VectorXd per_element = Eigen::VectorXd::Zero(space_->triangle_count());
  for (std::size_t m = 0; m < pair_count(); ++m) {
    const Eigen::VectorXd big_u = s.u[m].values + eta_[m].values;
    Eigen::VectorXd du = sign[m] * (k + 1.0) * (k_alpha * big_u);
    for (int b : mesh.boundary_nodes()) du[b] = 0.0;
    g.u.push_back(std::move(du));
    Eigen::VectorXd dw = sign[m] * (1.0 - k) * (k_alpha * s.w[m].values - load_[m]);
    dw.array() -= dw.mean();
    g.w.push_back(std::move(dw));
    const Eigen::VectorXd gu = space_->gradient_sq(big_u);
    const Eigen::VectorXd gw = space_->gradient_sq(s.w[m].values);
    per_element += sign[m] * (area.array() * (0.5 * (k + 1.0) * gu.array() + 0.5 * (1.0 - k) * gw.array())).matrix();
  }
  g.alpha = space_->scatter_to_nodes(per_element);
  if (cfg_.mu != 0.0) g.alpha += 2.0 * cfg_.mu * (space_->stiffness(omega) * s.alpha.values);
  if (cfg_.lambda != 0.0) {
    const auto& mass = space_->lumped_mass();
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if (!mesh.in_delta_zone(static_cast<int>(i))) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      g.alpha[ii] += cfg_.lambda * mass[ii] * (s.alpha[ii] - alpha_ref_[ii]);
    }
  }
  return g;
}

JState Problem::direct_state(const NodalField& alpha) const {
  ForwardSolver solver(space_);
  solver.set_conductivity(alpha);
  JState s;
  s.alpha = alpha;
  for (std::size_t m = 0; m < pair_count(); ++m) {
    NodalField u = solver.dirichlet(data_.pairs[m].f);
    u.values -= eta_[m].values;
    s.u.push_back(std::move(u));
    s.w.push_back(solver.neumann_from_load(load_[m]));
  }
  return s;
}

ReducedObjective::ReducedObjective(const Problem& problem, ElementField omega)
    : problem_(problem), solver_(problem.space_ptr()) {
  set_omega(std::move(omega));
}

void ReducedObjective::set_omega(ElementField omega) {
  if (omega.size() != problem_.space().triangle_count()) fail(ErrorCode::InvalidArgument, "omega has the wrong length");
  omega_ = std::move(omega);
  k_omega_ = problem_.space().stiffness(omega_);
}

double ReducedObjective::evaluate(const NodalField& alpha, Eigen::VectorXd& grad) {
  const auto& space = problem_.space();
  const auto& cfg = problem_.config();
  const double k = cfg.kappa;
  solver_.set_conductivity(alpha);
  const SparseMatrix& k_alpha = solver_.stiffness();
  const std::size_t n_pairs = problem_.pair_count();
  std::vector<EtildeTerms> e(n_pairs);
  std::vector<Eigen::VectorXd> gu(n_pairs), gw(n_pairs);
  for (std::size_t m = 0; m < n_pairs; ++m) {
    const NodalField big_u = solver_.dirichlet(problem_.data().pairs[m].f);
    const NodalField w = solver_.neumann_from_load(problem_.load(m));
    e[m].dirichlet = 0.5 * (k + 1.0) * big_u.values.dot(k_alpha * big_u.values);
    e[m].neumann = (1.0 - k) * (0.5 * w.values.dot(k_alpha * w.values) - problem_.load(m).dot(w.values));
    e[m].boundary = -k * problem_.flux_pairing(m);
    gu[m] = space.gradient_sq(big_u.values);
    gw[m] = space.gradient_sq(w.values);
  }
  const auto sign = problem_.data_signs(e);
  double value = 0.0;
  Eigen::VectorXd per_element = Eigen::VectorXd::Zero(space.triangle_count());
  for (std::size_t m = 0; m < n_pairs; ++m) {
    value += sign[m] * e[m].total();
    per_element += sign[m] * (space.areas().array() *
                              (0.5 * (k + 1.0) * gu[m].array() + 0.5 * (1.0 - k) * gw[m].array()))
                                 .matrix();
  }
  grad = space.scatter_to_nodes(per_element);
  if (cfg.mu != 0.0) {
    const Eigen::VectorXd ka = k_omega_ * alpha.values;
    value += cfg.mu * alpha.values.dot(ka);
    grad += 2.0 * cfg.mu * ka;
  }
  if (cfg.lambda != 0.0) {
    const auto& mesh = space.mesh();
    const auto& mass = space.lumped_mass();
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      if (!mesh.in_delta_zone(static_cast<int>(i))) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double d = alpha[ii] - problem_.alpha_ref()[ii];
      value += 0.5 * cfg.lambda * mass[ii] * d * d;
      grad[ii] += cfg.lambda * mass[ii] * d;
    }
  }
  return value;
}

JTerms ReducedObjective::terms(const NodalField& alpha) {
  return problem_.eval_J(problem_.direct_state(alpha), omega_);
}

JointLayout::JointLayout(const Problem& problem) : problem_(problem) {
  const auto& mesh = problem.space().mesh();
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.is_boundary(static_cast<int>(i))) interior_.push_back(static_cast<Eigen::Index>(i));
    if (problem.free_mask()[i]) free_nodes_.push_back(static_cast<Eigen::Index>(i));
  }
  const auto n = problem.space().node_count();
  const auto pairs = static_cast<Eigen::Index>(problem.pair_count());
  alpha_offset_ = pairs * (static_cast<Eigen::Index>(interior_.size()) + n);
  size_ = alpha_offset_ + static_cast<Eigen::Index>(free_nodes_.size());
}

Eigen::VectorXd JointLayout::pack(const JState& s) const {
  Eigen::VectorXd x(size_);
  const auto n = problem_.space().node_count();
  Eigen::Index o = 0;
  for (std::size_t m = 0; m < problem_.pair_count(); ++m) {
    for (auto i : interior_) x[o++] = s.u[m][i];
    x.segment(o, n) = s.w[m].values;
    o += n;
  }
  for (auto i : free_nodes_) x[o++] = s.alpha[i];
  return x;
}

JState JointLayout::unpack(const Eigen::VectorXd& x, const NodalField& alpha_template) const {
  if (x.size() != size_) fail(ErrorCode::InvalidArgument, "stacked vector has the wrong length");
  const auto n = problem_.space().node_count();
  JState s;
  Eigen::Index o = 0;
  for (std::size_t m = 0; m < problem_.pair_count(); ++m) {
    NodalField u = NodalField::constant(static_cast<std::size_t>(n), 0.0);
    for (auto i : interior_) u[i] = x[o++];
    s.u.push_back(std::move(u));
    s.w.emplace_back(Eigen::VectorXd(x.segment(o, n)));
    o += n;
  }
  s.alpha = alpha_template;
  for (auto i : free_nodes_) s.alpha[i] = x[o++];
  return s;
}

Eigen::VectorXd JointLayout::pack_gradient(const JGradient& g) const {
  Eigen::VectorXd x(size_);
  const auto n = problem_.space().node_count();
  Eigen::Index o = 0;
  for (std::size_t m = 0; m < problem_.pair_count(); ++m) {
    for (auto i : interior_) x[o++] = g.u[m][i];
    x.segment(o, n) = g.w[m];
    o += n;
  }
  for (auto i : free_nodes_) x[o++] = g.alpha[i];
  return x;
}

}  // namespace bvtomo
