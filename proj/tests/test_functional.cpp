#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "bvtomo/error.hpp"
#include "bvtomo/functional.hpp"
#include "fd_check.hpp"

using namespace bvtomo;

namespace {

std::shared_ptr<const P1Space> space_for(double h, double delta = 0.2) {
  return std::make_shared<const P1Space>(tag_delta_zone(generate_disc_mesh(2.0, h), delta));
}

Problem make_problem(const std::shared_ptr<const P1Space>& s, Geometry g, int pairs, ReconConfig cfg = {}) {
  return Problem(s, make_boundary_data(s->mesh(), g, pairs), cfg,
                 NodalField::constant(static_cast<std::size_t>(s->node_count()), 1.0));
}

BoundaryDataSet zero_data(const TriMesh& m) {
  BoundaryDataSet d = make_boundary_data(m, Geometry::Concentric, 1);
  d.pairs[0].f.setZero();
  d.pairs[0].g.setZero();
  return d;
}

}  // namespace

TEST_CASE("Etilde without data is the two quadratic forms") {
  const auto s = space_for(0.4);
  const ReconConfig cfg;
  const Problem p(s, zero_data(s->mesh()), cfg, NodalField::constant(s->node_count(), 1.0));
  std::mt19937_64 rng(11);
  const auto pt = testing::random_point(p, rng);
  const SparseMatrix k = s->stiffness(pt.state.alpha);
  const auto e = p.eval_Etilde(0, pt.state.u[0], pt.state.w[0], k);
  const double kap = cfg.kappa;
  const auto& u = pt.state.u[0].values;
  const auto& w = pt.state.w[0].values;
  CHECK(e.total() == doctest::Approx(0.5 * (kap + 1) * u.dot(k * u) + 0.5 * (1 - kap) * w.dot(k * w)).epsilon(1e-12));
  CHECK(e.boundary == 0.0);
}

TEST_CASE("doubling alpha doubles the quadratic terms") {
  const auto s = space_for(0.4);
  const Problem p = make_problem(s, Geometry::Concentric, 1);
  std::mt19937_64 rng(3);
  const auto pt = testing::random_point(p, rng);
  NodalField twice = pt.state.alpha;
  twice.values *= 2.0;
  const auto e1 = p.eval_Etilde(0, pt.state.u[0], pt.state.w[0], s->stiffness(pt.state.alpha));
  const auto e2 = p.eval_Etilde(0, pt.state.u[0], pt.state.w[0], s->stiffness(twice));
  CHECK(e2.dirichlet == doctest::Approx(2 * e1.dirichlet).epsilon(1e-13));
  const double lw = (1 - p.config().kappa) * p.load(0).dot(pt.state.w[0].values);
  CHECK(e2.neumann + lw == doctest::Approx(2 * (e1.neumann + lw)).epsilon(1e-13));
  CHECK(e2.boundary == e1.boundary);
}

TEST_CASE("Etilde at the direct solutions") {
  const auto s = space_for(0.3);
  ReconConfig cfg;
  cfg.data_term = DataTerm::Signed;
  const Problem p = make_problem(s, Geometry::Concentric, 1, cfg);
  const NodalField alpha = exact_alpha_nodes(s->mesh(), inclusion_for(Geometry::Concentric));
  const JState d = p.direct_state(alpha);
  const SparseMatrix k = s->stiffness(alpha);
  const auto e = p.eval_Etilde(0, d.u[0], d.w[0], k);
  const Eigen::VectorXd big_u = d.u[0].values + p.extension(0).values;
  const double kap = cfg.kappa;
  const double lw = p.load(0).dot(d.w[0].values);
  // <Lambda f, f> = U^T K U and <g, Lambda^-1 g> = L.w at the discrete solutions.
  const double expected = 0.5 * (kap + 1) * big_u.dot(k * big_u) - 0.5 * (1 - kap) * lw - kap * p.flux_pairing(0);
  CHECK(e.total() == doctest::Approx(expected).epsilon(1e-10));
  // The reconstruction residual <g, f - Lambda^-1 g> is small for the true conductivity.
  const double f_energy = big_u.dot(k * big_u);
  CHECK(std::abs(f_energy - p.flux_pairing(0)) < 0.05 * f_energy);
  CHECK(std::abs(lw - p.flux_pairing(0)) < 0.05 * lw);
}

TEST_CASE("decomposition identity around the direct solutions") {
  const auto s = space_for(0.4);
  for (double kap : {0.5, 10.0}) {
    ReconConfig cfg;
    cfg.kappa = kap;
    const Problem p = make_problem(s, Geometry::Concentric, 1, cfg);
    std::mt19937_64 rng(5);
    const auto pt = testing::random_point(p, rng);
    const JState d = p.direct_state(pt.state.alpha);
    const SparseMatrix k = s->stiffness(pt.state.alpha);
    const double lhs = p.eval_Etilde(0, pt.state.u[0], pt.state.w[0], k).total() - p.eval_Etilde(0, d.u[0], d.w[0], k).total();
    const Eigen::VectorXd du = pt.state.u[0].values - d.u[0].values;
    const Eigen::VectorXd dw = pt.state.w[0].values - d.w[0].values;
    const double rhs = 0.5 * (kap + 1) * du.dot(k * du) + 0.5 * (1 - kap) * dw.dot(k * dw);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    if (kap < 1) CHECK(lhs >= 0.0);
  }
}

TEST_CASE("J reductions") {
  const auto s = space_for(0.4);
  ReconConfig cfg;
  cfg.mu = 0.0;
  cfg.data_term = DataTerm::Auto;
  const Problem p = make_problem(s, Geometry::Concentric, 1, cfg);
  std::mt19937_64 rng(9);
  const auto pt = testing::random_point(p, rng);
  const JTerms j = p.eval_J(pt.state, pt.omega);
  const auto e = p.eval_Etilde(0, pt.state.u[0], pt.state.w[0], s->stiffness(pt.state.alpha));
  CHECK(j.total() == doctest::Approx(e.total()).epsilon(1e-14));
  CHECK(j.smooth == 0.0);
  CHECK(j.dual == 0.0);

  ReconConfig reg;
  reg.mu = 0.7;
  const Problem q = make_problem(s, Geometry::Concentric, 1, reg);
  JState flat = pt.state;
  flat.alpha = NodalField::constant(s->node_count(), 1.3);
  const JTerms jf = q.eval_J(flat, pt.omega);
  double dual = 0.0;
  for (Eigen::Index t = 0; t < pt.omega.size(); ++t) dual += 0.7 * s->areas()[t] * psi_eps(pt.omega[t], reg.potential());
  CHECK(std::abs(jf.smooth) < 1e-20);
  CHECK(jf.dual == doctest::Approx(dual).epsilon(1e-12));
  CHECK(std::isinf(q.eval_J(flat, ElementField::constant(s->mesh().triangle_count(), 0.0)).dual));
}

TEST_CASE("data term combinations") {
  const auto s = space_for(0.5);
  std::vector<EtildeTerms> e(2);
  e[0].dirichlet = -3.0;
  e[1].dirichlet = 4.0;
  for (auto [mode, expected] : {std::pair{DataTerm::Absolute, 7.0}, {DataTerm::Auto, 7.0}, {DataTerm::Signed, 1.0}}) {
    ReconConfig cfg;
    cfg.data_term = mode;
    CHECK(make_problem(s, Geometry::Concentric, 2, cfg).combine_data(e) == expected);
  }
  std::vector<EtildeTerms> one(1);
  one[0].neumann = -2.5;
  ReconConfig autom;
  autom.data_term = DataTerm::Auto;
  CHECK(make_problem(s, Geometry::Concentric, 1, autom).combine_data(one) == -2.5);
  CHECK(make_problem(s, Geometry::Concentric, 1).combine_data(one) == 2.5);
  CHECK(data_term_from_string(to_string(DataTerm::Signed)) == DataTerm::Signed);
  CHECK_THROWS_AS(data_term_from_string("squared"), Error);
}

TEST_CASE("grad_J agrees with central differences") {
  const auto s = space_for(0.5);
  std::mt19937_64 rng(2024);
  struct Case {
    Geometry g;
    int pairs;
    DataTerm term;
  };
  for (const Case c : {Case{Geometry::Concentric, 1, DataTerm::Signed}, Case{Geometry::Concentric, 2, DataTerm::Absolute},
                       Case{Geometry::Concentric, 5, DataTerm::Absolute}, Case{Geometry::StrongEccentric, 1, DataTerm::Absolute},
                       Case{Geometry::MildEccentric, 1, DataTerm::Absolute}}) {
    ReconConfig cfg;
    cfg.mu = 0.5;
    cfg.lambda = 0.3;
    cfg.data_term = c.term;
    const Problem p = make_problem(s, c.g, c.pairs, cfg);
    const auto pt = testing::random_point(p, rng);
    CHECK(testing::fd_gradient_error(p, pt.state, pt.omega) <= 1e-5);
  }
}

TEST_CASE("first-order conditions at the direct solutions") {
  const auto s = space_for(0.4);
  const Problem p = make_problem(s, Geometry::Concentric, 2);
  std::mt19937_64 rng(4);
  const auto pt = testing::random_point(p, rng);
  const JState d = p.direct_state(pt.state.alpha);
  const JGradient g = p.grad_J(d, pt.omega);
  for (std::size_t m = 0; m < 2; ++m) {
    const double scale = (p.config().kappa + 1) * (s->stiffness(pt.state.alpha) * (d.u[m].values + p.extension(m).values)).cwiseAbs().maxCoeff() + 1.0;
    CHECK(g.u[m].cwiseAbs().maxCoeff() < 1e-9 * scale);
    CHECK(g.w[m].cwiseAbs().maxCoeff() < 1e-9 * (p.load(m).cwiseAbs().maxCoeff() * p.config().kappa + 1.0));
  }
}

TEST_CASE("alpha gradient vanishes without data and regularization") {
  const auto s = space_for(0.4);
  ReconConfig cfg;
  cfg.mu = 0.0;
  const Problem p(s, zero_data(s->mesh()), cfg, NodalField::constant(s->node_count(), 1.0));
  std::mt19937_64 rng(8);
  auto pt = testing::random_point(p, rng);
  pt.state.u[0].values.setZero();
  pt.state.w[0].values.setZero();
  CHECK(p.grad_J(pt.state, pt.omega).alpha.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reduced objective: value, gradient and descent") {
  const auto s = space_for(0.5);
  ReconConfig cfg;
  cfg.mu = 0.4;
  const Problem p = make_problem(s, Geometry::StrongEccentric, 1, cfg);
  std::mt19937_64 rng(77);
  const auto pt = testing::random_point(p, rng);
  ReducedObjective r(p, pt.omega);
  Eigen::VectorXd grad;
  const double v = r.evaluate(pt.state.alpha, grad);
  const JTerms j = r.terms(pt.state.alpha);
  CHECK(v == doctest::Approx(j.data + j.smooth + j.reference).epsilon(1e-10));

  // The partial alpha gradient at the direct solutions is the total derivative.
  const JGradient partial = p.grad_J(p.direct_state(pt.state.alpha), pt.omega);
  CHECK((partial.alpha - grad).cwiseAbs().maxCoeff() <= 1e-9 * grad.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); i += 7) {
    if (!p.free_mask()[static_cast<std::size_t>(i)]) continue;
    NodalField a = pt.state.alpha;
    const double h = 1e-6 * a[i];
    Eigen::VectorXd dummy;
    a[i] += h;
    const double fp = r.evaluate(a, dummy);
    a[i] -= 2 * h;
    const double fm = r.evaluate(a, dummy);
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), 1e-3 * grad.cwiseAbs().maxCoeff()));
  }
  CHECK(worst <= 1e-5);

  // A small step along the negative free gradient lowers the objective.
  NodalField a = pt.state.alpha;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (p.free_mask()[static_cast<std::size_t>(i)]) a[i] -= 1e-6 * grad[i] / grad.cwiseAbs().maxCoeff();
  }
  Eigen::VectorXd dummy;
  CHECK(r.evaluate(a, dummy) < v);
}

TEST_CASE("omega update never raises J") {
  const auto s = space_for(0.4);
  ReconConfig cfg;
  cfg.mu = 1.0;
  const Problem p = make_problem(s, Geometry::Concentric, 1, cfg);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const auto pt = testing::random_point(p, rng);
    const Eigen::VectorXd gsq = s->gradient_sq(pt.state.alpha.values);
    const ElementField fresh = omega_update(ElementField(gsq.cwiseSqrt()), cfg.potential());
    const double before = p.eval_J(pt.state, pt.omega).total();
    const double after = p.eval_J(pt.state, fresh).total();
    CHECK(after <= before + 1e-10 * std::abs(before));
  }
}

TEST_CASE("zone pinning and validation") {
  const auto s = space_for(0.4, 0.3);
  const Problem p = make_problem(s, Geometry::Concentric, 1);
  for (std::size_t i = 0; i < s->mesh().node_count(); ++i)
    CHECK(static_cast<bool>(p.free_mask()[i]) == !s->mesh().in_delta_zone(static_cast<int>(i)));
  ReconConfig loose;
  loose.pin_zone = false;
  const Problem q = make_problem(s, Geometry::Concentric, 1, loose);
  for (char f : q.free_mask()) CHECK(f == 1);

  ReconConfig bad;
  bad.lower = 3.0;
  CHECK_THROWS_AS(make_problem(s, Geometry::Concentric, 1, bad), Error);
  bad = ReconConfig{};
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(make_problem(s, Geometry::Concentric, 1, bad), Error);
  BoundaryDataSet wrong = make_boundary_data(s->mesh(), Geometry::Concentric, 1);
  wrong.pairs[0].f.conservativeResize(3);
  CHECK_THROWS_AS(Problem(s, wrong, ReconConfig{}, NodalField::constant(s->node_count(), 1.0)), Error);
}
