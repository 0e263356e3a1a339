#include "bvtomo/optimizer.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "bvtomo/error.hpp"

namespace bvtomo {

BoxSpec BoxSpec::unbounded(Eigen::Index n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

BoxSpec BoxSpec::uniform(Eigen::Index n, double lo, double hi) {
  return {Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

void BoxSpec::validate(Eigen::Index n) const {
  if (lower.size() != n || upper.size() != n) fail(ErrorCode::InvalidArgument, "box size does not match x");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
      fail(ErrorCode::InvalidArgument, "box has lower > upper at index " + std::to_string(i));
  }
}

Eigen::VectorXd BoxSpec::project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Eigen::VectorXd BoxSpec::projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
  return x - project(x - g);
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxEvaluations: return "max_evaluations";
    case StopReason::LineSearchFailed: return "line_search_failed";
  }
  return "converged";
}

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

MinimizeResult minimize(const Objective& f, const Eigen::VectorXd& x0, const BoxSpec& box,
                        const MinimizeOptions& opts) {
  const Eigen::Index n = x0.size();
  box.validate(n);
  if (!(opts.tol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (opts.max_evals < 1) fail(ErrorCode::InvalidArgument, "max_evals must be positive");
  if (!(opts.max_step > 0.0)) fail(ErrorCode::InvalidArgument, "max_step must be positive");

  auto evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(n);
    const double v = f(x, g);
    if (!std::isfinite(v) || !g.allFinite())
      fail(ErrorCode::Solver, "objective or gradient is not finite at a feasible point");
    return v;
  };

  MinimizeResult res;
  Eigen::VectorXd x = box.project(x0);
  Eigen::VectorXd g;
  double fx = evaluate(x, g);
  int evals = 1;
  int iters = 0;
  std::deque<Pair> mem;
  StopReason reason = StopReason::MaxEvaluations;
  const double first_step = std::min(opts.max_step, 1.0);

  while (true) {
    const double pg = inf_norm(box.projected_gradient(x, g));
    if (pg <= opts.tol) {
      reason = StopReason::Converged;
      break;
    }
    if (evals >= opts.max_evals) {
      reason = StopReason::MaxEvaluations;
      break;
    }

    // Variables held at a bound by the gradient (or pinned) stay fixed.
    Eigen::ArrayXd freemask(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pinned = box.lower[i] == box.upper[i];
      const bool at_lo = x[i] <= box.lower[i] && g[i] > 0.0;
      const bool at_hi = x[i] >= box.upper[i] && g[i] < 0.0;
      freemask[i] = (pinned || at_lo || at_hi) ? 0.0 : 1.0;
    }

    Eigen::VectorXd q = (g.array() * freemask).matrix();
    std::vector<double> alphas(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
      alphas[k] = mem[k].rho * mem[k].s.dot(q);
      q -= alphas[k] * mem[k].y;
    }
    if (!mem.empty()) {
      q *= mem.back().s.dot(mem.back().y) / mem.back().y.squaredNorm();
    } else {
      const double qn = inf_norm(q);
      if (qn > 0.0) q *= first_step / qn;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const double beta = mem[k].rho * mem[k].y.dot(q);
      q += (alphas[k] - beta) * mem[k].s;
    }
    Eigen::VectorXd d = -(q.array() * freemask).matrix();
    if (g.dot(d) >= 0.0) {
      // Curvature memory produced an ascent direction; restart from steepest descent.
      mem.clear();
      d = -(g.array() * freemask).matrix();
      const double dn = inf_norm(d);
      if (dn > 0.0) d *= first_step / dn;
    }
    const double dn = inf_norm(d);
    if (dn == 0.0) {
      reason = StopReason::LineSearchFailed;
      break;
    }
    if (dn > opts.max_step) d *= opts.max_step / dn;

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double fn = fx;
    while (evals < opts.max_evals) {
      xn = box.project(x + t * d);
      fn = evaluate(xn, gn);
      ++evals;
      if (fn <= fx + opts.armijo * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
      if (t < 1e-12) break;
    }
    if (!accepted) {
      reason = evals >= opts.max_evals ? StopReason::MaxEvaluations : StopReason::LineSearchFailed;
      break;
    }
    ++iters;
    Eigen::VectorXd s = xn - x;
    Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * std::sqrt(s.squaredNorm() * y.squaredNorm())) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    const bool stalled = fn == fx && (xn - x).cwiseAbs().maxCoeff() == 0.0;
    x = std::move(xn);
    g = std::move(gn);
    fx = fn;
    if (stalled) {
      reason = StopReason::LineSearchFailed;
      break;
    }
  }

  res.x = std::move(x);
  res.report.iterations = iters;
  res.report.evaluations = evals;
  res.report.objective = fx;
  res.report.projected_gradient = inf_norm(box.projected_gradient(res.x, g));
  res.report.reason = reason;
  return res;
}

}  // namespace bvtomo
