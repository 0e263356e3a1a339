#include "bvtomo/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bvtomo/error.hpp"

namespace bvtomo {

namespace {

double weighted_median(std::vector<std::pair<double, double>> vw) {
  if (vw.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& p : vw) total += p.second;
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.back().first;
}

double round2(double v) { return std::isnan(v) ? v : std::round(v * 100.0) / 100.0; }

}  // namespace

UniformValues extract_uniform_values(const P1Space& space, const NodalField& alpha, const InclusionSpec& inc,
                                     double band, bool round) {
  if (!(band >= 0.0)) fail(ErrorCode::InvalidArgument, "band must be non-negative");
  const auto& mesh = space.mesh();
  const auto& mass = space.lumped_mass();
  std::vector<std::pair<double, double>> in, out;
  const double outer = mesh.radius() - mesh.delta();
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double d = inc.distance(mesh.node(static_cast<int>(i)));
    if (d < inc.radius - band) in.emplace_back(alpha[ii], mass[ii]);
    else if (d > inc.radius + band && d < outer && !mesh.in_delta_zone(static_cast<int>(i)))
      out.emplace_back(alpha[ii], mass[ii]);
  }
  UniformValues u{weighted_median(std::move(in)), weighted_median(std::move(out))};
  if (round) {
    u.alpha_in = round2(u.alpha_in);
    u.alpha_out = round2(u.alpha_out);
  }
  return u;
}

BoxSpec alpha_box(const Problem& problem, const NodalField& alpha0) {
  const auto& cfg = problem.config();
  const auto n = problem.space().node_count();
  BoxSpec box = BoxSpec::uniform(n, cfg.lower, cfg.upper);
  const auto& freem = problem.free_mask();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!freem[static_cast<std::size_t>(i)]) box.lower[i] = box.upper[i] = alpha0[i];
  }
  return box;
}

ReconResult bv_reconstruct(const Problem& problem, const ElementField& omega0, const NodalField& alpha0,
                           const ReconOptions& opts) {
  const auto& space = problem.space();
  const auto& cfg = problem.config();
  if (omega0.size() != space.triangle_count()) fail(ErrorCode::InvalidArgument, "omega0 has the wrong length");
  if (alpha0.size() != space.node_count()) fail(ErrorCode::InvalidArgument, "alpha0 has the wrong length");
  for (Eigen::Index t = 0; t < omega0.size(); ++t) {
    if (!(omega0[t] >= 0.0) || !std::isfinite(omega0[t])) fail(ErrorCode::InvalidArgument, "omega0 must be non-negative");
  }
  const auto spec = cfg.potential();

  NodalField alpha = alpha0;
  const auto& freem = problem.free_mask();
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!freem[static_cast<std::size_t>(i)]) alpha[i] = cfg.pinned_value();
    else alpha[i] = std::clamp(alpha[i], cfg.lower, cfg.upper);
  }
  const BoxSpec full_box = alpha_box(problem, alpha);

  MinimizeOptions mopts;
  mopts.tol = cfg.tol;
  mopts.max_evals = cfg.max_evals;
  mopts.max_step = cfg.max_step;
  mopts.memory = cfg.lbfgs_memory;

  std::vector<Eigen::Index> free_nodes;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (freem[static_cast<std::size_t>(i)]) free_nodes.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free_nodes.size());

  ReconResult res;
  ElementField omega = omega0;
  ReducedObjective reduced(problem, omega);
  std::optional<JointLayout> layout;
  JState joint_state;
  if (cfg.inner_mode == InnerMode::Joint) {
    layout.emplace(problem);
    const auto n = static_cast<std::size_t>(space.node_count());
    for (std::size_t m = 0; m < problem.pair_count(); ++m) {
      joint_state.u.push_back(NodalField::constant(n, 0.0));
      joint_state.w.push_back(NodalField::constant(n, 0.0));
    }
  }

  for (int it = 1; it <= cfg.max_iters; ++it) {
    IterationRecord rec;
    rec.n = it;
    try {
      if (cfg.inner_mode == InnerMode::Reduced) {
        reduced.set_omega(omega);
        Eigen::VectorXd x0(nf);
        BoxSpec box{Eigen::VectorXd(nf), Eigen::VectorXd(nf)};
        for (Eigen::Index k = 0; k < nf; ++k) {
          x0[k] = alpha[free_nodes[static_cast<std::size_t>(k)]];
          box.lower[k] = full_box.lower[free_nodes[static_cast<std::size_t>(k)]];
          box.upper[k] = full_box.upper[free_nodes[static_cast<std::size_t>(k)]];
        }
        NodalField trial = alpha;
        Eigen::VectorXd full_grad;
        auto obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
          for (Eigen::Index k = 0; k < nf; ++k) trial[free_nodes[static_cast<std::size_t>(k)]] = x[k];
          const double v = reduced.evaluate(trial, full_grad);
          for (Eigen::Index k = 0; k < nf; ++k) g[k] = full_grad[free_nodes[static_cast<std::size_t>(k)]];
          return v;
        };
        const auto r = minimize(obj, x0, box, mopts);
        for (Eigen::Index k = 0; k < nf; ++k) alpha[free_nodes[static_cast<std::size_t>(k)]] = r.x[k];
        rec.inner = r.report;
      } else {
        joint_state.alpha = alpha;
        const Eigen::VectorXd x0 = layout->pack(joint_state);
        BoxSpec box = BoxSpec::unbounded(layout->size());
        for (Eigen::Index k = 0; k < nf; ++k) {
          box.lower[layout->alpha_offset() + k] = full_box.lower[free_nodes[static_cast<std::size_t>(k)]];
          box.upper[layout->alpha_offset() + k] = full_box.upper[free_nodes[static_cast<std::size_t>(k)]];
        }
        auto obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
          const JState s = layout->unpack(x, alpha);
          const JTerms j = problem.eval_J(s, omega);
          g = layout->pack_gradient(problem.grad_J(s, omega));
          return j.data + j.smooth + j.reference;
        };
        const auto r = minimize(obj, x0, box, mopts);
        joint_state = layout->unpack(r.x, alpha);
        alpha = joint_state.alpha;
        rec.inner = r.report;
      }
    } catch (const Error& e) {
      fail(e.code(), "outer iteration " + std::to_string(it) + ": " + e.what());
    }
    rec.inner_objective = rec.inner.objective;

    if (!opts.freeze_omega) {
      const Eigen::VectorXd gsq = space.gradient_sq(alpha.values);
      omega = omega_update(ElementField(gsq.cwiseSqrt()), spec);
    }

    const JState state = cfg.inner_mode == InnerMode::Joint ? joint_state : problem.direct_state(alpha);
    rec.terms = problem.eval_J(state, omega);
    rec.omega_min = omega.values.minCoeff();
    double low = 0.0;
    for (Eigen::Index t = 0; t < omega.size(); ++t) {
      if (omega[t] < 0.5) low += space.areas()[t];
    }
    rec.omega_low_fraction = low / space.areas().sum();
    if (opts.inclusion) {
      const auto uv = extract_uniform_values(space, alpha, *opts.inclusion, opts.band);
      rec.alpha_in = uv.alpha_in;
      rec.alpha_out = uv.alpha_out;
    } else {
      rec.alpha_in = rec.alpha_out = std::numeric_limits<double>::quiet_NaN();
    }
    res.history.push_back(rec);
  }

  const JState final_state = cfg.inner_mode == InnerMode::Joint && cfg.max_iters > 0 ? joint_state
                                                                                      : problem.direct_state(alpha);
  for (std::size_t m = 0; m < problem.pair_count(); ++m) {
    NodalField u = final_state.u[m];
    u.values += problem.extension(m).values;
    res.u.push_back(std::move(u));
    res.w.push_back(final_state.w[m]);
  }
  res.alpha = std::move(alpha);
  res.omega = std::move(omega);
  return res;
}

ReconConfig physical_config(ReconConfig cfg) {
  cfg.lower = std::min(cfg.lower, 0.5);
  cfg.upper = std::max(cfg.upper, 5.0);
  cfg.zone_value = 1.0;
  cfg.max_iters = 1;
  return cfg;
}

ReconResult physical_reconstruct(std::shared_ptr<const P1Space> space, const BoundaryDataSet& data,
                                 const ReconConfig& cfg, const InclusionSpec& inc, bool tikhonov) {
  const ReconConfig pcfg = physical_config(cfg);
  const auto& mesh = space->mesh();
  const double ell = 0.02;
  const NodalField alpha0 = build_alpha0(mesh, Alpha0Mode::ThreeValued, inc, ell, pcfg.pinned_value());
  const ElementField omega0 = build_omega0(mesh, inc, ell, tikhonov);
  const Problem problem(std::move(space), data, pcfg, alpha0);
  ReconOptions opts;
  opts.inclusion = inc;
  opts.band = ell / 2.0 + mesh.h();
  return bv_reconstruct(problem, omega0, alpha0, opts);
}

}  // namespace bvtomo
