#pragma once

#include <optional>
#include <vector>

#include "bvtomo/functional.hpp"
#include "bvtomo/optimizer.hpp"

namespace bvtomo {

struct UniformValues {
  double alpha_in = 0.0;
  double alpha_out = 0.0;
};

/// Mass-weighted medians of alpha inside dist < radius - band and in the
/// shell radius + band < dist < R - delta, rounded to two decimals. An empty
/// region yields NaN.
UniformValues extract_uniform_values(const P1Space& space, const NodalField& alpha, const InclusionSpec& inc,
                                     double band, bool round = true);

struct IterationRecord {
  int n = 0;
  JTerms terms;            // at (alpha^n, omega^n), omega after its update
  double inner_objective = 0.0;
  double alpha_in = 0.0;
  double alpha_out = 0.0;
  double omega_min = 0.0;
  double omega_low_fraction = 0.0;  // area fraction with omega < 0.5
  SolveReport inner;
};

struct ReconResult {
  std::vector<NodalField> u;  // total potentials
  std::vector<NodalField> w;
  NodalField alpha;
  ElementField omega;
  std::vector<IterationRecord> history;
};

struct ReconOptions {
  /// Keeps omega at its initial value (Tikhonov control when omega0 = 1).
  bool freeze_omega = false;
  /// Used only for the alpha_in / alpha_out columns of the history.
  std::optional<InclusionSpec> inclusion;
  double band = 0.0;
};

/// Alternates the inner argmin over the unknowns with omega frozen and the
/// closed-form omega update, for cfg.max_iters outer iterations.
ReconResult bv_reconstruct(const Problem& problem, const ElementField& omega0, const NodalField& alpha0,
                           const ReconOptions& opts = {});

/// Box for the free alpha unknowns of `problem`.
BoxSpec alpha_box(const Problem& problem, const NodalField& alpha0);

/// Settings of the known-geometry run: width 0.02 ring, three-valued start,
/// bounds widened to contain [0.5, 5], zone pinned to 1, one iteration.
ReconConfig physical_config(ReconConfig cfg);
ReconResult physical_reconstruct(std::shared_ptr<const P1Space> space, const BoundaryDataSet& data,
                                 const ReconConfig& cfg, const InclusionSpec& inc, bool tikhonov = false);

}  // namespace bvtomo
