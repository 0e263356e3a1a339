#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string_view>
#include <vector>

#include "bvtomo/fem.hpp"
#include "bvtomo/regularizer.hpp"
#include "bvtomo/synthetic.hpp"

namespace bvtomo {

/// How the per-measurement energies are combined.
enum class DataTerm {
  Absolute,  // sum |E_m| for every N
  Signed,    // sum E_m
  Auto,      // E_1 for N = 1, sum |E_m| otherwise
};

/// What the inner argmin runs over.
enum class InnerMode {
  Reduced,  // alpha only; u and w are the direct solutions for the current alpha
  Joint,    // stacked (u, w, alpha)
};

std::string_view to_string(DataTerm d);
DataTerm data_term_from_string(std::string_view s);
std::string_view to_string(InnerMode m);
InnerMode inner_mode_from_string(std::string_view s);

struct ReconConfig {
  double kappa = 10.0;
  double mu = 1.0;
  double lambda = 0.0;
  double epsilon = 0.1;
  double phi_scale = 1.0;
  double lower = 1.0;  // b
  double upper = 2.5;  // c
  double delta = 0.2;
  int max_iters = 10;
  double tol = 1e-6;
  int max_evals = 500;
  double max_step = 0.1;
  int lbfgs_memory = 10;
  std::uint64_t seed = 0;
  DataTerm data_term = DataTerm::Absolute;
  InnerMode inner_mode = InnerMode::Reduced;
  /// Pin alpha on zone nodes through equal bounds.
  bool pin_zone = true;
  /// Value zone nodes are pinned to; NaN means `lower`.
  double zone_value = std::numeric_limits<double>::quiet_NaN();

  void validate() const;
  PotentialSpec potential() const { return {epsilon, phi_scale}; }
  double pinned_value() const { return std::isnan(zone_value) ? lower : zone_value; }
};

struct EtildeTerms {
  double dirichlet = 0.0;  // (k+1)/2 U^T K U
  double neumann = 0.0;    // (1-k)(1/2 w^T K w - L.w)
  double boundary = 0.0;   // -k <g, f>
  double total() const { return dirichlet + neumann + boundary; }
};

struct JTerms {
  std::vector<EtildeTerms> etilde;
  double data = 0.0;       // combined data term
  double smooth = 0.0;     // mu sum area omega |grad alpha|^2
  double dual = 0.0;       // mu sum area psi(omega); +inf if some omega is unattainable
  double reference = 0.0;  // lambda term
  double total() const { return data + smooth + dual + reference; }
};

/// Unknowns of the joint functional. u holds the zero-trace parts.
struct JState {
  std::vector<NodalField> u;
  std::vector<NodalField> w;
  NodalField alpha;
};

struct JGradient {
  std::vector<Eigen::VectorXd> u;  // zero at boundary nodes
  std::vector<Eigen::VectorXd> w;  // zero-sum
  Eigen::VectorXd alpha;           // all nodes
};

/// Measurement data with the per-pair precomputations the functional needs.
class Problem {
 public:
  Problem(std::shared_ptr<const P1Space> space, BoundaryDataSet data, ReconConfig cfg, NodalField alpha_ref);

  const P1Space& space() const { return *space_; }
  std::shared_ptr<const P1Space> space_ptr() const { return space_; }
  const BoundaryDataSet& data() const { return data_; }
  const ReconConfig& config() const { return cfg_; }
  const NodalField& alpha_ref() const { return alpha_ref_; }
  std::size_t pair_count() const { return data_.size(); }
  const NodalField& extension(std::size_t m) const { return eta_[m]; }
  const Eigen::VectorXd& load(std::size_t m) const { return load_[m]; }
  double flux_pairing(std::size_t m) const { return gf_[m]; }
  /// True where alpha is a free unknown.
  const std::vector<char>& free_mask() const { return free_; }

  EtildeTerms eval_Etilde(std::size_t m, const NodalField& u, const NodalField& w, const SparseMatrix& k_alpha) const;
  JTerms eval_J(const JState& s, const ElementField& omega) const;
  JGradient grad_J(const JState& s, const ElementField& omega) const;

  /// Sign factors applied to each pair's energy in the data term.
  std::vector<double> data_signs(const std::vector<EtildeTerms>& e) const;
  double combine_data(const std::vector<EtildeTerms>& e) const;

  /// Direct solutions (u as zero-trace part) for conductivity alpha.
  JState direct_state(const NodalField& alpha) const;

 private:
  std::shared_ptr<const P1Space> space_;
  BoundaryDataSet data_;
  ReconConfig cfg_;
  NodalField alpha_ref_;
  std::vector<NodalField> eta_;
  std::vector<Eigen::VectorXd> load_;
  std::vector<double> gf_;
  std::vector<char> free_;
};

/// J as a function of alpha alone, with u and w eliminated by direct solves.
/// By first-order optimality of the direct solutions the partial alpha
/// derivative is the total derivative.
class ReducedObjective {
 public:
  ReducedObjective(const Problem& problem, ElementField omega);

  /// Returns J without the omega-only dual term; fills the full nodal gradient.
  double evaluate(const NodalField& alpha, Eigen::VectorXd& grad);
  JTerms terms(const NodalField& alpha);
  const ElementField& omega() const { return omega_; }
  void set_omega(ElementField omega);

 private:
  const Problem& problem_;
  ElementField omega_;
  SparseMatrix k_omega_;
  ForwardSolver solver_;
};

/// Packs and unpacks the stacked vector (u interior per pair, w per pair,
/// alpha free nodes) used by the joint mode.
class JointLayout {
 public:
  explicit JointLayout(const Problem& problem);
  Eigen::Index size() const { return size_; }
  Eigen::VectorXd pack(const JState& s) const;
  JState unpack(const Eigen::VectorXd& x, const NodalField& alpha_template) const;
  Eigen::VectorXd pack_gradient(const JGradient& g) const;
  Eigen::Index alpha_offset() const { return alpha_offset_; }
  const std::vector<Eigen::Index>& interior() const { return interior_; }
  const std::vector<Eigen::Index>& free_nodes() const { return free_nodes_; }

 private:
  const Problem& problem_;
  std::vector<Eigen::Index> interior_;
  std::vector<Eigen::Index> free_nodes_;
  Eigen::Index size_ = 0;
  Eigen::Index alpha_offset_ = 0;
};

}  // namespace bvtomo
