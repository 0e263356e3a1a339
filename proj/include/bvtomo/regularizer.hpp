#pragma once

#include "bvtomo/fem.hpp"

namespace bvtomo {

/// Edge-preserving potential phi(s) = 2 b^2 (sqrt(1 + (s/b)^2) - 1) with
/// b = `scale`, and its smoothing parameter. scale = 1 gives the classical
/// 2(sqrt(1+s^2) - 1), whose constants are t = 2, tau = 2, L = 0, M = 1.
struct PotentialSpec {
  double epsilon = 0.1;
  double scale = 1.0;

  void validate() const;
};

double phi(double s, const PotentialSpec& spec = {});
double dphi(double s, const PotentialSpec& spec = {});

/// C1 smoothing: quadratic below epsilon, phi on [epsilon, 1/epsilon],
/// quadratic tail beyond 1/epsilon.
double phi_eps(double s, const PotentialSpec& spec = {});
double dphi_eps(double s, const PotentialSpec& spec = {});

/// phi_eps'(s) / (2 s), finite at s = 0.
double omega_of(double s, const PotentialSpec& spec = {});
ElementField omega_update(const ElementField& grad_norm, const PotentialSpec& spec = {});

/// Largest and smallest values omega_of can return.
double omega_max(const PotentialSpec& spec = {});
double omega_min(const PotentialSpec& spec = {});

/// Dual function: psi(w) = sup_s (phi_eps(s) - w s^2). Finite for
/// w >= omega_min; equals phi_eps(0) for w >= omega_max. Throws below omega_min.
double psi_eps(double omega, const PotentialSpec& spec = {});
/// As psi_eps but returns +inf below omega_min instead of throwing.
double psi_eps_or_inf(double omega, const PotentialSpec& spec = {});

}  // namespace bvtomo
