#include "bvtomo/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bvtomo/error.hpp"

namespace bvtomo {

void PotentialSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorCode::InvalidArgument, "potential scale must be positive");
}

namespace {

void check_s(double s) {
  if (!(s >= 0.0)) fail(ErrorCode::InvalidArgument, "potential argument must be non-negative");
}

// omega for the unsmoothed potential.
double omega_base(double s, double b) { return 1.0 / std::sqrt(1.0 + (s / b) * (s / b)); }

}  // namespace

double phi(double s, const PotentialSpec& spec) {
  check_s(s);
  const double b = spec.scale;
  const double r = s / b;
  // 2b^2(sqrt(1+r^2)-1) written without cancellation.
  return 2.0 * b * b * r * r / (std::sqrt(1.0 + r * r) + 1.0);
}

double dphi(double s, const PotentialSpec& spec) {
  check_s(s);
  return 2.0 * s * omega_base(s, spec.scale);
}

double phi_eps(double s, const PotentialSpec& spec) {
  check_s(s);
  const double e = spec.epsilon;
  const double big = 1.0 / e;
  if (s <= e) {
    const double d = dphi(e, spec);
    return d / (2.0 * e) * s * s + phi(e, spec) - e * d / 2.0;
  }
  if (s <= big) return phi(s, spec);
  const double d = dphi(big, spec);
  return e * d / 2.0 * s * s + phi(big, spec) - d / (2.0 * e);
}

double dphi_eps(double s, const PotentialSpec& spec) {
  check_s(s);
  return 2.0 * s * omega_of(s, spec);
}

double omega_of(double s, const PotentialSpec& spec) {
  check_s(s);
  const double e = spec.epsilon;
  return omega_base(std::clamp(s, e, 1.0 / e), spec.scale);
}

ElementField omega_update(const ElementField& grad_norm, const PotentialSpec& spec) {
  ElementField out(Eigen::VectorXd(grad_norm.size()));
  for (Eigen::Index t = 0; t < grad_norm.size(); ++t) out[t] = omega_of(grad_norm[t], spec);
  return out;
}

double omega_max(const PotentialSpec& spec) { return omega_base(spec.epsilon, spec.scale); }
double omega_min(const PotentialSpec& spec) { return omega_base(1.0 / spec.epsilon, spec.scale); }

double psi_eps_or_inf(double omega, const PotentialSpec& spec) {
  if (std::isnan(omega)) fail(ErrorCode::InvalidArgument, "omega is NaN");
  const double lo = omega_min(spec);
  const double hi = omega_max(spec);
  if (omega < lo) return std::numeric_limits<double>::infinity();
  if (omega >= hi) return phi_eps(0.0, spec);
  // Invert omega_base on the middle branch; the clamp guards the seams.
  const double b = spec.scale;
  double s = b * std::sqrt(std::max(0.0, 1.0 / (omega * omega) - 1.0));
  s = std::clamp(s, spec.epsilon, 1.0 / spec.epsilon);
  return phi_eps(s, spec) - omega * s * s;
}

double psi_eps(double omega, const PotentialSpec& spec) {
  if (omega < omega_min(spec))
    fail(ErrorCode::InvalidArgument,
         "omega " + std::to_string(omega) + " is below the attainable range of the dual variable");
  return psi_eps_or_inf(omega, spec);
}

}  // namespace bvtomo
