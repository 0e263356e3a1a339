#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "bvtomo/error.hpp"
#include "bvtomo/regularizer.hpp"

using namespace bvtomo;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return s;
}

}  // namespace

TEST_CASE("potential values") {
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(1.0) == doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0)).epsilon(1e-15));
  CHECK(dphi(0.0) == 0.0);
  CHECK(dphi(1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // Small-s behaviour is s^2 without cancellation.
  CHECK(phi(1e-9) == doctest::Approx(1e-18).epsilon(1e-12));
  // Linear growth 2s for large s.
  CHECK(phi(1e6) / 1e6 == doctest::Approx(2.0).epsilon(1e-5));
  CHECK_THROWS_AS(phi(-1.0), Error);
  CHECK_THROWS_AS(omega_of(std::nan("")), Error);
}

TEST_CASE("scaled potential") {
  const PotentialSpec b{0.1, 0.5};
  CHECK(phi(1.0, b) == doctest::Approx(0.5 * (std::sqrt(5.0) - 1.0)).epsilon(1e-14));
  CHECK(omega_of(1.0, b) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-14));
  CHECK_THROWS_AS((PotentialSpec{0.1, 0.0}.validate()), Error);
  CHECK_THROWS_AS((PotentialSpec{1.5, 1.0}.validate()), Error);
}

TEST_CASE("smoothed potential is C1 at both seams") {
  const PotentialSpec spec{0.1, 1.0};
  for (double seam : {0.1, 10.0}) {
    const double lo = seam * (1 - 1e-12), hi = seam * (1 + 1e-12);
    CHECK(phi_eps(lo, spec) == doctest::Approx(phi_eps(hi, spec)).epsilon(1e-10));
    CHECK(dphi_eps(lo, spec) == doctest::Approx(dphi_eps(hi, spec)).epsilon(1e-10));
    CHECK(phi_eps(seam, spec) == doctest::Approx(phi(seam, spec)).epsilon(1e-15));
  }
  // Quadratic pieces are exact quadratics.
  CHECK(dphi_eps(0.05, spec) == doctest::Approx(0.5 * dphi_eps(0.1, spec)).epsilon(1e-14));
  CHECK(dphi_eps(40.0, spec) == doctest::Approx(4.0 * dphi_eps(10.0, spec)).epsilon(1e-14));
  // Derivative agrees with a central difference.
  for (double s : {0.03, 0.5, 3.0, 25.0}) {
    const double h = 1e-6 * s;
    const double fd = (phi_eps(s + h, spec) - phi_eps(s - h, spec)) / (2 * h);
    CHECK(dphi_eps(s, spec) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("omega is bounded and monotone") {
  const PotentialSpec spec{0.1, 1.0};
  CHECK(omega_max(spec) == doctest::Approx(1.0 / std::sqrt(1.01)).epsilon(1e-15));
  CHECK(omega_min(spec) == doctest::Approx(1.0 / std::sqrt(101.0)).epsilon(1e-15));
  CHECK(omega_of(0.0, spec) == omega_max(spec));
  CHECK(omega_of(1e9, spec) == omega_min(spec));
  double prev = 2.0;
  for (double s : log_grid(1e-4, 1e4, 200)) {
    const double w = omega_of(s, spec);
    CHECK(w <= prev);
    CHECK(w >= omega_min(spec));
    CHECK(w <= omega_max(spec));
    prev = w;
  }
  const ElementField up = omega_update(ElementField(Eigen::Vector3d(0.0, 1.0, 100.0)), spec);
  CHECK(up[0] == omega_max(spec));
  CHECK(up[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(up[2] == omega_min(spec));
}

TEST_CASE("envelope: min over omega of omega s^2 + psi(omega) is phi_eps(s)") {
  for (const PotentialSpec spec : {PotentialSpec{0.1, 1.0}, PotentialSpec{0.05, 0.3}}) {
    for (double s : log_grid(1e-4, 1e4, 161)) {
      const double w = omega_of(s, spec);
      const double env = w * s * s + psi_eps(w, spec);
      CHECK(std::abs(env - phi_eps(s, spec)) <= 1e-8 * std::max(1.0, phi_eps(s, spec)));
      for (double d : {-1e-3, 1e-3}) {
        const double wp = w + d;
        const double val = wp * s * s + psi_eps_or_inf(wp, spec);
        CHECK(val >= env - 1e-12 * std::max(1.0, env));
      }
    }
  }
}

TEST_CASE("dual function edges") {
  const PotentialSpec spec{0.1, 1.0};
  CHECK(psi_eps(omega_max(spec), spec) == doctest::Approx(phi_eps(0.0, spec)).epsilon(1e-14));
  CHECK(psi_eps(1.0, spec) == psi_eps(omega_max(spec), spec));
  CHECK(std::isinf(psi_eps_or_inf(0.5 * omega_min(spec), spec)));
  CHECK_THROWS_AS(psi_eps(0.5 * omega_min(spec), spec), Error);
  CHECK(std::isfinite(psi_eps(omega_min(spec), spec)));
  // psi is non-increasing in omega.
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double w = omega_min(spec) + (omega_max(spec) - omega_min(spec)) * i / 100.0;
    const double p = psi_eps(w, spec);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}
