// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bvtomo/experiment.hpp"
#include "bvtomo/io.hpp"
#include "fd_check.hpp"

using namespace bvtomo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Timed {
  InversionOutput out;
  double seconds = 0.0;
};

Timed invert(const ExperimentSpec& s) {
  const auto t0 = Clock::now();
  const TriMesh m = build_mesh(s);
  Timed t{run_inversion(s, m, build_data(s, m)), 0.0};
  t.seconds = seconds_since(t0);
  return t;
}

const IterationRecord& last(const Timed& t) { return t.out.result.history.back(); }

ExperimentSpec base(Geometry g, double mu) {
  ExperimentSpec s;
  s.geometry = g;
  s.ell = 0.2;
  s.recon.mu = mu;
  s.recon.kappa = 10.0;
  s.recon.epsilon = 0.1;
  s.recon.max_iters = 10;
  s.mesh.h = 0.27;
  return s;
}

Outcome forward_order() {
  const auto t0 = Clock::now();
  std::vector<double> lh, le;
  std::string detail;
  for (double h : {0.27, 0.15, 0.08}) {
    ExperimentSpec s;
    s.mesh.h = h;
    s.mesh.conform = true;
    const TriMesh m = build_mesh(s);
    const ForwardOutput f = run_forward(s, m, build_data(s, m));
    lh.push_back(std::log(m.h()));
    le.push_back(std::log(f.l2_error));
    detail += fmt("h=%.3f L2=%.3e  ", m.h(), f.l2_error);
  }
  // Least-squares slope of log(error) against log(realized h).
  const double n = 3.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    sx += lh[i];
    sy += le[i];
    sxx += lh[i] * lh[i];
    sxy += lh[i] * le[i];
  }
  const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double t = seconds_since(t0);
  return {order >= 1.6 && t < 10.0, detail + fmt("order=%.2f  %.1fs", order, t)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::mt19937_64 rng(20240607);
  const auto space = std::make_shared<const P1Space>(tag_delta_zone(generate_disc_mesh(2.0, 0.4), 0.2));
  for (Geometry g : {Geometry::Concentric, Geometry::StrongEccentric, Geometry::MildEccentric}) {
    ReconConfig cfg;
    cfg.mu = 1.0;
    const Problem p(space, make_boundary_data(space->mesh(), g, 1), cfg,
                    NodalField::constant(static_cast<std::size_t>(space->node_count()), 1.0));
    for (int k = 0; k < 5; ++k) {
      const auto pt = testing::random_point(p, rng);
      worst = std::max(worst, testing::fd_gradient_error(p, pt.state, pt.omega));
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-5 && t < 30.0, fmt("15 points, %zu nodes, max rel err=%.2e  %.1fs", space->mesh().node_count(), worst, t)};
}

Outcome duality() {
  const auto t0 = Clock::now();
  const PotentialSpec spec{0.1, 1.0};
  double env_err = 0.0;
  bool optimal = true;
  for (int i = 0; i <= 400; ++i) {
    const double s = 1e-4 * std::pow(1e8, i / 400.0);
    const double w = omega_of(s, spec);
    const double e = w * s * s + psi_eps(w, spec);
    env_err = std::max(env_err, std::abs(e - phi_eps(s, spec)) / std::max(1.0, phi_eps(s, spec)));
    for (double d : {-1e-3, 1e-3}) {
      const double v = (w + d) * s * s + psi_eps_or_inf(w + d, spec);
      optimal = optimal && v >= e - 1e-12 * std::max(1.0, e);
    }
  }
  const double t = seconds_since(t0);
  return {env_err <= 1e-8 && optimal && t < 1.0,
          fmt("max envelope err=%.2e, perturbation %s  %.3fs", env_err, optimal ? "never lower" : "lower", t)};
}

Outcome table_case(const Timed& r, double in_lo, double in_hi, double out_lo, double out_hi, double limit) {
  const auto& h = r.out.result.history;
  std::string traj;
  for (const auto& rec : h) traj += fmt("%.2f ", rec.alpha_in);
  const auto& l = last(r);
  return {in(l.alpha_in, in_lo, in_hi) && in(l.alpha_out, out_lo, out_hi) && r.seconds < limit,
          fmt("alpha_in=%.2f alpha_out=%.2f  [", l.alpha_in, l.alpha_out) + traj + fmt("]  %.1fs", r.seconds)};
}

Outcome tikhonov() {
  ExperimentSpec c = base(Geometry::Concentric, 1.0);
  c.tikhonov = true;
  ExperimentSpec e = base(Geometry::StrongEccentric, 0.1);
  e.tikhonov = true;
  const Timed rc = invert(c), re = invert(e);
  const double a = last(rc).alpha_in, b = last(re).alpha_in;
  return {a <= 1.4 && b <= 1.5, fmt("concentric alpha_in=%.2f (<=1.4), strong eccentric alpha_in=%.2f (<=1.5)  %.1fs", a, b,
                                    rc.seconds + re.seconds)};
}

Outcome multi_data() {
  bool ok = true;
  std::string detail;
  double total = 0.0;
  for (int n : {2, 5}) {
    ExperimentSpec s = base(Geometry::Concentric, 1.0);
    s.pairs = n;
    const Timed r = invert(s);
    total += r.seconds;
    detail += fmt("N=%d [", n);
    const auto& h = r.out.result.history;
    for (std::size_t k = 0; k < h.size(); ++k) {
      detail += fmt("%.2f ", h[k].alpha_in);
      if (k >= 2) ok = ok && in(h[k].alpha_in, 1.95, 2.02);
    }
    detail += "]  ";
  }
  return {ok, detail + fmt("%.1fs", total)};
}

Outcome noise() {
  double sum_in = 0.0, sum_out = 0.0, total = 0.0;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ExperimentSpec s = base(Geometry::Concentric, 1.0);
    s.pairs = 5;
    s.theta = 0.05;
    s.recon.seed = seed;
    const Timed r = invert(s);
    total += r.seconds;
    sum_in += last(r).alpha_in;
    sum_out += last(r).alpha_out;
    detail += fmt("seed %d: %.2f/%.2f  ", static_cast<int>(seed), last(r).alpha_in, last(r).alpha_out);
  }
  const double ai = sum_in / 3.0, ao = sum_out / 3.0;
  return {in(ai, 1.90, 2.05) && in(ao, 0.97, 1.03), detail + fmt("mean alpha_in=%.3f alpha_out=%.3f  %.1fs", ai, ao, total)};
}

Outcome determinism(const fs::path& work) {
  ExperimentSpec s = base(Geometry::Concentric, 1.0);
  s.pairs = 2;
  s.theta = 0.01;
  s.recon.seed = 17;
  s.recon.max_iters = 3;
  const TriMesh m = build_mesh(s);
  const auto out = run_inversion(s, m, build_data(s, m));
  write_inversion((work / "det_a").string(), s, m, out);

  ExperimentSpec again;
  const std::string manifest = read_text_file((work / "det_a" / "manifest.txt").string());
  apply_settings(again, parse_key_values(manifest, "manifest.txt"));
  const TriMesh m2 = build_mesh(again);
  write_inversion((work / "det_b").string(), again, m2, run_inversion(again, m2, build_data(again, m2)));
  const std::string a = read_text_file((work / "det_a" / "history.csv").string());
  const std::string b = read_text_file((work / "det_b" / "history.csv").string());
  return {a == b && !a.empty(), fmt("history.csv %zu bytes, %s", a.size(), a == b ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bvtomo acceptance checks"};
  std::string work = (fs::temp_directory_path() / "bvtomo_acceptance").string();
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<std::pair<int, std::function<Outcome()>>> checks{
      {1, forward_order},
      {2, gradient_check},
      {3, duality},
      {4, [] { return table_case(invert(base(Geometry::Concentric, 1.0)), 1.85, 2.00, 0.98, 1.02, 300.0); }},
      {5, [] { return table_case(invert(base(Geometry::StrongEccentric, 0.1)), 1.90, 2.00, 0.98, 1.02, 300.0); }},
      {6, tikhonov},
      {7,
       [] {
         ExperimentSpec s = base(Geometry::Concentric, 1.0);
         s.physical = true;
         return table_case(invert(s), 1.90, 2.02, 0.98, 1.02, 60.0);
       }},
      {8, multi_data},
      {9, noise},
      {10, [&] { return determinism(work); }},
  };
  int failed = 0;
  for (const auto& [id, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
