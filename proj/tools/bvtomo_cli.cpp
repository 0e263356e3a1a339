// Command-line front end. Uses only the C interface of the library.
#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bvtomo/bvtomo.h"

namespace {

struct Failure {
  int status;
  std::string message;
};

void check(int status, const std::string& context = {}) {
  if (status != BVT_OK) {
    std::string msg = bvt_last_error();
    if (!context.empty()) msg = context + ": " + msg;
    throw Failure{status, msg};
  }
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<bvt_config, bvt_config_free>;
using Mesh = Handle<bvt_mesh, bvt_mesh_free>;
using Data = Handle<bvt_data, bvt_data_free>;
using Forward = Handle<bvt_forward, bvt_forward_free>;
using Run = Handle<bvt_run, bvt_run_free>;

std::string get_string(int (*fn)(const bvt_config*, const char*, char*, size_t, size_t*), const bvt_config* cfg,
                       const char* key) {
  size_t len = 0;
  fn(cfg, key, nullptr, 0, &len);
  std::string s(len + 1, '\0');
  check(fn(cfg, key, s.data(), s.size(), &len), key);
  s.resize(len);
  return s;
}

std::string mesh_hash(const bvt_mesh* m) {
  size_t len = 0;
  bvt_mesh_hash(m, nullptr, 0, &len);
  std::string s(len + 1, '\0');
  check(bvt_mesh_hash(m, s.data(), s.size(), &len));
  s.resize(len);
  return s;
}

// std::to_string(double) rounds to six decimals; %.17g round-trips.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Options shared by every subcommand that runs something.
struct Common {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::optional<unsigned long long> seed;
  std::string out = ".";

  std::optional<std::string> geometry;
  std::optional<double> ell, mu, theta, h;
  std::optional<int> pairs, iters;
  bool tikhonov = false, physical = false, conform = false;

  void attach(CLI::App* app, bool with_out = true) {
    app->add_option("-c,--config", configs, "key=value file; later files override earlier ones")
        ->check(CLI::ExistingFile);
    app->add_option("-s,--set", sets, "override one setting, key=value");
    app->add_option("--seed", seed, "noise seed; overrides config files, which override BVTOMO_SEED");
    if (with_out) app->add_option("-o,--out", out, "output directory");
    app->add_option("--geometry", geometry, "concentric | strong_eccentric | mild_eccentric");
    app->add_option("--ell", ell, "width of the initial contour ring");
    app->add_option("--mu", mu, "regularization weight");
    app->add_option("-N,--pairs", pairs, "number of data pairs");
    app->add_option("--theta", theta, "relative noise level");
    app->add_option("--h", h, "target mesh size of the generated disc mesh");
    app->add_option("--iters", iters, "outer iterations");
    app->add_flag("--tikhonov", tikhonov, "keep the dual field at one");
    app->add_flag("--physical", physical, "known-geometry single-iteration run");
    app->add_flag("--conform", conform, "generated mesh resolves the concentric interface");
  }

  void set(bvt_config* cfg, const std::string& k, const std::string& v) const {
    check(bvt_config_set(cfg, k.c_str(), v.c_str()), "--" + k);
  }

  /// Env seed, then config files, then --set, then dedicated flags.
  void apply(bvt_config* cfg) const {
    if (const char* env = std::getenv("BVTOMO_SEED"); env && *env) check(bvt_config_set(cfg, "seed", env), "BVTOMO_SEED");
    for (const auto& f : configs) check(bvt_config_load(cfg, f.c_str()));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Failure{BVT_E_INVALID_ARGUMENT, "--set expects key=value, got '" + kv + "'"};
      set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (geometry) set(cfg, "geometry", *geometry);
    if (ell) set(cfg, "ell", num(*ell));
    if (mu) set(cfg, "mu", num(*mu));
    if (pairs) set(cfg, "pairs", std::to_string(*pairs));
    if (theta) set(cfg, "theta", num(*theta));
    if (h) set(cfg, "mesh.h", num(*h));
    if (iters) set(cfg, "max_iters", std::to_string(*iters));
    if (tikhonov) set(cfg, "tikhonov", "true");
    if (physical) set(cfg, "physical", "true");
    if (conform) set(cfg, "mesh.conform", "true");
    if (seed) set(cfg, "seed", std::to_string(*seed));
    check(bvt_config_validate(cfg));
  }
};

void print_mesh(const bvt_mesh* m) {
  size_t nodes = 0, elements = 0, boundary = 0;
  double h = 0.0;
  check(bvt_mesh_counts(m, &nodes, &elements, &boundary));
  check(bvt_mesh_h(m, &h));
  std::printf("nodes %zu elements %zu boundary %zu h %.4f hash %s\n", nodes, elements, boundary, h, mesh_hash(m).c_str());
}

int cmd_mesh(const Common& c, const std::vector<std::string>& load) {
  Config cfg;
  check(bvt_config_new(cfg.out()));
  c.apply(cfg.get());
  if (!load.empty()) {
    check(bvt_config_set(cfg.get(), "mesh.node", load[0].c_str()));
    check(bvt_config_set(cfg.get(), "mesh.ele", load[1].c_str()));
  }
  Mesh m;
  check(bvt_mesh_build(cfg.get(), m.out()));
  check(bvt_mesh_write_csv(m.get(), c.out.c_str()));
  print_mesh(m.get());
  return 0;
}

int cmd_synth(const Common& c) {
  Config cfg;
  check(bvt_config_new(cfg.out()));
  c.apply(cfg.get());
  Mesh m;
  check(bvt_mesh_build(cfg.get(), m.out()));
  Data d;
  check(bvt_data_build(cfg.get(), m.get(), d.out()));
  check(bvt_mesh_write_csv(m.get(), c.out.c_str()));
  const std::string path = (std::filesystem::path(c.out) / "boundary_data.csv").string();
  check(bvt_data_write_csv(d.get(), path.c_str()));
  check(bvt_manifest_write(cfg.get(), m.get(), c.out.c_str()));
  size_t pairs = 0;
  check(bvt_data_pair_count(d.get(), &pairs));
  std::printf("wrote %s (%zu pairs, seed %s)\n", path.c_str(), pairs, get_string(bvt_config_get, cfg.get(), "seed").c_str());
  return 0;
}

int cmd_forward(const Common& c) {
  Config cfg;
  check(bvt_config_new(cfg.out()));
  c.apply(cfg.get());
  Mesh m;
  check(bvt_mesh_build(cfg.get(), m.out()));
  Data d;
  check(bvt_data_build(cfg.get(), m.get(), d.out()));
  Forward fw;
  check(bvt_forward_run(cfg.get(), m.get(), d.get(), fw.out()));
  check(bvt_forward_write(fw.get(), c.out.c_str()));
  double l2 = 0.0, h1 = 0.0, nl2 = 0.0;
  check(bvt_forward_errors(fw.get(), &l2, &h1, &nl2));
  print_mesh(m.get());
  std::printf("dirichlet L2 error %.6e  H1 error %.6e  neumann L2 error %.6e\n", l2, h1, nl2);
  return 0;
}

/// One grid point of a sweep: settings to apply plus its output directory.
struct Job {
  std::vector<std::pair<std::string, std::string>> settings;
  std::string dir;
};

std::vector<Job> expand_sweep(const std::vector<std::string>& sweeps, const std::string& out) {
  std::vector<Job> jobs{{{}, out}};
  if (sweeps.empty()) return jobs;
  jobs.front().dir.clear();
  for (const auto& s : sweeps) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Failure{BVT_E_INVALID_ARGUMENT, "--sweep expects key=v1,v2,..."};
    const std::string key = s.substr(0, eq);
    std::vector<std::string> values;
    std::string rest = s.substr(eq + 1);
    for (std::size_t p; (p = rest.find(',')) != std::string::npos; rest.erase(0, p + 1)) values.push_back(rest.substr(0, p));
    values.push_back(rest);
    std::vector<Job> next;
    for (const auto& j : jobs) {
      for (const auto& v : values) {
        if (v.empty()) throw Failure{BVT_E_INVALID_ARGUMENT, "--sweep " + key + " has an empty value"};
        Job n = j;
        n.settings.emplace_back(key, v);
        n.dir += (n.dir.empty() ? "" : "_") + key + "-" + v;
        next.push_back(std::move(n));
      }
    }
    jobs = std::move(next);
  }
  for (auto& j : jobs) j.dir = (std::filesystem::path(out) / j.dir).string();
  return jobs;
}

void run_one(const bvt_config* base, const Job& job, bool verbose, std::mutex& io) {
  Config cfg;
  check(bvt_config_clone(base, cfg.out()));
  for (const auto& [k, v] : job.settings) check(bvt_config_set(cfg.get(), k.c_str(), v.c_str()), "--sweep " + k);
  check(bvt_config_validate(cfg.get()));
  Mesh m;
  check(bvt_mesh_build(cfg.get(), m.out()), job.dir);
  Data d;
  check(bvt_data_build(cfg.get(), m.get(), d.out()), job.dir);
  Run r;
  const int status = bvt_invert_run(cfg.get(), m.get(), d.get(), r.out());
  if (status != BVT_OK) {
    // Keep the manifest of a failed run so it can be reproduced.
    const std::string msg = bvt_last_error();
    bvt_manifest_write(cfg.get(), m.get(), job.dir.c_str());
    throw Failure{status, job.dir + ": " + msg};
  }
  check(bvt_run_write(r.get(), job.dir.c_str()), job.dir);
  size_t n = 0;
  check(bvt_run_iterations(r.get(), &n));
  std::lock_guard<std::mutex> lock(io);
  if (verbose) {
    for (size_t it = 1; it <= n; ++it) {
      double ai = 0.0, ao = 0.0, j = 0.0;
      check(bvt_run_uniform_values(r.get(), it, &ai, &ao));
      check(bvt_run_objective(r.get(), it, &j));
      std::printf("iteration %zu  J %.6e  alpha_in %.2f  alpha_out %.2f\n", it, j, ai, ao);
    }
  } else if (n > 0) {
    double ai = 0.0, ao = 0.0;
    check(bvt_run_uniform_values(r.get(), n, &ai, &ao));
    std::printf("%s  alpha_in %.2f  alpha_out %.2f\n", job.dir.c_str(), ai, ao);
  }
  std::fflush(stdout);
}

int cmd_invert(const Common& c, const std::vector<std::string>& sweeps, int jobs_limit) {
  Config cfg;
  check(bvt_config_new(cfg.out()));
  c.apply(cfg.get());
  const auto jobs = expand_sweep(sweeps, c.out);
  std::mutex io;
  if (jobs.size() == 1) {
    run_one(cfg.get(), jobs.front(), true, io);
    return 0;
  }
  std::atomic<std::size_t> next{0};
  std::vector<Failure> failures;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < jobs.size();) {
      try {
        run_one(cfg.get(), jobs[k], false, io);
      } catch (const Failure& f) {
        std::lock_guard<std::mutex> lock(io);
        failures.push_back(f);
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, jobs_limit));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(n, jobs.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& f : failures) std::fprintf(stderr, "error: %s: %s\n", bvt_status_name(f.status), f.message.c_str());
  return failures.empty() ? 0 : 1;
}

int cmd_report(const std::string& dir, const std::string& out) {
  size_t len = 0;
  int status = bvt_report(dir.c_str(), nullptr, 0, &len);
  if (status != BVT_OK && len == 0) check(status);
  std::string text(len + 1, '\0');
  check(bvt_report(dir.c_str(), text.data(), text.size(), &len));
  text.resize(len);
  if (out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    std::ofstream f(out, std::ios::binary);
    f << text;
    if (!f) throw Failure{BVT_E_IO, "cannot write '" + out + "'"};
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-data conductivity reconstruction with an edge-preserving regularizer"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bvt_version()));

  Common mesh_opts, synth_opts, fwd_opts, inv_opts;
  auto* mesh = app.add_subcommand("mesh", "generate or convert a mesh, write nodes.csv and elements.csv");
  mesh_opts.attach(mesh);
  bool disc = false;
  std::vector<std::string> load;
  auto* disc_flag = mesh->add_flag("--disc", disc, "generate a disc mesh (default)");
  mesh->add_option("--load", load, "Triangle .node and .ele files")
      ->expected(2)
      ->check(CLI::ExistingFile)
      ->excludes(disc_flag);

  auto* synth = app.add_subcommand("synth", "write boundary_data.csv and a manifest");
  synth_opts.attach(synth);
  auto* fwd = app.add_subcommand("forward", "direct solves with the true conductivity");
  fwd_opts.attach(fwd);
  auto* inv = app.add_subcommand("invert", "reconstruct the conductivity");
  inv_opts.attach(inv);
  std::vector<std::string> sweeps;
  int jobs = 1;
  inv->add_option("--sweep", sweeps, "grid over one setting, key=v1,v2,... (repeatable); runs go to OUT/<key-value>");
  inv->add_option("-j,--jobs", jobs, "concurrent runs in a sweep")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "markdown tables from a directory of runs");
  std::string rep_dir, rep_out;
  rep->add_option("dir", rep_dir, "directory whose subdirectories are runs")->required();
  rep->add_option("-o,--out", rep_out, "write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);
  (void)disc;
  try {
    if (*mesh) return cmd_mesh(mesh_opts, load);
    if (*synth) return cmd_synth(synth_opts);
    if (*fwd) return cmd_forward(fwd_opts);
    if (*inv) return cmd_invert(inv_opts, sweeps, jobs);
    if (*rep) return cmd_report(rep_dir, rep_out);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", bvt_status_name(f.status), f.message.c_str());
    return f.status == BVT_E_INVALID_ARGUMENT ? 2 : 1;
  }
  return 0;
}
