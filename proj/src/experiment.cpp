#include "bvtomo/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <tuple>

#include "bvtomo/error.hpp"
#include "bvtomo/io.hpp"
#include "text_util.hpp"

namespace bvtomo {

using detail::format_double;

std::string_view library_version() { return "0.3.0"; }

void ExperimentSpec::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidArgument, m); };
  if (!(ell > 0.0) || !std::isfinite(ell)) bad("ell must be positive");
  if (pairs < 1) bad("pairs must be at least 1");
  if (geometry != Geometry::Concentric && pairs != 1) bad("eccentric geometries have a single data pair");
  if (!(theta >= 0.0) || !std::isfinite(theta)) bad("theta must be non-negative");
  const bool csv = !mesh.nodes_csv.empty() || !mesh.elements_csv.empty();
  const bool tri = !mesh.node_file.empty() || !mesh.ele_file.empty();
  if (csv && (mesh.nodes_csv.empty() || mesh.elements_csv.empty())) bad("mesh.nodes_csv and mesh.elements_csv go together");
  if (tri && (mesh.node_file.empty() || mesh.ele_file.empty())) bad("mesh.node and mesh.ele go together");
  if (!csv && !tri) {
    if (!(mesh.h > 0.0) || !(mesh.h < 2.0)) bad("mesh.h must lie in (0, 2)");
    if (mesh.conform && geometry != Geometry::Concentric) bad("mesh.conform needs the concentric geometry");
  }
  recon.validate();
}

Alpha0Mode ExperimentSpec::alpha0_mode() const {
  if (alpha0) return *alpha0;
  return geometry == Geometry::Concentric ? Alpha0Mode::Banded : Alpha0Mode::Constant;
}

KeyValues parse_key_values(std::string_view text, std::string_view origin) {
  KeyValues kv;
  for (const auto& line : detail::split_lines(text)) {
    std::string_view s = line.text;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) detail::parse_fail(origin, line.number, "expected key=value");
    const auto key = detail::trim(s.substr(0, eq));
    if (key.empty()) detail::parse_fail(origin, line.number, "empty key");
    kv.emplace_back(std::string(key), std::string(detail::trim(s.substr(eq + 1))));
  }
  return kv;
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expect) {
  fail(ErrorCode::InvalidArgument,
       "bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " + std::string(expect) + ")");
}

double to_double(std::string_view key, std::string_view v) {
  double d = 0.0;
  if (!detail::parse_double(v, d) || std::isnan(d)) bad_value(key, v, "a number");
  return d;
}

int to_int(std::string_view key, std::string_view v) {
  long l = 0;
  if (!detail::parse_long(v, l) || l < INT32_MIN || l > INT32_MAX) bad_value(key, v, "an integer");
  return static_cast<int>(l);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  v = detail::trim(v);
  std::uint64_t u = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), u);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return u;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = detail::trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Setting {
  std::string key;
  std::function<void(ExperimentSpec&, std::string_view)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

template <class Member>
Setting real(std::string key, Member m) {
  return {key, [key, m](ExperimentSpec& s, std::string_view v) { m(s) = to_double(key, v); },
          [m](const ExperimentSpec& s) { return format_double(m(const_cast<ExperimentSpec&>(s))); }};
}

template <class Member>
Setting integer(std::string key, Member m) {
  return {key, [key, m](ExperimentSpec& s, std::string_view v) { m(s) = to_int(key, v); },
          [m](const ExperimentSpec& s) { return std::to_string(m(const_cast<ExperimentSpec&>(s))); }};
}

template <class Member>
Setting boolean(std::string key, Member m) {
  return {key, [key, m](ExperimentSpec& s, std::string_view v) { m(s) = to_bool(key, v); },
          [m](const ExperimentSpec& s) { return from_bool(m(const_cast<ExperimentSpec&>(s))); }};
}

template <class Member>
Setting text(std::string key, Member m) {
  return {key, [m](ExperimentSpec& s, std::string_view v) { m(s) = std::string(v); },
          [m](const ExperimentSpec& s) { return m(const_cast<ExperimentSpec&>(s)); }};
}

const std::vector<Setting>& settings() {
  static const std::vector<Setting> all = [] {
    std::vector<Setting> v;
    v.push_back({"geometry", [](ExperimentSpec& s, std::string_view x) { s.geometry = geometry_from_string(x); },
                 [](const ExperimentSpec& s) { return std::string(to_string(s.geometry)); }});
    v.push_back(real("ell", [](ExperimentSpec& s) -> double& { return s.ell; }));
    v.push_back(boolean("tikhonov", [](ExperimentSpec& s) -> bool& { return s.tikhonov; }));
    v.push_back(boolean("physical", [](ExperimentSpec& s) -> bool& { return s.physical; }));
    v.push_back(integer("pairs", [](ExperimentSpec& s) -> int& { return s.pairs; }));
    v.push_back(real("theta", [](ExperimentSpec& s) -> double& { return s.theta; }));
    v.push_back({"seed", [](ExperimentSpec& s, std::string_view x) { s.recon.seed = to_u64("seed", x); },
                 [](const ExperimentSpec& s) { return std::to_string(s.recon.seed); }});
    v.push_back(real("mesh.h", [](ExperimentSpec& s) -> double& { return s.mesh.h; }));
    v.push_back(boolean("mesh.conform", [](ExperimentSpec& s) -> bool& { return s.mesh.conform; }));
    v.push_back(text("mesh.node", [](ExperimentSpec& s) -> std::string& { return s.mesh.node_file; }));
    v.push_back(text("mesh.ele", [](ExperimentSpec& s) -> std::string& { return s.mesh.ele_file; }));
    v.push_back(text("mesh.nodes_csv", [](ExperimentSpec& s) -> std::string& { return s.mesh.nodes_csv; }));
    v.push_back(text("mesh.elements_csv", [](ExperimentSpec& s) -> std::string& { return s.mesh.elements_csv; }));
    v.push_back(text("mesh_hash", [](ExperimentSpec& s) -> std::string& { return s.expected_mesh_hash; }));
    v.push_back(text("data_file", [](ExperimentSpec& s) -> std::string& { return s.data_file; }));
    v.push_back(text("alpha_file", [](ExperimentSpec& s) -> std::string& { return s.alpha_file; }));
    v.push_back({"alpha0",
                 [](ExperimentSpec& s, std::string_view x) {
                   if (detail::trim(x) == "auto") s.alpha0.reset();
                   else s.alpha0 = alpha0_mode_from_string(detail::trim(x));
                 },
                 [](const ExperimentSpec& s) { return s.alpha0 ? std::string(to_string(*s.alpha0)) : "auto"; }});
    v.push_back({"omega0_rule",
                 [](ExperimentSpec& s, std::string_view x) { s.omega0_rule = omega0_rule_from_string(detail::trim(x)); },
                 [](const ExperimentSpec& s) { return std::string(to_string(s.omega0_rule)); }});
    v.push_back(real("kappa", [](ExperimentSpec& s) -> double& { return s.recon.kappa; }));
    v.push_back(real("mu", [](ExperimentSpec& s) -> double& { return s.recon.mu; }));
    v.push_back(real("lambda", [](ExperimentSpec& s) -> double& { return s.recon.lambda; }));
    v.push_back(real("epsilon", [](ExperimentSpec& s) -> double& { return s.recon.epsilon; }));
    v.push_back(real("phi_scale", [](ExperimentSpec& s) -> double& { return s.recon.phi_scale; }));
    v.push_back(real("lower", [](ExperimentSpec& s) -> double& { return s.recon.lower; }));
    v.push_back(real("upper", [](ExperimentSpec& s) -> double& { return s.recon.upper; }));
    v.push_back(real("delta", [](ExperimentSpec& s) -> double& { return s.recon.delta; }));
    v.push_back(integer("max_iters", [](ExperimentSpec& s) -> int& { return s.recon.max_iters; }));
    v.push_back(real("tol", [](ExperimentSpec& s) -> double& { return s.recon.tol; }));
    v.push_back(integer("max_evals", [](ExperimentSpec& s) -> int& { return s.recon.max_evals; }));
    v.push_back(real("max_step", [](ExperimentSpec& s) -> double& { return s.recon.max_step; }));
    v.push_back(integer("lbfgs_memory", [](ExperimentSpec& s) -> int& { return s.recon.lbfgs_memory; }));
    v.push_back({"data_term",
                 [](ExperimentSpec& s, std::string_view x) { s.recon.data_term = data_term_from_string(detail::trim(x)); },
                 [](const ExperimentSpec& s) { return std::string(to_string(s.recon.data_term)); }});
    v.push_back({"inner_mode",
                 [](ExperimentSpec& s, std::string_view x) { s.recon.inner_mode = inner_mode_from_string(detail::trim(x)); },
                 [](const ExperimentSpec& s) { return std::string(to_string(s.recon.inner_mode)); }});
    v.push_back(boolean("pin_zone", [](ExperimentSpec& s) -> bool& { return s.recon.pin_zone; }));
    v.push_back({"zone_value",
                 [](ExperimentSpec& s, std::string_view x) {
                   if (detail::trim(x) == "auto") s.recon.zone_value = std::numeric_limits<double>::quiet_NaN();
                   else s.recon.zone_value = to_double("zone_value", x);
                 },
                 [](const ExperimentSpec& s) {
                   return std::isnan(s.recon.zone_value) ? std::string("auto") : format_double(s.recon.zone_value);
                 }});
    return v;
  }();
  return all;
}

const Setting& find_setting(std::string_view key) {
  for (const auto& s : settings()) {
    if (s.key == key) return s;
  }
  fail(ErrorCode::InvalidArgument, "unknown setting '" + std::string(key) + "'");
}

}  // namespace

void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value) {
  find_setting(detail::trim(key)).set(spec, detail::trim(value));
}

void apply_settings(ExperimentSpec& spec, const KeyValues& kv) {
  for (const auto& [k, v] : kv) apply_setting(spec, k, v);
}

std::string get_setting(const ExperimentSpec& spec, std::string_view key) { return find_setting(key).get(spec); }

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : settings()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

std::string spec_to_text(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& s : settings()) out += s.key + "=" + s.get(spec) + "\n";
  return out;
}

TriMesh build_mesh(const ExperimentSpec& spec) {
  spec.validate();
  TriMesh mesh;
  if (!spec.mesh.nodes_csv.empty()) {
    mesh = mesh_from_csv(read_text_file(spec.mesh.nodes_csv), read_text_file(spec.mesh.elements_csv));
  } else {
    if (!spec.mesh.node_file.empty()) {
      mesh = load_triangle_format(read_text_file(spec.mesh.node_file), read_text_file(spec.mesh.ele_file));
    } else {
      std::vector<double> conform;
      if (spec.mesh.conform) conform.push_back(inclusion_for(spec.geometry).radius);
      mesh = generate_disc_mesh(2.0, spec.mesh.h, conform);
    }
    mesh = tag_delta_zone(mesh, spec.recon.delta);
  }
  if (!spec.expected_mesh_hash.empty() && mesh.content_hash() != spec.expected_mesh_hash)
    fail(ErrorCode::Incompatible,
         "mesh hash " + mesh.content_hash() + " differs from the recorded " + spec.expected_mesh_hash);
  return mesh;
}

BoundaryDataSet build_data(const ExperimentSpec& spec, const TriMesh& mesh) {
  spec.validate();
  BoundaryDataSet data;
  if (!spec.data_file.empty()) {
    data = boundary_data_from_csv(read_text_file(spec.data_file));
    if (data.angles.size() != mesh.boundary_nodes().size())
      fail(ErrorCode::Incompatible, "'" + spec.data_file + "' has " + std::to_string(data.angles.size()) +
                                        " rows but the mesh has " + std::to_string(mesh.boundary_nodes().size()) +
                                        " boundary nodes");
  } else {
    data = make_boundary_data(mesh, spec.geometry, spec.pairs);
  }
  if (spec.theta > 0.0) data = add_noise(data, spec.theta, spec.recon.seed);
  return data;
}

std::string manifest_text(const ExperimentSpec& spec, const TriMesh& mesh) {
  ExperimentSpec s = spec;
  s.expected_mesh_hash = mesh.content_hash();
  std::string out = "# bvtomo run manifest\n";
  out += "# library_version " + std::string(library_version()) + "\n";
  out += "# mesh nodes " + std::to_string(mesh.node_count()) + " elements " + std::to_string(mesh.triangle_count()) +
         " h " + format_double(mesh.h()) + "\n";
  out += spec_to_text(s);
  return out;
}

namespace {

auto exact_xy(Geometry g, int m) {
  return [g, m](double x, double y) { return exact_potential(g, m, std::hypot(x, y), std::atan2(y, x)); };
}

}  // namespace

ForwardOutput run_forward(const ExperimentSpec& spec, const TriMesh& mesh, const BoundaryDataSet& data) {
  spec.validate();
  ForwardOutput out;
  out.space = std::make_shared<const P1Space>(mesh);
  const auto inc = inclusion_for(spec.geometry);
  const bool from_file = !spec.alpha_file.empty();
  if (from_file) {
    const NodalField a = nodal_field_from_csv(read_text_file(spec.alpha_file), "alpha", mesh.node_count());
    out.alpha = out.space->element_mean(a);
  } else {
    out.alpha = exact_alpha_elements(mesh, inc);
  }
  ForwardSolver solver(out.space);
  solver.set_conductivity(out.alpha);
  for (const auto& p : data.pairs) {
    out.dirichlet.push_back(solver.dirichlet(p.f));
    const double total = out.space->boundary_integral(p.g.cwiseAbs());
    if (std::abs(out.space->boundary_integral(p.g)) > 1e-8 * std::max(total, 1e-300))
      fail(ErrorCode::Incompatible, "flux data does not integrate to zero over the boundary");
    out.neumann.push_back(solver.neumann(p.g));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.l2_error = out.h1_error = out.neumann_l2_error = nan;
  if (!from_file && !out.dirichlet.empty()) {
    const auto exact = exact_xy(spec.geometry, 1);
    const auto e = field_errors(*out.space, out.dirichlet[0], exact);
    out.l2_error = e.l2;
    out.h1_error = e.h1;
    // The Neumann potential is normalized to zero lumped-mass mean; compare
    // against the exact potential with the same normalization.
    const auto& mass = out.space->lumped_mass();
    double mean = 0.0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i)
      mean += mass[static_cast<Eigen::Index>(i)] * exact(mesh.node(static_cast<int>(i)).x, mesh.node(static_cast<int>(i)).y);
    mean /= mass.sum();
    out.neumann_l2_error =
        field_errors(*out.space, out.neumann[0], [&](double x, double y) { return exact(x, y) - mean; }).l2;
  }
  return out;
}

InversionOutput run_inversion(const ExperimentSpec& spec, const TriMesh& mesh, const BoundaryDataSet& data) {
  spec.validate();
  InversionOutput out;
  out.space = std::make_shared<const P1Space>(mesh);
  out.inclusion = inclusion_for(spec.geometry);
  if (spec.physical) {
    out.result = physical_reconstruct(out.space, data, spec.recon, out.inclusion, spec.tikhonov);
    return out;
  }
  const NodalField alpha0 = build_alpha0(mesh, spec.alpha0_mode(), out.inclusion, spec.ell, spec.recon.pinned_value());
  const ElementField omega0 = build_omega0(mesh, out.inclusion, spec.ell, spec.tikhonov, spec.omega0_rule);
  const Problem problem(out.space, data, spec.recon, alpha0);
  ReconOptions opts;
  opts.freeze_omega = spec.tikhonov;
  opts.inclusion = out.inclusion;
  opts.band = spec.ell / 2.0 + mesh.h();
  out.result = bv_reconstruct(problem, omega0, alpha0, opts);
  return out;
}

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

void write_inversion(const std::string& dir, const ExperimentSpec& spec, const TriMesh& mesh,
                     const InversionOutput& out) {
  ensure_directory(dir);
  const auto& r = out.result;
  write_text_file(join(dir, "alpha.csv"), nodal_field_csv("alpha", r.alpha));
  write_text_file(join(dir, "omega.csv"), element_field_csv("omega", r.omega));
  write_text_file(join(dir, "history.csv"), history_csv(r.history));
  std::vector<std::string> names;
  for (std::size_t m = 0; m < r.u.size(); ++m) names.push_back("u_" + std::to_string(m + 1));
  std::vector<NamedNodal> pd{{"alpha", &r.alpha}};
  for (std::size_t m = 0; m < r.u.size(); ++m) pd.push_back({names[m], &r.u[m]});
  write_text_file(join(dir, "fields.vtk"), vtk_unstructured(mesh, "bvtomo reconstruction", pd, {{"omega", &r.omega}}));
  write_text_file(join(dir, "manifest.txt"), manifest_text(spec, mesh));
}

void write_forward(const std::string& dir, const ExperimentSpec& spec, const TriMesh& mesh, const ForwardOutput& out) {
  ensure_directory(dir);
  std::vector<std::string> names;
  for (std::size_t m = 0; m < out.dirichlet.size(); ++m) {
    names.push_back("u_" + std::to_string(m + 1));
    names.push_back("w_" + std::to_string(m + 1));
  }
  std::vector<NamedNodal> pd;
  for (std::size_t m = 0; m < out.dirichlet.size(); ++m) {
    pd.push_back({names[2 * m], &out.dirichlet[m]});
    pd.push_back({names[2 * m + 1], &out.neumann[m]});
  }
  write_text_file(join(dir, "forward.vtk"), vtk_unstructured(mesh, "bvtomo forward", pd, {{"alpha", &out.alpha}}));
  std::string pot = "id";
  for (const auto& n : names) pot += "," + n;
  pot += "\n";
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    pot += std::to_string(i);
    for (const auto& f : pd) pot += "," + format_double(f.field->values[static_cast<Eigen::Index>(i)]);
    pot += "\n";
  }
  write_text_file(join(dir, "potentials.csv"), pot);
  write_text_file(join(dir, "errors.csv"), "l2_error,h1_error,neumann_l2_error\n" + format_double(out.l2_error) + "," +
                                               format_double(out.h1_error) + "," +
                                               format_double(out.neumann_l2_error) + "\n");
  write_text_file(join(dir, "manifest.txt"), manifest_text(spec, mesh));
}

namespace {

std::string fixed2(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string mode_name(const ExperimentSpec& s) {
  if (s.physical) return s.tikhonov ? "physical, tikhonov" : "physical";
  return s.tikhonov ? "tikhonov" : "bv";
}

}  // namespace

Report build_report(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::Io, "'" + dir + "' is not a directory");
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  if (ec) fail(ErrorCode::Io, "cannot list '" + dir + "': " + ec.message());
  std::sort(subdirs.begin(), subdirs.end());

  struct Run {
    ExperimentSpec spec;
    std::vector<std::pair<double, double>> values;
  };
  using BlockKey = std::tuple<std::string, std::string, double>;
  std::map<BlockKey, std::vector<Run>> blocks;
  Report rep;
  for (const auto& sd : subdirs) {
    const auto manifest = sd / "manifest.txt";
    const auto history = sd / "history.csv";
    if (!fs::exists(manifest) || !fs::exists(history)) {
      rep.missing.push_back(sd.string());
      continue;
    }
    try {
      Run run;
      apply_settings(run.spec, parse_key_values(read_text_file(manifest.string()), manifest.string()));
      const CsvTable t = parse_csv(read_text_file(history.string()), history.string());
      const int ci = t.column("alpha_in");
      const int co = t.column("alpha_out");
      if (ci < 0 || co < 0) fail(ErrorCode::Parse, history.string() + ": missing alpha_in/alpha_out columns");
      for (const auto& row : t.rows) {
        double a = 0.0, b = 0.0;
        if (!detail::parse_double(row[static_cast<std::size_t>(ci)], a)) a = std::nan("");
        if (!detail::parse_double(row[static_cast<std::size_t>(co)], b)) b = std::nan("");
        run.values.emplace_back(a, b);
      }
      if (run.values.empty()) fail(ErrorCode::Parse, history.string() + ": no iterations");
      blocks[{std::string(to_string(run.spec.geometry)), mode_name(run.spec), run.spec.theta}].push_back(
          std::move(run));
    } catch (const Error&) {
      rep.missing.push_back(sd.string());
    }
  }
  if (blocks.empty()) {
    std::string msg = "no completed runs under '" + dir + "'; expected <run>/manifest.txt and <run>/history.csv";
    if (!rep.missing.empty()) {
      msg += "; incomplete:";
      for (const auto& m : rep.missing) msg += " " + m;
    }
    fail(ErrorCode::Io, msg);
  }

  for (auto& [key, runs] : blocks) {
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
      return std::tuple(a.spec.ell, a.spec.recon.mu, a.spec.pairs, a.spec.recon.seed) <
             std::tuple(b.spec.ell, b.spec.recon.mu, b.spec.pairs, b.spec.recon.seed);
    });
    std::size_t width = 0;
    for (const auto& r : runs) width = std::max(width, r.values.size());
    const bool noisy = std::get<2>(key) > 0.0;
    rep.markdown += "### " + std::get<0>(key) + ", " + std::get<1>(key) + ", theta = " + format_double(std::get<2>(key)) +
                    "\n\n| ell | mu | N |" + (noisy ? " seed |" : "");
    for (std::size_t n = 1; n <= width; ++n) rep.markdown += " n=" + std::to_string(n) + " |";
    rep.markdown += "\n|---|---|---|" + std::string(noisy ? "---|" : "");
    for (std::size_t n = 0; n < width; ++n) rep.markdown += "---|";
    rep.markdown += "\n";
    for (const auto& r : runs) {
      rep.markdown += "| " + format_double(r.spec.ell) + " | " + format_double(r.spec.recon.mu) + " | " +
                      std::to_string(r.spec.pairs) + " |";
      if (noisy) rep.markdown += " " + std::to_string(r.spec.recon.seed) + " |";
      for (std::size_t n = 0; n < width; ++n) {
        if (n < r.values.size()) rep.markdown += " " + fixed2(r.values[n].first) + " / " + fixed2(r.values[n].second) + " |";
        else rep.markdown += " |";
      }
      rep.markdown += "\n";
    }
    rep.markdown += "\n";
  }
  if (!rep.missing.empty()) {
    rep.markdown += "Missing or unreadable runs:\n\n";
    for (const auto& m : rep.missing) rep.markdown += "- " + m + "\n";
  }
  return rep;
}

}  // namespace bvtomo
