#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "bvtomo/error.hpp"
#include "bvtomo/experiment.hpp"
#include "bvtomo/io.hpp"

using namespace bvtomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bvtomo_test_io_" + name);
  fs::remove_all(p);
  return p;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

ExperimentSpec quick_spec() {
  ExperimentSpec s;
  s.mesh.h = 0.5;
  s.recon.max_iters = 2;
  s.recon.max_evals = 20;
  return s;
}

}  // namespace

TEST_CASE("text files") {
  const fs::path d = scratch("files");
  ensure_directory((d / "a" / "b").string());
  write_text_file((d / "a" / "b" / "x.txt").string(), "hello\n");
  CHECK(read_text_file((d / "a" / "b" / "x.txt").string()) == "hello\n");
  try {
    read_text_file((d / "missing.txt").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(std::string(e.what()).find("missing.txt") != std::string::npos);
  }
  fs::remove_all(d);
}

TEST_CASE("field CSVs") {
  NodalField v(Eigen::Vector3d(1.0, 0.1, -2.5e-17));
  const std::string text = nodal_field_csv("alpha", v);
  CHECK(text.rfind("id,alpha\n0,", 0) == 0);
  const NodalField back = nodal_field_from_csv(text, "alpha", 3);
  CHECK(back.values == v.values);
  CHECK(code_of([&] { nodal_field_from_csv(text, "alpha", 4); }) != ErrorCode::Ok);
  CHECK(code_of([&] { nodal_field_from_csv(text, "omega", 3); }) == ErrorCode::Parse);
  CHECK(code_of([&] { nodal_field_from_csv("id,alpha\n0,1\n2,1\n", "alpha", 2); }) == ErrorCode::Parse);
  CHECK(code_of([&] { nodal_field_from_csv("id,alpha\n0,nan\n", "alpha", 1); }) == ErrorCode::Parse);
  const std::string e = element_field_csv("omega", ElementField(Eigen::Vector2d(0.5, 1.0)));
  CHECK(e.rfind("id,omega\n", 0) == 0);
  CHECK(std::count(e.begin(), e.end(), '\n') == 3);
}

TEST_CASE("history CSV") {
  IterationRecord r;
  r.n = 1;
  r.alpha_in = 1.93;
  r.alpha_out = 1.0;
  r.terms.data = 2.0;
  r.inner.reason = StopReason::MaxEvaluations;
  const std::string text = history_csv({r, r});
  const CsvTable t = parse_csv(text, "history");
  CHECK(t.header == history_columns());
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][static_cast<std::size_t>(t.column("alpha_in"))] == "1.93");
  CHECK(t.column("inner_reason") >= 0);
  CHECK(t.rows[1][static_cast<std::size_t>(t.column("inner_reason"))] == to_string(StopReason::MaxEvaluations));
  CHECK(t.column("nope") == -1);
  CHECK(code_of([] { parse_csv("a,b\n1\n", "x"); }) == ErrorCode::Parse);
}

TEST_CASE("legacy VTK layout") {
  const TriMesh m = generate_disc_mesh(2.0, 0.6);
  const NodalField a = NodalField::constant(m.node_count(), 1.5);
  const ElementField w = ElementField::constant(m.triangle_count(), 0.25);
  const std::string vtk = vtk_unstructured(m, "t", {{"alpha", &a}}, {{"omega", &w}});
  std::istringstream in(vtk);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# vtk DataFile Version 3.0");
  const auto n = std::to_string(m.node_count());
  const auto t = std::to_string(m.triangle_count());
  CHECK(vtk.find("ASCII\nDATASET UNSTRUCTURED_GRID\n") != std::string::npos);
  CHECK(vtk.find("POINTS " + n + " double\n") != std::string::npos);
  CHECK(vtk.find("CELLS " + t + " " + std::to_string(4 * m.triangle_count()) + "\n") != std::string::npos);
  CHECK(vtk.find("CELL_TYPES " + t + "\n") != std::string::npos);
  CHECK(vtk.find("POINT_DATA " + n + "\nSCALARS alpha double 1\nLOOKUP_TABLE default\n") != std::string::npos);
  CHECK(vtk.find("CELL_DATA " + t + "\nSCALARS omega double 1\nLOOKUP_TABLE default\n") != std::string::npos);
  CHECK(code_of([&] {
          const NodalField bad = NodalField::constant(2, 1.0);
          vtk_unstructured(m, "t", {{"alpha", &bad}}, {});
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("key=value settings") {
  const KeyValues kv = parse_key_values("# comment\ngeometry = mild_eccentric\n\nmu=0.5  # trailing\n", "cfg");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"geometry", "mild_eccentric"});
  CHECK(kv[1].second == "0.5");
  ExperimentSpec s;
  apply_settings(s, kv);
  CHECK(s.geometry == Geometry::MildEccentric);
  CHECK(s.recon.mu == 0.5);
  CHECK(get_setting(s, "mu") == "0.5");
  CHECK(code_of([] { parse_key_values("novalue\n", "cfg"); }) == ErrorCode::Parse);
  CHECK(code_of([&] { apply_setting(s, "colour", "red"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { apply_setting(s, "mu", "lots"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { apply_setting(s, "pairs", "2.5"); }) == ErrorCode::InvalidArgument);

  s.theta = 0.05;
  s.recon.seed = 42;
  s.alpha0 = Alpha0Mode::ThreeValued;
  s.mesh.conform = true;
  s.recon.data_term = DataTerm::Signed;
  ExperimentSpec copy;
  apply_settings(copy, parse_key_values(spec_to_text(s), "dump"));
  CHECK(spec_to_text(copy) == spec_to_text(s));
  for (const auto& k : setting_keys()) CHECK(get_setting(copy, k) == get_setting(s, k));
  CHECK(get_setting(ExperimentSpec{}, "alpha0") == "auto");
}

TEST_CASE("spec validation") {
  ExperimentSpec s;
  s.validate();
  s.pairs = 2;
  s.geometry = Geometry::StrongEccentric;
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::InvalidArgument);
  s = ExperimentSpec{};
  s.mesh.h = 0.0;
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::InvalidArgument);
  s = ExperimentSpec{};
  s.theta = -1.0;
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(ExperimentSpec{}.alpha0_mode() == Alpha0Mode::Banded);
  ExperimentSpec e;
  e.geometry = Geometry::MildEccentric;
  CHECK(e.alpha0_mode() == Alpha0Mode::Constant);
}

TEST_CASE("mesh and data construction") {
  const fs::path d = scratch("mesh");
  ensure_directory(d.string());
  ExperimentSpec s = quick_spec();
  const TriMesh gen = build_mesh(s);
  CHECK(gen.delta() == s.recon.delta);
  write_text_file((d / "nodes.csv").string(), nodes_csv(gen));
  write_text_file((d / "elements.csv").string(), elements_csv(gen));
  ExperimentSpec from_csv = s;
  from_csv.mesh.nodes_csv = (d / "nodes.csv").string();
  from_csv.mesh.elements_csv = (d / "elements.csv").string();
  from_csv.mesh.h = 0.3;  // ignored when files are given
  CHECK(build_mesh(from_csv).content_hash() == gen.content_hash());
  from_csv.expected_mesh_hash = "0000000000000000";
  CHECK(code_of([&] { build_mesh(from_csv); }) == ErrorCode::Incompatible);
  from_csv.expected_mesh_hash = gen.content_hash();
  CHECK(build_mesh(from_csv).node_count() == gen.node_count());

  ExperimentSpec tri = s;
  tri.mesh.node_file = (d / "missing.node").string();
  tri.mesh.ele_file = (d / "missing.ele").string();
  CHECK(code_of([&] { build_mesh(tri); }) == ErrorCode::Io);

  s.theta = 0.05;
  s.recon.seed = 7;
  const auto a = build_data(s, gen);
  const auto b = build_data(s, gen);
  CHECK(a.pairs[0].f == b.pairs[0].f);
  s.recon.seed = 8;
  CHECK(build_data(s, gen).pairs[0].f != a.pairs[0].f);

  write_text_file((d / "data.csv").string(), boundary_data_csv(a));
  ExperimentSpec file = quick_spec();
  file.data_file = (d / "data.csv").string();
  CHECK(build_data(file, gen).pairs[0].f == a.pairs[0].f);
  const TriMesh other = generate_disc_mesh(2.0, 0.7);
  CHECK(code_of([&] { build_data(file, other); }) == ErrorCode::Incompatible);
  fs::remove_all(d);
}

TEST_CASE("manifest reproduces the run") {
  ExperimentSpec s = quick_spec();
  s.recon.seed = 99;
  s.theta = 0.01;
  const TriMesh m = build_mesh(s);
  const std::string text = manifest_text(s, m);
  CHECK(text.find(m.content_hash()) != std::string::npos);
  CHECK(text.find("seed=99") != std::string::npos);
  ExperimentSpec back;
  apply_settings(back, parse_key_values(text, "manifest"));
  CHECK(back.expected_mesh_hash == m.content_hash());
  CHECK(manifest_text(back, build_mesh(back)) == text);
}

TEST_CASE("forward run errors") {
  ExperimentSpec s;
  s.mesh.h = 0.3;
  s.mesh.conform = true;
  const TriMesh m = build_mesh(s);
  const ForwardOutput out = run_forward(s, m, build_data(s, m));
  CHECK(out.l2_error > 0.0);
  CHECK(out.l2_error < 0.01);
  CHECK(out.h1_error < 0.3);
  CHECK(out.neumann_l2_error < 0.05);
  // Constant conductivity with the trace of x is reproduced exactly.
  const auto& space = *out.space;
  NodalField x = NodalField::constant(m.node_count(), 0.0);
  for (std::size_t i = 0; i < m.node_count(); ++i) x[static_cast<Eigen::Index>(i)] = m.node(static_cast<int>(i)).x;
  const auto e = field_errors(space, solve_dirichlet(space, NodalField::constant(m.node_count(), 1.0), space.boundary_trace(x.values)),
                              [](double px, double) { return px; });
  CHECK(e.l2 < 1e-12);
  CHECK(e.h1 < 1e-8);
}

TEST_CASE("inversion outputs and report") {
  const fs::path root = scratch("report");
  CHECK(code_of([&] { build_report(root.string()); }) == ErrorCode::Io);
  ensure_directory(root.string());
  try {
    build_report(root.string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("history.csv") != std::string::npos);
  }
  for (double mu : {1.0, 0.5}) {
    ExperimentSpec s = quick_spec();
    s.recon.mu = mu;
    const TriMesh m = build_mesh(s);
    const auto out = run_inversion(s, m, build_data(s, m));
    REQUIRE(out.result.history.size() == 2);
    const fs::path dir = root / ("mu-" + std::to_string(mu));
    write_inversion(dir.string(), s, m, out);
    for (const char* f : {"alpha.csv", "omega.csv", "history.csv", "fields.vtk", "manifest.txt"}) CHECK(fs::exists(dir / f));
    const CsvTable h = parse_csv(read_text_file((dir / "history.csv").string()), "history");
    CHECK(h.rows.size() == 2);
  }
  // A run that only got as far as its manifest is reported as missing.
  ensure_directory((root / "broken").string());
  write_text_file((root / "broken" / "manifest.txt").string(), spec_to_text(quick_spec()));
  const Report r = build_report(root.string());
  CHECK(r.markdown.find("concentric") != std::string::npos);
  CHECK(r.markdown.find("| 0.2 |") != std::string::npos);
  REQUIRE(r.missing.size() == 1);
  CHECK(r.missing[0].find("broken") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("physical and tikhonov inversions run") {
  ExperimentSpec s = quick_spec();
  s.physical = true;
  const TriMesh m = build_mesh(s);
  const auto phys = run_inversion(s, m, build_data(s, m));
  CHECK(phys.result.history.size() == 1);
  CHECK(phys.result.alpha.values.maxCoeff() <= 5.0);
  ExperimentSpec t = quick_spec();
  t.tikhonov = true;
  const auto tik = run_inversion(t, m, build_data(t, m));
  CHECK(tik.result.omega.values.minCoeff() == 1.0);
}
