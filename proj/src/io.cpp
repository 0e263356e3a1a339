#include "bvtomo/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bvtomo/error.hpp"
#include "text_util.hpp"

namespace bvtomo {

using detail::format_double;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading: " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::Io, "read error on '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing: " + std::strerror(errno));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) fail(ErrorCode::Io, "write error on '" + path + "'");
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail(ErrorCode::Io, "cannot create directory '" + path + "': " + ec.message());
  if (!std::filesystem::is_directory(path)) fail(ErrorCode::Io, "'" + path + "' is not a directory");
}

namespace {

std::string field_csv(std::string_view name, const Eigen::VectorXd& v) {
  std::string out = "id," + std::string(name) + "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(v[i]);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string nodal_field_csv(std::string_view name, const NodalField& field) { return field_csv(name, field.values); }

std::string element_field_csv(std::string_view name, const ElementField& field) {
  return field_csv(name, field.values);
}

NodalField nodal_field_from_csv(std::string_view text, std::string_view name, std::size_t expected) {
  const CsvTable t = parse_csv(text, name);
  if (t.header.size() != 2 || t.header[0] != "id" || t.header[1] != name)
    detail::parse_fail(name, 1, "expected header 'id," + std::string(name) + "'");
  if (t.rows.size() != expected)
    fail(ErrorCode::Incompatible, std::string(name) + ": " + std::to_string(t.rows.size()) + " rows for " +
                                      std::to_string(expected) + " nodes");
  NodalField f(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(expected)));
  std::vector<char> seen(expected, 0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    long id = 0;
    double v = 0.0;
    if (!detail::parse_long(t.rows[r][0], id) || id < 0 || static_cast<std::size_t>(id) >= expected || seen[id])
      detail::parse_fail(name, r + 2, "bad or repeated id '" + t.rows[r][0] + "'");
    if (!detail::parse_double(t.rows[r][1], v) || !std::isfinite(v))
      detail::parse_fail(name, r + 2, "bad value '" + t.rows[r][1] + "'");
    seen[id] = 1;
    f[id] = v;
  }
  return f;
}

const std::vector<std::string>& history_columns() {
  static const std::vector<std::string> cols = {
      "n",         "J",         "data",          "smooth",           "dual",
      "reference", "alpha_in",  "alpha_out",     "omega_min",        "omega_low_fraction",
      "inner_iterations",       "inner_evaluations", "inner_objective", "inner_projected_gradient",
      "inner_reason"};
  return cols;
}

std::string history_csv(const std::vector<IterationRecord>& history) {
  std::string out;
  const auto& cols = history_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  for (const auto& r : history) {
    const std::vector<std::string> cells = {
        std::to_string(r.n),
        format_double(r.terms.total()),
        format_double(r.terms.data),
        format_double(r.terms.smooth),
        format_double(r.terms.dual),
        format_double(r.terms.reference),
        format_double(r.alpha_in),
        format_double(r.alpha_out),
        format_double(r.omega_min),
        format_double(r.omega_low_fraction),
        std::to_string(r.inner.iterations),
        std::to_string(r.inner.evaluations),
        format_double(r.inner.objective),
        format_double(r.inner.projected_gradient),
        std::string(to_string(r.inner.reason)),
    };
    for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "," : "") + cells[c];
    out += '\n';
  }
  return out;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<int>(c);
  }
  return -1;
}

CsvTable parse_csv(std::string_view text, std::string_view what) {
  CsvTable t;
  bool have_header = false;
  for (const auto& line : detail::split_lines(text)) {
    if (detail::trim(line.text).empty()) continue;
    const auto cells = detail::split_char(line.text, ',');
    std::vector<std::string> row(cells.begin(), cells.end());
    if (!have_header) {
      t.header = std::move(row);
      have_header = true;
      continue;
    }
    if (row.size() != t.header.size())
      detail::parse_fail(what, line.number,
                         "expected " + std::to_string(t.header.size()) + " columns, got " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) detail::parse_fail(what, 1, "missing header");
  return t;
}

std::string vtk_unstructured(const TriMesh& mesh, std::string_view title, const std::vector<NamedNodal>& point_data,
                             const std::vector<NamedCell>& cell_data) {
  std::string out = "# vtk DataFile Version 3.0\n";
  std::string t(title.substr(0, 255));
  for (char& c : t) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  out += t + "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  const auto np = mesh.node_count();
  const auto nt = mesh.triangle_count();
  out += "POINTS " + std::to_string(np) + " double\n";
  for (const auto& p : mesh.nodes()) out += format_double(p.x) + " " + format_double(p.y) + " 0\n";
  out += "CELLS " + std::to_string(nt) + " " + std::to_string(4 * nt) + "\n";
  for (const auto& tri : mesh.triangles())
    out += "3 " + std::to_string(tri[0]) + " " + std::to_string(tri[1]) + " " + std::to_string(tri[2]) + "\n";
  out += "CELL_TYPES " + std::to_string(nt) + "\n";
  for (std::size_t k = 0; k < nt; ++k) out += "5\n";

  auto scalars = [&](const std::string& name, const Eigen::VectorXd& v, std::size_t n) {
    if (static_cast<std::size_t>(v.size()) != n) fail(ErrorCode::InvalidArgument, "field '" + name + "' has the wrong length");
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      fail(ErrorCode::InvalidArgument, "VTK field names must be non-empty and without whitespace");
    out += "SCALARS " + name + " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) out += format_double(v[i]) + "\n";
  };
  if (!point_data.empty()) {
    out += "POINT_DATA " + std::to_string(np) + "\n";
    for (const auto& f : point_data) scalars(f.name, f.field->values, np);
  }
  if (!cell_data.empty()) {
    out += "CELL_DATA " + std::to_string(nt) + "\n";
    for (const auto& f : cell_data) scalars(f.name, f.field->values, nt);
  }
  return out;
}

}  // namespace bvtomo
