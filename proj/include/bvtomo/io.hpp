#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bvtomo/fem.hpp"
#include "bvtomo/recon.hpp"

namespace bvtomo {

/// Whole-file read and write; failures raise ErrorCode::Io naming the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);
/// Creates the directory and its parents if missing.
void ensure_directory(const std::string& path);

/// Two-column CSV "id,<name>" with one row per node.
std::string nodal_field_csv(std::string_view name, const NodalField& field);
NodalField nodal_field_from_csv(std::string_view text, std::string_view name, std::size_t expected);
/// Two-column CSV "id,<name>" with one row per triangle.
std::string element_field_csv(std::string_view name, const ElementField& field);

/// Column order of history.csv.
const std::vector<std::string>& history_columns();
std::string history_csv(const std::vector<IterationRecord>& history);

/// Parsed history.csv: header plus rows of raw cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  int column(std::string_view name) const;
};
CsvTable parse_csv(std::string_view text, std::string_view what);

struct NamedNodal {
  std::string name;
  const NodalField* field;
};
struct NamedCell {
  std::string name;
  const ElementField* field;
};

/// Legacy VTK 3.0 ASCII unstructured grid of triangles (cell type 5).
std::string vtk_unstructured(const TriMesh& mesh, std::string_view title, const std::vector<NamedNodal>& point_data,
                             const std::vector<NamedCell>& cell_data);

}  // namespace bvtomo
