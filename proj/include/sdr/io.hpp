#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sdr/types.hpp"

namespace sdr {

// Keys keep insertion order so that serialized output is byte-stable.
using Json = nlohmann::ordered_json;

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

/// Writes content to a sibling temp file and renames it into place, so a
/// crash never leaves a half-written artifact at the target path.
void atomic_write_text(const std::string& path, const std::string& content);

/// Comma-separated with a header row; reals printed with 17 significant
/// digits so that a load reproduces every value exactly.
void save_csv(const std::string& path, const std::vector<std::string>& header,
              const Matrix& values);

/// Parses a numeric CSV with one header row. Malformed cells and ragged
/// rows are reported with their 1-based line number; an empty or missing
/// file is an error rather than an empty table.
CsvTable load_csv(const std::string& path);

/// Column indices for the given names; throws naming the first column
/// that is absent.
std::vector<Index> resolve_columns(const CsvTable& table,
                                   const std::vector<std::string>& names);

void save_json(const std::string& path, const Json& payload);
Json load_json(const std::string& path);

Json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

}  // namespace sdr
