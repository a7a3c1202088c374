#include "sdr/io.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sdr {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_cell(const std::string& cell, size_t line_no,
                  const std::string& path) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (cell.empty() || end == cell.c_str() || (end && *end != '\0'))
    throw data_error(path + ":" + std::to_string(line_no) +
                     ": malformed numeric cell '" + cell + "'");
  (void)errno;
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw data_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec)
    throw data_error("rename failed for " + target.string() + ": " +
                     ec.message());
}

void save_csv(const std::string& path, const std::vector<std::string>& header,
              const Matrix& values) {
  if (Index(header.size()) != values.cols())
    throw data_error("save_csv: header size must match column count");
  std::string out;
  out.reserve(static_cast<size_t>(values.size()) * 20 + 64);
  for (size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(values(i, c));
    }
    out += '\n';
  }
  atomic_write_text(path, out);
}

CsvTable load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);

  std::string line;
  size_t line_no = 0;
  CsvTable table;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_line(line);
    if (table.header.empty()) {
      table.header = cells;
      continue;
    }
    if (cells.size() != table.header.size())
      throw data_error(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) +
                       " cells, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_cell(cells[c], line_no, path);
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw data_error("empty CSV file: " + path);
  if (rows.empty()) throw data_error("CSV has a header but no rows: " + path);

  table.values.resize(rows.size(), table.header.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < rows[i].size(); ++c)
      table.values(i, c) = rows[i][c];
  return table;
}

std::vector<Index> resolve_columns(const CsvTable& table,
                                   const std::vector<std::string>& names) {
  std::vector<Index> out;
  for (const std::string& name : names) {
    bool found = false;
    for (size_t c = 0; c < table.header.size(); ++c) {
      if (table.header[c] == name) {
        out.push_back(static_cast<Index>(c));
        found = true;
        break;
      }
    }
    if (!found) throw data_error("column not found: " + name);
  }
  return out;
}

void save_json(const std::string& path, const Json& payload) {
  atomic_write_text(path, payload.dump(2) + "\n");
}

Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw data_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
    rows.push_back(std::move(row));
  }
  Json j;
  j["rows"] = M.rows();
  j["cols"] = M.cols();
  j["data"] = std::move(rows);
  return j;
}

Matrix matrix_from_json(const Json& j) {
  Index rows = j.at("rows").get<Index>();
  Index cols = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  if (Index(data.size()) != rows)
    throw data_error("matrix payload row count mismatch");
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = data.at(i);
    if (Index(row.size()) != cols)
      throw data_error("matrix payload column count mismatch");
    for (Index c = 0; c < cols; ++c) M(i, c) = row.at(c).get<double>();
  }
  return M;
}

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const Json& j) {
  Vector v(j.size());
  for (Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace sdr
