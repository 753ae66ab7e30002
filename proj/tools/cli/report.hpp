/**
 * @file report.hpp
 * @brief Deterministic JSON and CSV output: sorted keys, floats at 17 significant digits.
 */
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rectify/errors.hpp"
#include "rectify/geometry.hpp"

namespace rectify::cli {

using Json = nlohmann::json;

[[nodiscard]] inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[nodiscard]] inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

[[nodiscard]] inline Json json_vector(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(json_number(v[i]));
  }
  return out;
}

[[nodiscard]] inline Json json_point(const SpaceTimePoint& p) { return {{"t", json_number(p.t)}, {"x", json_vector(p.x)}}; }

inline void write_json(std::ostream& os, const Json& j, int depth = 0) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      // nlohmann's default object type is a std::map, so iteration is already key-sorted.
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        os << (first ? "" : ",\n") << pad << Json(it.key()).dump() << ": ";
        write_json(os, it.value(), depth + 1);
        first = false;
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        os << (i ? ",\n" : "") << pad;
        write_json(os, j[i], depth + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

[[nodiscard]] inline std::string to_json_text(const Json& j) {
  std::ostringstream os;
  write_json(os, j);
  os << "\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInput("cannot write '" + path.string() + "'");
  }
  out << text;
}

/// Rows of optional cells; empty cells are written as nothing between the commas.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::vector<std::optional<double>>& row) { rows_.push_back(row); }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }

  [[nodiscard]] std::string text() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      os << (i ? "," : "") << header_[i];
    }
    os << "\n";
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        os << (i ? "," : "");
        if (row[i] && std::isfinite(*row[i])) {
          os << format_double(*row[i]);
        }
      }
      os << "\n";
    }
    return os.str();
  }

  void write(const std::filesystem::path& path) const { write_text(path, text()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::optional<double>>> rows_;
};

/// "t", "x1".."xn", then the same with `prefix` when `prefix` is non-empty.
[[nodiscard]] inline std::vector<std::string> point_header(std::size_t n, const std::string& prefix = {}) {
  std::vector<std::string> h{"t"};
  for (std::size_t i = 1; i <= n; ++i) {
    h.push_back("x" + std::to_string(i));
  }
  if (!prefix.empty()) {
    h.push_back(prefix + "_t");
    for (std::size_t i = 1; i <= n; ++i) {
      h.push_back(prefix + "_x" + std::to_string(i));
    }
  }
  return h;
}

[[nodiscard]] inline std::vector<std::optional<double>> point_cells(const SpaceTimePoint& p) {
  std::vector<std::optional<double>> row{p.t};
  for (Eigen::Index i = 0; i < p.x.size(); ++i) {
    row.emplace_back(p.x[i]);
  }
  return row;
}

/// Cells for p followed by the image q, or by blanks when q is missing.
[[nodiscard]] inline std::vector<std::optional<double>> pair_cells(const SpaceTimePoint& p,
                                                                   const std::optional<SpaceTimePoint>& q) {
  auto row = point_cells(p);
  if (q) {
    const auto tail = point_cells(*q);
    row.insert(row.end(), tail.begin(), tail.end());
  } else {
    row.resize(row.size() * 2);
  }
  return row;
}

}  // namespace rectify::cli
