#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ials/core/error.hpp"
#include "ials/nn/tensor.hpp"

namespace ials::nn {

using json = nlohmann::json;

inline constexpr int kCheckpointFormatVersion = 1;

/// Row-major nested list. Doubles are written with round-trip precision.
inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected a nested list");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw IoError(what + ": ragged row " + std::to_string(i));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw IoError(what + ": non-numeric entry");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

inline json parameters_to_json(const ParameterList& params) {
  json out = json::object();
  for (auto* p : params) out[p->name] = matrix_to_json(p->value);
  return out;
}

/// Loads values by name; every parameter must be present with the right shape.
inline void parameters_from_json(const json& j, const ParameterList& params) {
  for (auto* p : params) {
    if (!j.contains(p->name)) throw IoError("checkpoint is missing parameter '" + p->name + "'");
    Matrix m = matrix_from_json(j.at(p->name), p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw IoError("checkpoint parameter '" + p->name + "' has the wrong shape");
    }
    p->value = std::move(m);
    p->grad.setZero();
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace ials::nn
