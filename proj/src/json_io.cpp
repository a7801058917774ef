#include "qmf/json_io.hpp"

#include <string>

#include "qmf/error.hpp"

namespace qmf {

Complex complex_from_json(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw Error(ErrorCode::MalformedTable, "expected a number or [re, im], got " + j.dump());
}

nlohmann::json complex_to_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

Operator::Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::MalformedTable, "matrix must be a non-empty array of rows");
  const auto n = static_cast<Index>(j.size());
  Operator::Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw Error(ErrorCode::MalformedTable, "matrix row " + std::to_string(i) + " must have " +
                                                 std::to_string(n) + " entries");
    }
    for (Index k = 0; k < n; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

nlohmann::json matrix_to_json(const Operator::Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string label_key(const nlohmann::json& label) {
  if (label.is_string()) return label.get<std::string>();
  if (label.is_number_integer()) return std::to_string(label.get<long long>());
  if (label.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < label.size(); ++i) {
      if (!label[i].is_number_integer()) break;
      if (i) out += ",";
      out += std::to_string(label[i].get<long long>());
      if (i + 1 == label.size()) return out;
    }
  }
  throw Error(ErrorCode::MalformedConfig, "invalid vertex label " + label.dump());
}

}  // namespace qmf
