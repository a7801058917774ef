#pragma once

#include <json.hpp>

#include "qmf/local_operator.hpp"

namespace qmf {

/// A complex number given as a real number or a [re, im] pair.
Complex complex_from_json(const nlohmann::json& j);
nlohmann::json complex_to_json(Complex z);

/// A square matrix given as nested rows of complex entries.
Operator::Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Operator::Matrix& m);

/// Text form of a vertex label as written in configs: strings as-is,
/// integers in decimal, integer tuples comma-joined.
std::string label_key(const nlohmann::json& label);

}  // namespace qmf
