#include "qmf/report.hpp"

#include <cmath>
#include <utility>

#include "qmf/error.hpp"

namespace qmf {

VerificationReport make_report(std::string check, std::string anchor, double residual,
                               double tolerance, nlohmann::json witness) {
  VerificationReport r;
  r.check = std::move(check);
  r.anchor = std::move(anchor);
  r.residual = residual;
  r.tolerance = tolerance;
  r.pass = residual <= tolerance;
  r.witness = std::move(witness);
  return r;
}

nlohmann::json to_json(const VerificationReport& r) {
  // NaN is not representable in JSON; a failed evaluation serializes as null.
  nlohmann::json residual = std::isfinite(r.residual) ? nlohmann::json(r.residual) : nullptr;
  return {{"check", r.check},         {"anchor", r.anchor}, {"residual", residual},
          {"tolerance", r.tolerance}, {"pass", r.pass},     {"witness", r.witness}};
}

VerificationReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedReport, "record must be an object");
  for (const char* key : {"check", "anchor", "residual", "tolerance", "pass"}) {
    if (!j.contains(key)) throw Error(ErrorCode::MalformedReport, std::string("missing '") + key + "'");
  }
  try {
    VerificationReport r;
    r.check = j.at("check").get<std::string>();
    r.anchor = j.at("anchor").get<std::string>();
    r.residual = j.at("residual").is_null() ? std::nan("") : j.at("residual").get<double>();
    r.tolerance = j.at("tolerance").get<double>();
    r.pass = j.at("pass").get<bool>();
    r.witness = j.value("witness", nlohmann::json());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedReport, e.what());
  }
}

namespace {

using Field = double Tolerances::*;

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"conddensity", &Tolerances::conddensity},
      {"region", &Tolerances::region},
      {"factorization", &Tolerances::factorization},
      {"localization", &Tolerances::localization},
      {"unitality", &Tolerances::unitality},
      {"choi", &Tolerances::choi},
      {"module", &Tolerances::module},
      {"stationarity", &Tolerances::stationarity},
      {"projectivity", &Tolerances::projectivity},
      {"oracle", &Tolerances::oracle},
      {"commutativity", &Tolerances::commutativity},
      {"commutant", &Tolerances::commutant},
      {"state", &Tolerances::state},
      {"positivity", &Tolerances::positivity},
      {"invertibility_floor", &Tolerances::invertibility_floor},
      {"normalizer_floor", &Tolerances::normalizer_floor},
      {"identity_factor", &Tolerances::identity_factor},
      {"dimension_cap", &Tolerances::dimension_cap},
  };
  return table;
}

Field find_field(const std::string& name) {
  for (const auto& [n, f] : fields())
    if (n == name) return f;
  throw Error(ErrorCode::MalformedConfig, "tolerances: unknown key '" + name + "'");
}

}  // namespace

void Tolerances::set(const std::string& name, double value) {
  if (!(value >= 0.0)) {
    throw Error(ErrorCode::MalformedConfig, "tolerances." + name + " must be non-negative");
  }
  this->*find_field(name) = value;
}

double Tolerances::get(const std::string& name) const { return this->*find_field(name); }

const std::vector<std::string>& Tolerances::names() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> n;
    for (const auto& f : fields()) n.push_back(f.first);
    return n;
  }();
  return out;
}

nlohmann::json Tolerances::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [n, f] : fields()) out[n] = this->*f;
  return out;
}

Tolerances Tolerances::from_json(const nlohmann::json& j) {
  Tolerances t;
  if (j.is_null()) return t;
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "tolerances must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      throw Error(ErrorCode::MalformedConfig, "tolerances." + key + " must be a number");
    }
    t.set(key, value.get<double>());
  }
  return t;
}

}  // namespace qmf
