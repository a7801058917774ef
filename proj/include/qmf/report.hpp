#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace qmf {

/// Outcome of one numerical check. `pass` is exactly residual <= tolerance;
/// a NaN residual fails.
struct VerificationReport {
  std::string check;
  std::string anchor;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  nlohmann::json witness;
  double wall_time_ms = 0.0;
};

VerificationReport make_report(std::string check, std::string anchor, double residual,
                               double tolerance, nlohmann::json witness = nullptr);

/// Report record without the wall time, so equal inputs serialize to equal
/// bytes.
nlohmann::json to_json(const VerificationReport& r);
VerificationReport report_from_json(const nlohmann::json& j);

/// Runs `f` (returning a VerificationReport) and stamps its wall time.
template <typename F>
VerificationReport timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  VerificationReport r = f();
  r.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Named tolerances; every check looks its threshold up here.
struct Tolerances {
  double conddensity = 1e-9;
  double region = 1e-9;
  double factorization = 1e-10;
  double localization = 1e-9;
  double unitality = 1e-10;
  double choi = 1e-9;
  double module = 1e-10;
  double stationarity = 1e-9;
  double projectivity = 1e-8;
  double oracle = 1e-9;
  double commutativity = 1e-10;
  double commutant = 1e-10;
  double state = 1e-9;
  double positivity = 1e-10;
  double invertibility_floor = 1e-8;
  double normalizer_floor = 1e-8;  // relative to the largest entry of B
  double identity_factor = 1e-12;
  double dimension_cap = 8192;

  /// Sets one value by name; throws malformed-config on unknown names.
  void set(const std::string& name, double value);
  double get(const std::string& name) const;
  static const std::vector<std::string>& names();

  nlohmann::json to_json() const;
  static Tolerances from_json(const nlohmann::json& j);
};

}  // namespace qmf
