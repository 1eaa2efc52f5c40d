#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wcsys/operator.hpp"

namespace wcsys {

/// One measured quantity and the bound it must not exceed.
struct Criterion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;

  double excess() const { return value - threshold; }
  bool ok() const { return value <= threshold; }
};

/// Outcome of one executable inequality. The binding criterion is the one
/// with the largest excess; the report passes iff its value is within its
/// threshold.
struct VerificationReport {
  std::string check;
  std::string preset;
  std::vector<Criterion> criteria;
  std::map<std::string, double> measured;
  std::map<std::string, std::string> notes;
  std::optional<Witness> witness{};

  void add(std::string name, double value, double threshold) {
    criteria.push_back({std::move(name), value, threshold});
  }
  /// A yes/no condition encoded as value 1 (failed) or 0 (held) against threshold 0.
  void require_true(std::string name, bool cond) { add(std::move(name), cond ? 0.0 : 1.0, 0.0); }

  const Criterion* binding() const {
    const Criterion* b = nullptr;
    for (const auto& c : criteria)
      if (!b || c.excess() > b->excess() || std::isnan(c.value)) b = &c;
    return b;
  }
  double worst_violation() const { return binding() ? binding()->value : 0.0; }
  double tolerance() const { return binding() ? binding()->threshold : 0.0; }
  bool pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.ok(); });
  }
  std::string verdict() const { return pass() ? "PASS" : "FAIL"; }

  /// Folds another report's criteria in under a name prefix.
  void merge(const VerificationReport& other, const std::string& prefix) {
    for (const auto& c : other.criteria) criteria.push_back({prefix + c.name, c.value, c.threshold});
    for (const auto& [k, v] : other.measured) measured[prefix + k] = v;
    for (const auto& [k, v] : other.notes) notes[prefix + k] = v;
    if (!witness && other.witness && !other.pass()) witness = other.witness;
  }
};

inline nlohmann::json to_json(const Witness& w) {
  return {{"t", w.t}, {"x", w.x}, {"component", w.component + 1}};
}

inline nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["check"] = r.check;
  j["preset"] = r.preset;
  j["verdict"] = r.verdict();
  j["worst_violation"] = r.worst_violation();
  j["tolerance"] = r.tolerance();
  if (const auto* b = r.binding()) j["binding_criterion"] = b->name;
  auto& cs = j["criteria"] = nlohmann::json::array();
  for (const auto& c : r.criteria) cs.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}});
  j["measured"] = r.measured;
  j["notes"] = r.notes;
  if (r.witness) j["witness"] = to_json(*r.witness);
  return j;
}

/// Fixed 17-significant-digit rendering used for every CSV number, so that
/// reruns reproduce files byte for byte.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace wcsys
