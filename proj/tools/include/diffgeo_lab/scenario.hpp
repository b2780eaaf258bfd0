#pragma once

// JSON scenarios: strict parsing against a per-subcommand field table,
// normalization to a fully defaulted document, and construction of the
// library objects a scenario describes.

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "diffgeo/geometry.hpp"
#include "diffgeo/integrate.hpp"
#include "diffgeo/model.hpp"

namespace diffgeo::lab {

using json = nlohmann::ordered_json;

/// A scenario that does not match its schema: unknown or duplicate keys,
/// wrong types, out-of-range values.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldKind {
  Real,
  Count,
  Bool,
  /// One of a fixed set of strings.
  Choice,
  /// Array of reals; `length` 0 accepts any nonzero length.
  Reals,
  /// Real or null.
  OptionalReal,
  Input,
  Metric,
  Cone,
};

struct Field {
  std::string name;
  FieldKind kind;
  json fallback;
  std::vector<std::string> choices{};
  std::size_t length{0};
};

/// Parses text as JSON, rejecting duplicate object keys.
json parse_strict(const std::string &text);

/// Fills every default and rejects anything outside the schema. The result
/// is a fixed point: normalizing it again returns it unchanged.
json normalize_scenario(const json &raw, const std::vector<Field> &analysis);

/// Scenario with every field at its default.
json default_scenario(const std::vector<Field> &analysis);

InputLaw input_from_json(const json &j);
PendulumParams params_from_scenario(const json &scenario);
/// Pendulum or overdamped pendulum, per the "system" key.
PlanarSystem system_from_scenario(const json &scenario);
IntegratorConfig config_from_json(const json &j);
FinslerLyapunov metric_from_json(const json &j, double eta);
ConeFieldSpec cone_from_json(const json &j);
CylinderPoint point_from_json(const json &j);
Tangent tangent_from_json(const json &j);

}  // namespace diffgeo::lab
