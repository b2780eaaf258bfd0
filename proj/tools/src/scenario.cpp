#include "diffgeo_lab/scenario.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "diffgeo/error.hpp"

namespace diffgeo::lab {

namespace {

json normalize_field(const json &v, const Field &f, const std::string &path);

json normalize_object(const json &obj, const std::vector<Field> &fields, const std::string &path,
                      const std::set<std::string> &passthrough = {}) {
  if (!obj.is_object()) throw ScenarioError(path + ": expected an object");
  for (const auto &[key, _] : obj.items()) {
    const bool known = passthrough.count(key) > 0 ||
                       std::any_of(fields.begin(), fields.end(),
                                   [&](const Field &f) { return f.name == key; });
    if (!known) throw ScenarioError(path + ": unknown key \"" + key + "\"");
  }
  json out = json::object();
  for (const std::string &key : passthrough) out[key] = obj.at(key);
  for (const Field &f : fields) {
    const std::string sub = path + "." + f.name;
    out[f.name] = normalize_field(obj.contains(f.name) ? obj.at(f.name) : f.fallback, f, sub);
  }
  return out;
}

json real(const json &v, const std::string &path) {
  if (!v.is_number()) throw ScenarioError(path + ": expected a number");
  return json(v.get<double>());
}

json reals(const json &v, std::size_t length, const std::string &path) {
  if (!v.is_array() || v.empty()) throw ScenarioError(path + ": expected a nonempty array of numbers");
  if (length != 0 && v.size() != length) {
    throw ScenarioError(path + ": expected " + std::to_string(length) + " numbers");
  }
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(real(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

json matrix2(const json &v, const std::string &path) {
  if (!v.is_array() || v.size() != 2) throw ScenarioError(path + ": expected a 2x2 array");
  return json::array({reals(v[0], 2, path + "[0]"), reals(v[1], 2, path + "[1]")});
}

const std::map<std::string, std::vector<Field>> &input_kinds() {
  static const json zero_input = {{"kind", "constant"}, {"u", 0.0}};
  static const std::map<std::string, std::vector<Field>> kinds{
      {"constant", {{"u", FieldKind::Real, 0.0}}},
      {"sinusoidal",
       {{"bias", FieldKind::Real, 0.0},
        {"amplitude", FieldKind::Real, 0.0},
        {"omega", FieldKind::Real, 0.0}}},
      {"feedback-linearizing", {{"w", FieldKind::Input, zero_input}}},
      {"half-angle-gain", {{"r", FieldKind::Input, zero_input}}},
      {"external",
       {{"times", FieldKind::Reals, json::array({0.0})},
        {"values", FieldKind::Reals, json::array({0.0})}}},
      {"output-feedback",
       {{"linear", FieldKind::Real, 1.0},
        {"cubic", FieldKind::Real, 0.0},
        {"reference", FieldKind::Input, zero_input}}},
  };
  return kinds;
}

json normalize_input(const json &v, const std::string &path) {
  if (!v.is_object() || !v.contains("kind") || !v.at("kind").is_string()) {
    throw ScenarioError(path + ": input needs a string \"kind\"");
  }
  const auto kind = v.at("kind").get<std::string>();
  const auto it = input_kinds().find(kind);
  if (it == input_kinds().end()) throw ScenarioError(path + ": unknown input kind \"" + kind + "\"");
  return normalize_object(v, it->second, path, {"kind"});
}

json normalize_field(const json &v, const Field &f, const std::string &path) {
  switch (f.kind) {
    case FieldKind::Real: return real(v, path);
    case FieldKind::Count:
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ScenarioError(path + ": expected a non-negative integer");
      }
      return json(v.get<std::uint64_t>());
    case FieldKind::Bool:
      if (!v.is_boolean()) throw ScenarioError(path + ": expected true or false");
      return v;
    case FieldKind::Choice:
      if (!v.is_string() ||
          std::find(f.choices.begin(), f.choices.end(), v.get<std::string>()) == f.choices.end()) {
        std::string opts;
        for (const auto &c : f.choices) opts += (opts.empty() ? "" : ", ") + c;
        throw ScenarioError(path + ": expected one of " + opts);
      }
      return v;
    case FieldKind::Reals: return reals(v, f.length, path);
    case FieldKind::OptionalReal: return v.is_null() ? v : real(v, path);
    case FieldKind::Input: return normalize_input(v, path);
    case FieldKind::Metric:
      if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s != "squared-angle" && s != "weighted-angle") {
          throw ScenarioError(path + ": metric must be squared-angle, weighted-angle or {\"P\": ...}");
        }
        return v;
      }
      if (v.is_object() && v.size() == 1 && v.contains("P")) {
        return json{{"P", matrix2(v.at("P"), path + ".P")}};
      }
      throw ScenarioError(path + ": metric must be squared-angle, weighted-angle or {\"P\": ...}");
    case FieldKind::Cone:
      if (v.is_string() && v.get<std::string>() == "pendulum-default") return v;
      if (v.is_object() && v.size() == 1 && v.contains("functionals")) {
        return json{{"functionals", matrix2(v.at("functionals"), path + ".functionals")}};
      }
      throw ScenarioError(path + ": cone must be pendulum-default or {\"functionals\": ...}");
  }
  throw ScenarioError(path + ": unsupported field");
}

const std::vector<Field> &top_fields() {
  static const std::vector<Field> fields{
      {"system", FieldKind::Choice, "pendulum", {"pendulum", "overdamped"}},
      {"k", FieldKind::Real, 0.5},
      {"input", FieldKind::Input, json{{"kind", "constant"}, {"u", 0.0}}},
  };
  return fields;
}

json normalize_integrator(const json &v) {
  const std::string path = "integrator";
  if (!v.is_object()) throw ScenarioError(path + ": expected an object");
  const std::string method = v.contains("method") && v.at("method").is_string()
                                 ? v.at("method").get<std::string>()
                                 : (v.contains("method") ? "" : "rk45");
  std::vector<Field> fields;
  if (method == "rk45") {
    fields = {{"rel_tol", FieldKind::Real, 1e-9},
              {"abs_tol", FieldKind::Real, 1e-9},
              {"h_min", FieldKind::Real, 1e-12},
              {"h_max", FieldKind::Real, 0.1}};
  } else if (method == "rk4") {
    fields = {{"h", FieldKind::Real, 0.01}};
  } else {
    throw ScenarioError(path + ".method: expected one of rk45, rk4");
  }
  fields.push_back({"max_time", FieldKind::Real, 1e4});
  fields.push_back({"output_dt", FieldKind::Real, 0.0});
  json in = v;
  in["method"] = method;
  return normalize_object(in, fields, path, {"method"});
}

Vec2 vec2(const json &a) { return {a.at(0).get<double>(), a.at(1).get<double>()}; }

}  // namespace

json parse_strict(const std::string &text) {
  std::vector<std::set<std::string>> open;
  std::string duplicate;
  const json::parser_callback_t cb = [&](int, json::parse_event_t ev, json &parsed) {
    switch (ev) {
      case json::parse_event_t::object_start: open.emplace_back(); break;
      case json::parse_event_t::object_end: open.pop_back(); break;
      case json::parse_event_t::key:
        if (!open.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default: break;
    }
    return true;
  };
  json out;
  try {
    out = json::parse(text, cb);
  } catch (const json::parse_error &e) {
    throw ScenarioError(std::string("malformed JSON: ") + e.what());
  }
  if (!duplicate.empty()) throw ScenarioError("duplicate key \"" + duplicate + "\"");
  return out;
}

json normalize_scenario(const json &raw, const std::vector<Field> &analysis) {
  if (!raw.is_object()) throw ScenarioError("scenario: expected an object");
  json top = raw;
  top.erase("integrator");
  top.erase("analysis");
  json out = normalize_object(top, top_fields(), "scenario");
  out["integrator"] = normalize_integrator(raw.contains("integrator") ? raw.at("integrator") : json::object());
  out["analysis"] =
      normalize_object(raw.contains("analysis") ? raw.at("analysis") : json::object(), analysis, "analysis");
  return out;
}

json default_scenario(const std::vector<Field> &analysis) {
  return normalize_scenario(json::object(), analysis);
}

InputLaw input_from_json(const json &j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return InputLaw::constant(j.at("u").get<double>());
  if (kind == "sinusoidal") {
    return InputLaw::sinusoidal(j.at("bias").get<double>(), j.at("amplitude").get<double>(),
                                j.at("omega").get<double>());
  }
  if (kind == "feedback-linearizing") return InputLaw::feedback_linearizing(input_from_json(j.at("w")));
  if (kind == "half-angle-gain") return InputLaw::half_angle_gain(input_from_json(j.at("r")));
  if (kind == "external") {
    return InputLaw::external(j.at("times").get<std::vector<double>>(),
                              j.at("values").get<std::vector<double>>());
  }
  if (kind == "output-feedback") {
    return InputLaw::output_feedback(j.at("linear").get<double>(), j.at("cubic").get<double>(),
                                     input_from_json(j.at("reference")));
  }
  throw ScenarioError("unknown input kind \"" + kind + "\"");
}

PendulumParams params_from_scenario(const json &scenario) {
  PendulumParams p{scenario.at("k").get<double>(), input_from_json(scenario.at("input"))};
  p.validate();
  return p;
}

PlanarSystem system_from_scenario(const json &scenario) {
  if (scenario.at("system").get<std::string>() == "overdamped") {
    return make_overdamped(input_from_json(scenario.at("input")));
  }
  return make_pendulum(params_from_scenario(scenario));
}

IntegratorConfig config_from_json(const json &j) {
  IntegratorConfig cfg;
  if (j.at("method").get<std::string>() == "rk4") {
    cfg.method = FixedStepRK4{j.at("h").get<double>()};
  } else {
    cfg.method = AdaptiveRK45{j.at("rel_tol").get<double>(), j.at("abs_tol").get<double>(),
                              j.at("h_min").get<double>(), j.at("h_max").get<double>()};
  }
  cfg.max_time = j.at("max_time").get<double>();
  cfg.output_dt = j.at("output_dt").get<double>();
  cfg.validate();
  return cfg;
}

FinslerLyapunov metric_from_json(const json &j, double eta) {
  if (j.is_string()) {
    return j.get<std::string>() == "squared-angle" ? FinslerLyapunov::squared_angle()
                                                   : FinslerLyapunov::weighted_angle(eta);
  }
  const json &P = j.at("P");
  return FinslerLyapunov::constant_quadratic(
      Mat2{P[0][0].get<double>(), P[0][1].get<double>(), P[1][0].get<double>(), P[1][1].get<double>()});
}

ConeFieldSpec cone_from_json(const json &j) {
  if (j.is_string()) return ConeFieldSpec::pendulum_default();
  const json &a = j.at("functionals");
  return ConeFieldSpec::constant(vec2(a[0]), vec2(a[1]));
}

CylinderPoint point_from_json(const json &j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Tangent tangent_from_json(const json &j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace diffgeo::lab
