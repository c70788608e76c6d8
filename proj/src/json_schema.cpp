#include "regensim/json_schema.hpp"

#include <map>

#include "regensim/errors.hpp"

namespace regensim::jsonschema {

namespace {

using nlohmann::json;

bool type_matches(const std::string& type, const json& value) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  return false;
}

void check(const json& schema, const json& value, const std::string& path,
           std::vector<std::string>& out) {
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(t.get<std::string>(), value);
    } else if (t.is_array()) {
      for (const auto& alt : t)
        if (type_matches(alt.get<std::string>(), value)) ok = true;
    }
    if (!ok) {
      out.push_back(path + ": type mismatch (expected " + t.dump() + ")");
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& alt : schema["enum"])
      if (alt == value) ok = true;
    if (!ok) out.push_back(path + ": value not in enum " + schema["enum"].dump());
  }
  if (value.is_number()) {
    double v = value.get<double>();
    if (schema.contains("minimum") && v < schema["minimum"].get<double>())
      out.push_back(path + ": below minimum");
    if (schema.contains("maximum") && v > schema["maximum"].get<double>())
      out.push_back(path + ": above maximum");
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& req : schema["required"]) {
        if (!value.contains(req.get<std::string>()))
          out.push_back(path + ": missing required property '" + req.get<std::string>() + "'");
      }
    }
    if (schema.contains("properties")) {
      for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it) {
        if (value.contains(it.key())) check(it.value(), value[it.key()], path + "." + it.key(), out);
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < value.size(); ++i)
      check(schema["items"], value[i], path + "[" + std::to_string(i) + "]", out);
  }
}

json number_or_null() { return json{{"type", json::array({"number", "null"})}}; }

json make_schema(const std::string& subcommand) {
  json num = {{"type", "number"}};
  json integer = {{"type", "integer"}};
  json str = {{"type", "string"}};
  json base_props = {
      {"subcommand", {{"type", "string"}, {"enum", json::array({subcommand})}}},
      {"seed", integer},
  };
  if (subcommand == "minorize") {
    json s = {{"type", "object"},
              {"required", json::array({"subcommand", "seed", "alpha", "alpha_raw", "c_radius",
                                        "window", "nu_grid", "worst_violation"})},
              {"properties", base_props}};
    s["properties"]["alpha"] = {{"type", "number"}, {"minimum", 0.0}, {"maximum", 1.0}};
    s["properties"]["alpha_raw"] = num;
    s["properties"]["c_radius"] = num;
    s["properties"]["window"] = {{"type", "array"}, {"items", num}};
    s["properties"]["nu_grid"] = {{"type", "array"}, {"items", num}};
    s["properties"]["worst_violation"] = num;
    s["properties"]["clamp_violations"] = integer;
    return s;
  }
  if (subcommand == "drift-check") {
    json s = {{"type", "object"},
              {"required", json::array({"subcommand", "seed", "model", "m0", "b_hat",
                                        "worst_margin", "n_grid"})},
              {"properties", base_props}};
    s["properties"]["model"] = str;
    s["properties"]["m0"] = number_or_null();
    s["properties"]["b_hat"] = num;
    s["properties"]["worst_margin"] = num;
    s["properties"]["n_grid"] = integer;
    return s;
  }
  if (subcommand == "simulate") {
    json s = {{"type", "object"},
              {"required",
               json::array({"subcommand", "seed", "model", "horizon", "step", "n_steps",
                            "final_state"})},
              {"properties", base_props}};
    s["properties"]["model"] = str;
    s["properties"]["horizon"] = num;
    s["properties"]["step"] = num;
    s["properties"]["n_steps"] = integer;
    s["properties"]["final_state"] = num;
    return s;
  }
  if (subcommand == "regen-stats") {
    json s = {{"type", "object"},
              {"required", json::array({"subcommand", "seed", "ell", "mu_f", "slope", "p_order",
                                        "replicas", "n_cycles", "f"})},
              {"properties", base_props}};
    s["properties"]["ell"] = num;
    s["properties"]["ell_se"] = num;
    s["properties"]["mu_f"] = num;
    s["properties"]["mu_f_se"] = num;
    s["properties"]["p_order"] = num;
    s["properties"]["replicas"] = integer;
    s["properties"]["n_cycles"] = integer;
    s["properties"]["f"] = str;
    s["properties"]["cycle_moment_p"] = num;
    s["properties"]["cycle_moment"] = num;
    s["properties"]["cycle_moment_se"] = num;
    s["properties"]["slope"] = number_or_null();
    s["properties"]["envelope_slope"] = number_or_null();
    s["properties"]["envelope_r2"] = number_or_null();
    s["properties"]["hitting_all_pass"] = {{"type", json::array({"boolean", "null"})}};
    return s;
  }
  if (subcommand == "deviation") {
    json s = {{"type", "object"},
              {"required", json::array({"subcommand", "seed", "ell", "mu_f", "slope", "p_order",
                                        "replicas", "epsilon", "statistic"})},
              {"properties", base_props}};
    s["properties"]["ell"] = number_or_null();
    s["properties"]["mu_f"] = number_or_null();
    s["properties"]["slope"] = number_or_null();
    s["properties"]["p_order"] = num;
    s["properties"]["replicas"] = integer;
    s["properties"]["epsilon"] = num;
    s["properties"]["statistic"] = {{"type", "string"},
                                    {"enum", json::array({"time_average", "counting"})}};
    s["properties"]["center_calibrated"] = {{"type", "boolean"}};
    s["properties"]["reliable_points"] = integer;
    return s;
  }
  if (subcommand == "fuknagaev") {
    json s = {{"type", "object"},
              {"required", json::array({"subcommand", "seed", "p", "n", "replicas",
                                        "domination_pass", "worst_gap"})},
              {"properties", base_props}};
    s["properties"]["p"] = num;
    s["properties"]["n"] = integer;
    s["properties"]["replicas"] = integer;
    s["properties"]["domination_pass"] = {{"type", "boolean"}};
    s["properties"]["worst_gap"] = num;
    return s;
  }
  throw validation_error("no schema for subcommand '" + subcommand + "'");
}

}  // namespace

std::vector<std::string> validate(const json& schema, const json& doc) {
  std::vector<std::string> out;
  check(schema, doc, "$", out);
  return out;
}

const json& summary_schema(const std::string& subcommand) {
  static std::map<std::string, json> cache;
  auto it = cache.find(subcommand);
  if (it == cache.end()) it = cache.emplace(subcommand, make_schema(subcommand)).first;
  return it->second;
}

}  // namespace regensim::jsonschema
