#pragma once

// JSON encodings shared by the CLI, the HTTP service and session storage.

#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlt/correspondence.hpp"
#include "vlt/geometry.hpp"
#include "vlt/optimizer.hpp"
#include "vlt/rules.hpp"

namespace vlt::wire {

using json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void bad(const std::string& what) { throw Error(ErrorCode::invalid_argument, what); }

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key);
}

}  // namespace detail

// ---- properties -----------------------------------------------------------

inline json to_json(PropertySet s) {
  json out = json::array();
  for (Property p : s.to_vector()) out.push_back(std::string(to_string(p)));
  return out;
}

inline PropertySet properties_from_json(const json& j) {
  if (!j.is_array()) detail::bad("properties must be an array");
  PropertySet out;
  for (const auto& v : j) {
    auto p = v.is_string() ? property_from_string(v.get<std::string>()) : std::nullopt;
    if (!p) detail::bad("unknown property " + v.dump());
    out.insert(*p);
  }
  return out;
}

// ---- geometry -------------------------------------------------------------

inline json to_json(const ElementGeometry& g) { return json{{"x", g.x}, {"y", g.y}, {"z", g.z}, {"w", g.w}, {"h", g.h}}; }

/// Missing fields default to `base`.
inline ElementGeometry geometry_from_json(const json& j, const ElementGeometry& base = {}) {
  if (!j.is_object()) detail::bad("geometry must be an object");
  return ElementGeometry{detail::get_or(j, "x", base.x), detail::get_or(j, "y", base.y), detail::get_or(j, "z", base.z),
                         detail::get_or(j, "w", base.w), detail::get_or(j, "h", base.h)};
}

inline json to_json(const Element& e) {
  json out{{"id", e.id}, {"kind", std::string(to_string(e.kind))}};
  out.update(to_json(e.geometry));
  out["style"] = e.style_digest;
  if (e.text) out["text"] = *e.text;
  out["locked"] = to_json(e.locked);
  return out;
}

inline json to_json(const Design& d) {
  json elements = json::array();
  for (const auto& e : d.elements) elements.push_back(to_json(e));
  return json{{"canvas", {{"width", d.canvas_width}, {"height", d.canvas_height}}}, {"elements", elements}};
}

inline Design design_from_json(const json& j) {
  Design d;
  const json& canvas = detail::field(j, "canvas");
  d.canvas_width = detail::get<double>(canvas, "width");
  d.canvas_height = detail::get<double>(canvas, "height");
  for (const auto& ej : detail::field(j, "elements")) {
    Element e;
    e.id = detail::get<std::string>(ej, "id");
    auto kind = kind_from_string(detail::get<std::string>(ej, "kind"));
    if (!kind) detail::bad("unknown element kind for " + e.id);
    e.kind = *kind;
    e.geometry = geometry_from_json(ej);
    e.style_digest = detail::get_or<std::string>(ej, "style", "");
    if (ej.contains("text") && !ej.at("text").is_null()) e.text = detail::get<std::string>(ej, "text");
    if (ej.contains("locked")) e.locked = properties_from_json(ej.at("locked"));
    d.elements.push_back(std::move(e));
  }
  return d;
}

// ---- transformation -------------------------------------------------------

inline json to_json(const Delta& d) { return json{{"dx", d.dx}, {"dy", d.dy}, {"dz", d.dz}, {"dw", d.dw}, {"dh", d.dh}}; }

inline json to_json(const Transformation& t) {
  json out = json::object();
  for (const auto& [id, d] : t.entries()) out[id] = to_json(d);
  return out;
}

inline Transformation transformation_from_json(const json& j) {
  if (!j.is_object()) detail::bad("transformation must be an object");
  Transformation t;
  for (const auto& [id, dj] : j.items()) {
    t.set(id, Delta{detail::get_or(dj, "dx", 0.0), detail::get_or(dj, "dy", 0.0), detail::get_or(dj, "dz", 0),
                    detail::get_or(dj, "dw", 0.0), detail::get_or(dj, "dh", 0.0)});
  }
  return t;
}

// ---- rules ----------------------------------------------------------------

inline json params_json(const RuleVariant& v) {
  return std::visit(overloaded{
                        [](const rule::Containment& r) { return json{{"parent", r.parent}}; },
                        [](const rule::VAlign& r) { return json{{"mode", std::string(to_string(r.mode))}}; },
                        [](const rule::HAlign& r) { return json{{"mode", std::string(to_string(r.mode))}}; },
                        [](const rule::MarginalOffset& r) {
                          return json{{"axis", std::string(to_string(r.axis))}, {"gap", r.gap}};
                        },
                        [](const rule::SameWidth& r) { return json{{"value", r.value}}; },
                        [](const rule::SameHeight& r) { return json{{"value", r.value}}; },
                        [](const auto&) { return json::object(); },
                    },
                    v);
}

inline json to_json(const LayoutRule& r) {
  return json{{"id", r.id},
              {"type", std::string(variant_name(r.variant))},
              {"params", params_json(r.variant)},
              {"members", r.members},
              {"weight", r.weight}};
}

inline json to_json(const InferenceConfig& c) {
  return json{{"alignTolerance", c.align_tolerance},
              {"sizeTolerance", c.size_tolerance},
              {"gapTolerance", c.gap_tolerance},
              {"minGroupSize", c.min_group_size}};
}

inline InferenceConfig config_from_json(const json& j) {
  InferenceConfig c;
  c.align_tolerance = detail::get_or(j, "alignTolerance", c.align_tolerance);
  c.size_tolerance = detail::get_or(j, "sizeTolerance", c.size_tolerance);
  c.gap_tolerance = detail::get_or(j, "gapTolerance", c.gap_tolerance);
  c.min_group_size = detail::get_or(j, "minGroupSize", c.min_group_size);
  return c;
}

inline json to_json(const RuleSet& s) {
  json rules = json::array();
  for (const auto& r : s.rules) rules.push_back(to_json(r));
  return json{{"config", to_json(s.config)}, {"rules", rules}};
}

inline RuleVariant variant_from_json(const std::string& type, const json& p) {
  auto h_mode = [&]() {
    const auto m = detail::get<std::string>(p, "mode");
    for (HAlignMode x : {HAlignMode::left, HAlignMode::center, HAlignMode::right})
      if (to_string(x) == m) return x;
    detail::bad("unknown HAlign mode " + m);
  };
  auto v_mode = [&]() {
    const auto m = detail::get<std::string>(p, "mode");
    for (VAlignMode x : {VAlignMode::top, VAlignMode::middle, VAlignMode::bottom})
      if (to_string(x) == m) return x;
    detail::bad("unknown VAlign mode " + m);
  };
  auto axis = [&]() {
    const auto a = detail::get<std::string>(p, "axis");
    if (a == "horizontal") return Axis::horizontal;
    if (a == "vertical") return Axis::vertical;
    detail::bad("unknown axis " + a);
  };
  if (type == "Containment") return rule::Containment{detail::get<std::vector<int>>(p, "parent")};
  if (type == "RelativeOrdering") return rule::RelativeOrdering{};
  if (type == "VAlign") return rule::VAlign{v_mode()};
  if (type == "HAlign") return rule::HAlign{h_mode()};
  if (type == "BoundsOverlap") return rule::BoundsOverlap{};
  if (type == "MarginalOffset") return rule::MarginalOffset{axis(), detail::get<double>(p, "gap")};
  if (type == "SameWidth") return rule::SameWidth{detail::get<double>(p, "value")};
  if (type == "SameHeight") return rule::SameHeight{detail::get<double>(p, "value")};
  detail::bad("unknown rule type " + type);
}

/// A rule given by type/params/members; its id is recomputed from content.
inline LayoutRule rule_from_json(const json& j) {
  const json params = j.contains("params") ? j.at("params") : json::object();
  auto members = detail::get<std::vector<std::string>>(j, "members");
  RuleVariant v = variant_from_json(detail::get<std::string>(j, "type"), params);
  if (const auto* c = std::get_if<rule::Containment>(&v); c && c->parent.size() != members.size()) {
    detail::bad("containment parent list must match members");
  }
  if (is_symmetric(v)) members = ::vlt::detail::sorted_copy(members);
  LayoutRule r = make_rule(std::move(v), std::move(members));
  r.weight = detail::get_or(j, "weight", 1.0);
  return r;
}

inline RuleSet ruleset_from_json(const json& j) {
  RuleSet s;
  if (j.contains("config")) s.config = config_from_json(j.at("config"));
  for (const auto& r : detail::field(j, "rules")) s.rules.push_back(rule_from_json(r));
  return s;
}

// ---- correspondence -------------------------------------------------------

inline json to_json(const Correspondence& m) {
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back(json{{"a", p.a}, {"b", p.b}, {"score", p.score}, {"overridden", p.overridden}});
  }
  return json{{"pairs", pairs},
              {"unmatchedA", std::vector<std::string>(m.unmatched_a.begin(), m.unmatched_a.end())},
              {"unmatchedB", std::vector<std::string>(m.unmatched_b.begin(), m.unmatched_b.end())},
              {"overrides", std::vector<std::string>(m.overrides.begin(), m.overrides.end())}};
}

inline Correspondence correspondence_from_json(const json& j) {
  Correspondence m;
  for (const auto& p : detail::field(j, "pairs")) {
    m.pairs.push_back({detail::get<std::string>(p, "a"), detail::get<std::string>(p, "b"), detail::get<double>(p, "score"),
                       detail::get_or(p, "overridden", false)});
  }
  for (const auto& id : detail::get_or(j, "unmatchedA", std::vector<std::string>{})) m.unmatched_a.insert(id);
  for (const auto& id : detail::get_or(j, "unmatchedB", std::vector<std::string>{})) m.unmatched_b.insert(id);
  for (const auto& id : detail::get_or(j, "overrides", std::vector<std::string>{})) m.overrides.insert(id);
  return m;
}

// ---- weights and reward ---------------------------------------------------

inline json to_json(const WeightConfig& w) {
  json rules = json::object();
  for (const auto& [id, v] : w.rule_weights) rules[id] = v;
  return json{{"rules", rules}, {"offset", w.offset}, {"consistency", w.consistency}, {"sigma", w.sigma}};
}

inline WeightConfig weights_from_json(const json& j) {
  WeightConfig w;
  if (j.contains("rules")) {
    for (const auto& [id, v] : j.at("rules").items()) {
      if (!v.is_number()) detail::bad("weight for " + id + " must be a number");
      w.rule_weights[id] = v.get<double>();
    }
  }
  w.offset = detail::get_or(j, "offset", w.offset);
  w.consistency = detail::get_or(j, "consistency", w.consistency);
  w.sigma = detail::get_or(j, "sigma", w.sigma);
  if (!w.is_valid()) detail::bad("weights must be non-negative and sigma positive");
  return w;
}

inline json to_json(const RewardBreakdown& r) {
  json per_rule = json::array();
  for (const auto& c : r.per_rule) {
    per_rule.push_back(json{{"rule", c.rule_id},
                            {"members", c.members},
                            {"residual", c.residual},
                            {"adherence", c.adherence},
                            {"weight", c.weight},
                            {"value", c.value}});
  }
  return json{{"rRule", r.r_rule},
              {"rOff", r.r_off},
              {"rCon", r.r_con},
              {"total", r.total},
              {"tNonOverlap", r.t_non_overlap},
              {"eUniqueProp", r.e_unique_prop},
              {"perRule", per_rule}};
}

/// iteration,total,r_rule,r_off,r_con
inline std::string trace_csv(const std::vector<RewardBreakdown>& trace) {
  std::string out = "iteration,total,r_rule,r_off,r_con\n";
  char buf[160];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, trace[i].total, trace[i].r_rule, trace[i].r_off,
                  trace[i].r_con);
    out += buf;
  }
  return out;
}

}  // namespace vlt::wire
