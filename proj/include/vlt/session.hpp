#pragma once

// Editing session: holds A, B, the mapping and the accumulated
// transformation, and applies designer commands with undo/redo.

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vlt/correspondence.hpp"
#include "vlt/optimizer.hpp"
#include "vlt/rules.hpp"
#include "vlt/svg.hpp"
#include "vlt/transfer.hpp"
#include "vlt/wire.hpp"

namespace vlt {

inline constexpr std::size_t kUndoDepth = 50;

using wire::json;

/// Everything a command can change. Derived state is recomputed from it.
struct SessionSnapshot {
  Transformation transformation;
  Correspondence mapping;
  WeightConfig weights;
  std::map<std::string, PropertySet, std::less<>> locks;

  friend bool operator==(const SessionSnapshot&, const SessionSnapshot&) = default;
};

inline std::string new_session_id() {
  std::random_device rd;
  std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Session {
 public:
  /// Parses both designs. Parse errors name the failing design.
  static Session create(std::string id, std::string svg_a, std::string svg_b, InferenceConfig config = {}) {
    Session s;
    s.id_ = std::move(id);
    s.svg_a_ = std::move(svg_a);
    s.svg_b_ = std::move(svg_b);
    s.config_ = config;
    s.a_ = parse_named(s.svg_a_, "A");
    s.b_ = parse_named(s.svg_b_, "B");
    s.rules_a_ = infer_rules(s.a_.design, config);
    s.rules_b_ = infer_rules(s.b_.design, config);
    s.state_.mapping = match_designs(s.a_.design, s.b_.design);
    s.refresh();
    return s;
  }

  const std::string& id() const { return id_; }
  const Design& target() const { return a_.design; }
  const Design& source() const { return b_.design; }
  const Design& output() const { return output_; }
  const RuleSet& target_rules() const { return rules_a_; }
  const RuleSet& source_rules() const { return rules_b_; }
  const RuleSet& output_rules() const { return rules_out_; }
  const Correspondence& mapping() const { return state_.mapping; }
  const Transformation& transformation() const { return state_.transformation; }
  const WeightConfig& weights() const { return state_.weights; }
  const SessionSnapshot& snapshot() const { return state_; }
  std::size_t undo_depth() const { return undo_.size(); }
  std::size_t redo_depth() const { return redo_.size(); }
  const std::vector<RewardBreakdown>& last_trace() const { return last_trace_; }

  double scale_x() const { return a_.design.canvas_width / b_.design.canvas_width; }
  double scale_y() const { return a_.design.canvas_height / b_.design.canvas_height; }

  /// Rules scoring A*: target rules plus source rules mapped onto A.
  RuleSet scoring() const { return scoring_rules(rules_a_, rules_b_, state_.mapping, scale_x(), scale_y()); }

  RewardBreakdown current_reward(RewardMode mode = RewardMode::hard) const {
    return reward(output_, scoring(), state_.weights, mode);
  }

  std::string export_svg() const { return serialize_design(output_, a_.fragments); }

  /// Full observable state (history excluded).
  json state_json() const {
    return json{{"id", id_},
                {"target", wire::to_json(a_.design)},
                {"source", wire::to_json(b_.design)},
                {"output", wire::to_json(output_)},
                {"mapping", wire::to_json(state_.mapping)},
                {"transformation", wire::to_json(state_.transformation)},
                {"rules",
                 {{"target", wire::to_json(rules_a_)},
                  {"source", wire::to_json(rules_b_)},
                  {"output", wire::to_json(rules_out_)}}},
                {"weights", wire::to_json(state_.weights)},
                {"locks", locks_json(state_.locks)},
                {"reward",
                 {{"hard", wire::to_json(current_reward(RewardMode::hard))},
                  {"smooth", wire::to_json(current_reward(RewardMode::smooth))}}}};
  }

  /// Applies one tagged command. On error the session is left unchanged.
  /// Returns the changed element ids, the step's transformation, the
  /// refreshed output rules and the reward.
  json mutate(const json& command, const std::atomic<bool>* cancel = nullptr) {
    if (!command.is_object() || !command.contains("type") || !command.at("type").is_string()) {
      throw Error(ErrorCode::unknown_command, "command needs a string 'type'");
    }
    const std::string type = command.at("type").get<std::string>();
    const Design before = output_;

    if (type == "undo" || type == "redo") {
      auto& from = type == "undo" ? undo_ : redo_;
      auto& to = type == "undo" ? redo_ : undo_;
      if (from.empty()) throw Error(ErrorCode::invalid_argument, "nothing to " + type);
      push_bounded(to, state_);
      state_ = from.back();
      from.pop_back();
      last_trace_.clear();
      refresh();
      return response(type, before, Transformation{});
    }

    SessionSnapshot next = state_;
    Transformation step;
    std::vector<RewardBreakdown> trace;
    const auto ids = [&]() { return wire::detail::get<std::vector<std::string>>(command, "ids"); };
    const auto context = [&]() { return make_context(output_, b_.design, state_.mapping, rules_out_, rules_b_); };

    if (type == "global_copy") {
      step = global_layout_copy(context());
    } else if (type == "element_copy") {
      const auto sel = ids();
      step = element_layout_copy(context(), sel);
    } else if (type == "property_copy") {
      const auto sel = ids();
      step = property_copy(context(), sel, wire::properties_from_json(wire::detail::field(command, "properties")));
    } else if (type == "enforce_rule") {
      step = enforce_rule(output_, resolve_rule(command));
    } else if (type == "conform_offset") {
      const auto sel = ids();
      step = conform_offset(context(), sel, parse_axis(wire::detail::get<std::string>(command, "axis")));
    } else if (type == "set_geometry") {
      const std::string id = wire::detail::get<std::string>(command, "id");
      const Element& e = output_.at(id);
      step = set_geometry(output_, id, wire::geometry_from_json(wire::detail::field(command, "geometry"), e.geometry));
    } else if (type == "match_override") {
      const std::string a = wire::detail::get<std::string>(command, "a");
      std::optional<std::string> b;
      if (command.contains("b") && !command.at("b").is_null()) b = wire::detail::get<std::string>(command, "b");
      next.mapping = override_match(state_.mapping, a_.design, b_.design, a, b);
    } else if (type == "rematch") {
      MatchOptions opt;
      opt.threshold = wire::detail::get_or(command, "threshold", opt.threshold);
      next.mapping = match_designs(a_.design, b_.design, opt, &state_.mapping);
    } else if (type == "set_weight") {
      apply_weight(next.weights, command);
    } else if (type == "lock") {
      const std::string id = wire::detail::get<std::string>(command, "id");
      output_.at(id);
      const PropertySet props = wire::properties_from_json(wire::detail::field(command, "properties"));
      PropertySet& slot = next.locks[id];
      if (wire::detail::get_or(command, "locked", true)) slot.merge(props);
      else slot.remove(props);
      if (slot.empty()) next.locks.erase(id);
    } else if (type == "optimize") {
      OptimizeOptions opt;
      opt.budget = wire::detail::get_or(command, "budget", opt.budget);
      opt.seed = wire::detail::get_or<std::uint64_t>(command, "seed", 0);
      if (opt.budget < 0) throw Error(ErrorCode::invalid_argument, "budget must be non-negative");
      for (const auto& id : wire::detail::get_or(command, "selection", std::vector<std::string>{})) {
        output_.at(id);
        opt.selection.insert(id);
      }
      opt.cancel = cancel;
      auto result = optimize(output_, scoring(), state_.weights, opt);
      step = std::move(result.transformation);
      trace = std::move(result.trace);
    } else {
      throw Error(ErrorCode::unknown_command, type);
    }

    next.transformation = compose(state_.transformation, step);
    // Validate before committing.
    Design candidate = apply_transformation(a_.design, next.transformation);
    (void)candidate;

    push_bounded(undo_, state_);
    redo_.clear();
    state_ = std::move(next);
    last_trace_ = std::move(trace);
    refresh();
    json out = response(type, before, step);
    if (type == "optimize") {
      json t = json::array();
      for (const auto& r : last_trace_) t.push_back(r.total);
      out["trace"] = t;
    }
    return out;
  }

  // ---- persistence --------------------------------------------------------

  json to_storage() const {
    json undo = json::array(), redo = json::array();
    for (const auto& s : undo_) undo.push_back(snapshot_json(s));
    for (const auto& s : redo_) redo.push_back(snapshot_json(s));
    return json{{"id", id_},          {"svgA", svg_a_},   {"svgB", svg_b_}, {"config", wire::to_json(config_)},
                {"state", snapshot_json(state_)}, {"undo", undo}, {"redo", redo}};
  }

  static Session from_storage(const json& j) {
    Session s = create(wire::detail::get<std::string>(j, "id"), wire::detail::get<std::string>(j, "svgA"),
                       wire::detail::get<std::string>(j, "svgB"),
                       wire::config_from_json(wire::detail::get_or(j, "config", json::object())));
    s.state_ = snapshot_from_json(wire::detail::field(j, "state"));
    for (const auto& u : wire::detail::get_or(j, "undo", json::array())) s.undo_.push_back(snapshot_from_json(u));
    for (const auto& r : wire::detail::get_or(j, "redo", json::array())) s.redo_.push_back(snapshot_from_json(r));
    s.refresh();
    return s;
  }

 private:
  Session() = default;

  static ParsedDesign parse_named(const std::string& svg, const char* which) {
    try {
      return parse_design(svg);
    } catch (const Error& e) {
      throw Error(e.code(), std::string("design ") + which + ": " + e.detail());
    }
  }

  static Axis parse_axis(const std::string& s) {
    if (s == "horizontal" || s == "x") return Axis::horizontal;
    if (s == "vertical" || s == "y") return Axis::vertical;
    throw Error(ErrorCode::invalid_argument, "unknown axis " + s);
  }

  static void push_bounded(std::deque<SessionSnapshot>& stack, const SessionSnapshot& s) {
    stack.push_back(s);
    while (stack.size() > kUndoDepth) stack.pop_front();
  }

  static json locks_json(const std::map<std::string, PropertySet, std::less<>>& locks) {
    json out = json::object();
    for (const auto& [id, props] : locks) out[id] = wire::to_json(props);
    return out;
  }

  static json snapshot_json(const SessionSnapshot& s) {
    return json{{"transformation", wire::to_json(s.transformation)},
                {"mapping", wire::to_json(s.mapping)},
                {"weights", wire::to_json(s.weights)},
                {"locks", locks_json(s.locks)}};
  }

  static SessionSnapshot snapshot_from_json(const json& j) {
    SessionSnapshot s;
    s.transformation = wire::transformation_from_json(wire::detail::field(j, "transformation"));
    s.mapping = wire::correspondence_from_json(wire::detail::field(j, "mapping"));
    s.weights = wire::weights_from_json(wire::detail::field(j, "weights"));
    const json locks = wire::detail::get_or(j, "locks", json::object());
    for (const auto& [id, props] : locks.items()) {
      s.locks[id] = wire::properties_from_json(props);
    }
    return s;
  }

  static void apply_weight(WeightConfig& w, const json& command) {
    const double value = wire::detail::get<double>(command, "weight");
    if (!(value >= 0) || !std::isfinite(value)) throw Error(ErrorCode::invalid_argument, "weight must be non-negative");
    if (command.contains("rule")) {
      w.rule_weights[wire::detail::get<std::string>(command, "rule")] = value;
      return;
    }
    const std::string term = wire::detail::get<std::string>(command, "term");
    if (term == "offset") w.offset = value;
    else if (term == "consistency") w.consistency = value;
    else if (term == "sigma" && value > 0) w.sigma = value;
    else throw Error(ErrorCode::invalid_argument, "unknown weight term " + term);
  }

  /// A rule by id (output, target or mapped source rules), by id of a
  /// source rule, or given inline; optionally extended with more members.
  LayoutRule resolve_rule(const json& command) const {
    const json& spec = wire::detail::field(command, "rule");
    std::optional<LayoutRule> found;
    if (spec.is_object()) {
      found = wire::rule_from_json(spec);
    } else if (spec.is_string()) {
      const std::string id = spec.get<std::string>();
      const RuleSet scored = scoring();
      if (const LayoutRule* r = rules_out_.find(id)) found = *r;
      else if (const LayoutRule* r = scored.find(id)) found = *r;
      else if (const LayoutRule* r = rules_b_.find(id)) {
        found = map_rule_to_target(*r, state_.mapping, scale_x(), scale_y(), 1);
        if (!found) throw Error(ErrorCode::unmatched_element, "source rule " + id + " has no matched members");
      }
      if (!found) throw Error(ErrorCode::invalid_argument, "unknown rule " + id);
    } else {
      throw Error(ErrorCode::invalid_argument, "rule must be an id or an object");
    }
    LayoutRule r = *found;
    const auto extra = wire::detail::get_or(command, "add_members", std::vector<std::string>{});
    if (!extra.empty()) {
      for (const auto& id : extra) {
        output_.at(id);
        if (std::find(r.members.begin(), r.members.end(), id) != r.members.end()) continue;
        r.members.push_back(id);
        if (auto* c = std::get_if<rule::Containment>(&r.variant)) c->parent.push_back(0);
      }
      if (is_symmetric(r.variant)) std::sort(r.members.begin(), r.members.end());
      const double weight = r.weight;
      r = make_rule(r.variant, r.members);
      r.weight = weight;
    }
    for (const auto& id : r.members) output_.at(id);
    return r;
  }

  void refresh() {
    output_ = apply_transformation(a_.design, state_.transformation);
    for (auto& e : output_.elements) {
      auto it = state_.locks.find(e.id);
      e.locked = it == state_.locks.end() ? PropertySet{} : it->second;
    }
    rules_out_ = infer_rules(output_, config_);
  }

  json response(const std::string& type, const Design& before, const Transformation& step) const {
    json changed = json::array();
    for (const auto& e : output_.elements) {
      const Element* old = before.find(e.id);
      if (old == nullptr || !(old->geometry == e.geometry)) changed.push_back(e.id);
    }
    return json{{"id", id_},
                {"command", type},
                {"changed", changed},
                {"step", wire::to_json(step)},
                {"transformation", wire::to_json(state_.transformation)},
                {"output", wire::to_json(output_)},
                {"mapping", wire::to_json(state_.mapping)},
                {"rules", wire::to_json(rules_out_)},
                {"reward", wire::to_json(current_reward(RewardMode::hard))},
                {"history", {{"undo", undo_.size()}, {"redo", redo_.size()}}}};
  }

  std::string id_;
  std::string svg_a_;
  std::string svg_b_;
  InferenceConfig config_;
  ParsedDesign a_;
  ParsedDesign b_;
  RuleSet rules_a_;
  RuleSet rules_b_;
  SessionSnapshot state_;
  Design output_;
  RuleSet rules_out_;
  std::deque<SessionSnapshot> undo_;
  std::deque<SessionSnapshot> redo_;
  std::vector<RewardBreakdown> last_trace_;
};

/// Replays a command list; accepts either an array or {"commands": [...]}.
inline std::vector<json> script_commands(const json& script) {
  const json& list = script.is_object() ? wire::detail::field(script, "commands") : script;
  if (!list.is_array()) throw Error(ErrorCode::invalid_argument, "script must be a command array");
  return std::vector<json>(list.begin(), list.end());
}

/// One JSON file per session under a directory.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& dir() const { return dir_; }

  void save(const Session& s) const {
    const auto path = file_for(s.id());
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << s.to_storage().dump();
      if (!out) throw std::runtime_error("cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  std::optional<Session> load(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    std::ifstream in(file_for(id), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    return Session::from_storage(json::parse(buf.str()));
  }

  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
  }

 private:
  std::filesystem::path file_for(const std::string& id) const { return dir_ / (id + ".json"); }

  std::filesystem::path dir_;
};

}  // namespace vlt
