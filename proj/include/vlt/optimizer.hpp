#pragma once

// Rule-adherence reward and a seeded hill-climbing refinement.
//
//   total = Σ_r ω_r · ln(e_r + 1) [· smoothed adherence]
//         + ω_off · (#text elements occluding nothing)
//         + ω_con / (#distinct sizes and gaps)

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vlt/geometry.hpp"
#include "vlt/rules.hpp"
#include "vlt/transfer.hpp"

namespace vlt {

struct WeightConfig {
  // Per-rule overrides keyed by rule id; rules without one use their own weight.
  std::map<std::string, double, std::less<>> rule_weights;
  double offset = 1.0;
  double consistency = 1.0;
  double sigma = 2.0;

  double rule_weight(const LayoutRule& r) const {
    auto it = rule_weights.find(r.id);
    return it == rule_weights.end() ? r.weight : it->second;
  }

  bool is_valid() const {
    if (!(offset >= 0 && consistency >= 0 && sigma > 0)) return false;
    return std::all_of(rule_weights.begin(), rule_weights.end(), [](const auto& kv) { return kv.second >= 0; });
  }

  friend bool operator==(const WeightConfig&, const WeightConfig&) = default;
};

/// Copy of `w` with every rule weight from `rules` pinned and all weights
/// multiplied by `factor`. Sigma is a length, not a weight, and is kept.
inline WeightConfig scale_weights(const WeightConfig& w, const RuleSet& rules, double factor) {
  WeightConfig out = w;
  for (const auto& r : rules.rules) out.rule_weights[r.id] = w.rule_weight(r);
  for (auto& [id, value] : out.rule_weights) value *= factor;
  out.offset *= factor;
  out.consistency *= factor;
  return out;
}

enum class RewardMode { hard, smooth };

struct RuleContribution {
  std::string rule_id;
  int members = 0;  // e_r
  double residual = 0.0;
  double adherence = 0.0;
  double weight = 0.0;
  double value = 0.0;
};

struct RewardBreakdown {
  double r_rule = 0.0;
  double r_off = 0.0;
  double r_con = 0.0;
  double total = 0.0;
  std::vector<RuleContribution> per_rule;
  int t_non_overlap = 0;
  int e_unique_prop = 1;
};

inline double smoothed_from_residual(double residual, double sigma) {
  return std::exp(-(residual * residual) / (2.0 * sigma * sigma));
}

inline double smoothed_adherence(const Design& design, const LayoutRule& r, double sigma) {
  if (!(sigma > 0)) throw Error(ErrorCode::invalid_argument, "sigma must be positive");
  return smoothed_from_residual(rule_residual(design, r), sigma);
}

/// Text elements whose box shares positive area with no other element.
inline int count_unoccluded_text(const Design& d) {
  int count = 0;
  for (const auto& t : d.elements) {
    if (t.kind != ElementKind::text) continue;
    const bool hit = std::any_of(d.elements.begin(), d.elements.end(), [&](const Element& o) {
      return &o != &t && bounds_relation(t.geometry, o.geometry).relation != Relation::disjoint;
    });
    if (!hit) ++count;
  }
  return count;
}

/// Distinct values among all widths, heights and adjacent gaps, bucketed by
/// `resolution`. At least 1.
inline int count_unique_properties(const Design& d, double resolution) {
  std::set<long long> buckets;
  std::set<double> exact;
  auto add = [&](double v) {
    if (resolution > 0) {
      buckets.insert(std::llround(v / resolution));
    } else {
      exact.insert(v);
    }
  };
  for (const auto& e : d.elements) {
    add(e.geometry.w);
    add(e.geometry.h);
  }
  for (Axis axis : {Axis::horizontal, Axis::vertical}) {
    for (const auto& edge : adjacency_edges(d, axis)) add(edge.gap);
  }
  return std::max<int>(1, static_cast<int>(buckets.size() + exact.size()));
}

inline RewardBreakdown reward(const Design& design, const RuleSet& rules, const WeightConfig& weights,
                              RewardMode mode = RewardMode::hard) {
  RewardBreakdown out;
  for (const auto& r : rules.rules) {
    RuleContribution c;
    c.rule_id = r.id;
    c.members = static_cast<int>(r.members.size());
    c.residual = rule_residual(design, r);
    c.weight = weights.rule_weight(r);
    if (mode == RewardMode::hard) {
      c.adherence = c.residual <= rule_tolerance(r, rules.config) + 1e-9 ? 1.0 : 0.0;
    } else {
      c.adherence = smoothed_from_residual(c.residual, weights.sigma);
    }
    c.value = c.adherence == 0.0 ? 0.0 : c.weight * std::log(static_cast<double>(c.members) + 1.0) * c.adherence;
    out.r_rule += c.value;
    out.per_rule.push_back(std::move(c));
  }
  out.t_non_overlap = count_unoccluded_text(design);
  out.r_off = weights.offset * out.t_non_overlap;
  out.e_unique_prop = count_unique_properties(design, rules.config.size_tolerance);
  out.r_con = weights.consistency / out.e_unique_prop;
  out.total = out.r_rule + out.r_off + out.r_con;
  return out;
}

struct OptimizeOptions {
  int budget = 100;
  std::uint64_t seed = 0;
  // Only these ids may move; empty means the whole design.
  std::set<std::string, std::less<>> selection;
  // Extra locks on top of each element's own locked properties.
  std::map<std::string, PropertySet, std::less<>> locks;
  const std::atomic<bool>* cancel = nullptr;
};

struct OptimizeResult {
  Transformation transformation;
  std::vector<RewardBreakdown> trace;  // smooth-mode reward, initial then per accepted move
};

namespace detail {

/// Strict improvement with a relative margin, so decisions do not change
/// when every weight is scaled by the same factor.
inline bool improves(double candidate, double current) {
  const double scale = std::max(std::abs(candidate), std::abs(current));
  return candidate - current > 1e-12 * scale && candidate > current;
}

inline Transformation restrict_moves(const Transformation& t, const Design& d, const OptimizeOptions& opt) {
  Transformation out;
  for (const auto& [id, delta] : t.entries()) {
    if (!opt.selection.empty() && !opt.selection.count(id)) continue;
    const Element* e = d.find(id);
    if (e == nullptr) continue;
    out.set(id, mask_locked(delta, e->locked));
  }
  return out;
}

inline std::vector<Transformation> candidate_moves(const Design& d, const RuleSet& rules) {
  std::vector<Transformation> out;
  for (const auto& r : rules.rules) {
    if (rule_residual(d, r) > 0.0) {
      try {
        out.push_back(enforce_rule(d, r));
      } catch (const Error&) {
      }
    }
  }
  for (const auto& r : rules.rules) {
    for (double step : {1.0, -1.0, 4.0, -4.0}) {
      Transformation tx, ty;
      for (const auto& id : r.members) {
        tx.set(id, Delta{step, 0, 0, 0, 0});
        ty.set(id, Delta{0, step, 0, 0, 0});
      }
      out.push_back(std::move(tx));
      out.push_back(std::move(ty));
    }
  }
  for (const auto& r : rules.rules) {
    if (r.members.size() < 2) continue;
    std::vector<double> ws, hs;
    for (const auto& id : r.members) {
      ws.push_back(d.at(id).geometry.w);
      hs.push_back(d.at(id).geometry.h);
    }
    const double mw = modal_anchor(ws), mh = modal_anchor(hs);
    Transformation tw, th;
    for (std::size_t i = 0; i < r.members.size(); ++i) {
      tw.set(r.members[i], Delta{0, 0, 0, mw - ws[i], 0});
      th.set(r.members[i], Delta{0, 0, 0, 0, mh - hs[i]});
    }
    out.push_back(std::move(tw));
    out.push_back(std::move(th));
  }
  return out;
}

}  // namespace detail

/// Hill-climbs smooth-mode reward from `design`. Each iteration evaluates
/// every candidate move (rule snaps, ±1/±4 group nudges, size unification)
/// in seeded order and accepts the best strict improvement.
inline OptimizeResult optimize(const Design& design, const RuleSet& rules, const WeightConfig& weights,
                               const OptimizeOptions& options = {}) {
  Design current = design;
  for (auto& e : current.elements) {
    if (auto it = options.locks.find(e.id); it != options.locks.end()) e.locked.merge(it->second);
  }
  OptimizeResult result;
  RewardBreakdown score = reward(current, rules, weights, RewardMode::smooth);
  result.trace.push_back(score);
  std::mt19937_64 rng(options.seed);

  for (int iter = 0; iter < options.budget; ++iter) {
    if (options.cancel != nullptr && options.cancel->load()) break;
    auto candidates = detail::candidate_moves(current, rules);
    std::shuffle(candidates.begin(), candidates.end(), rng);

    std::optional<Transformation> best_move;
    std::optional<Design> best_design;
    RewardBreakdown best_score = score;
    for (const auto& raw : candidates) {
      const Transformation move = detail::restrict_moves(raw, current, options);
      if (move.empty()) continue;
      Design next;
      try {
        next = apply_transformation(current, move);
      } catch (const Error&) {
        continue;
      }
      RewardBreakdown s = reward(next, rules, weights, RewardMode::smooth);
      if (detail::improves(s.total, best_score.total)) {
        best_score = std::move(s);
        best_move = move;
        best_design = std::move(next);
      }
    }
    if (!best_move) break;
    result.transformation = compose(result.transformation, *best_move);
    current = std::move(*best_design);
    score = best_score;
    result.trace.push_back(score);
  }
  return result;
}

}  // namespace vlt
