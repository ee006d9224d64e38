#pragma once

// Layout rule inference, adherence residuals and selection filtering.
//
// Symmetric families (alignment, same size, overlap, offsets) are stored as
// sorted member sets. Asymmetric families keep order: containment as a
// preorder list with parent indices, relative ordering as a reading-order
// sequence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "vlt/geometry.hpp"

namespace vlt {

struct InferenceConfig {
  double align_tolerance = 1.0;
  double size_tolerance = 1.0;
  double gap_tolerance = 1.0;
  int min_group_size = 2;

  friend bool operator==(const InferenceConfig&, const InferenceConfig&) = default;
};

enum class HAlignMode : std::uint8_t { left, center, right };
enum class VAlignMode : std::uint8_t { top, middle, bottom };
enum class Axis : std::uint8_t { horizontal, vertical };

constexpr std::string_view to_string(HAlignMode m) {
  switch (m) {
    case HAlignMode::left: return "left";
    case HAlignMode::center: return "center";
    case HAlignMode::right: return "right";
  }
  return "?";
}

constexpr std::string_view to_string(VAlignMode m) {
  switch (m) {
    case VAlignMode::top: return "top";
    case VAlignMode::middle: return "middle";
    case VAlignMode::bottom: return "bottom";
  }
  return "?";
}

constexpr std::string_view to_string(Axis a) { return a == Axis::horizontal ? "horizontal" : "vertical"; }

namespace rule {

struct Containment {
  // parent[i] indexes into the rule's member list; -1 marks the root.
  std::vector<int> parent;
  friend bool operator==(const Containment&, const Containment&) = default;
};
struct RelativeOrdering {
  friend bool operator==(const RelativeOrdering&, const RelativeOrdering&) = default;
};
struct VAlign {
  VAlignMode mode = VAlignMode::top;
  friend bool operator==(const VAlign&, const VAlign&) = default;
};
struct HAlign {
  HAlignMode mode = HAlignMode::left;
  friend bool operator==(const HAlign&, const HAlign&) = default;
};
struct BoundsOverlap {
  friend bool operator==(const BoundsOverlap&, const BoundsOverlap&) = default;
};
struct MarginalOffset {
  Axis axis = Axis::horizontal;
  double gap = 0.0;
  friend bool operator==(const MarginalOffset&, const MarginalOffset&) = default;
};
struct SameWidth {
  double value = 0.0;
  friend bool operator==(const SameWidth&, const SameWidth&) = default;
};
struct SameHeight {
  double value = 0.0;
  friend bool operator==(const SameHeight&, const SameHeight&) = default;
};

}  // namespace rule

using RuleVariant = std::variant<rule::Containment, rule::RelativeOrdering, rule::VAlign, rule::HAlign,
                                 rule::BoundsOverlap, rule::MarginalOffset, rule::SameWidth, rule::SameHeight>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::string_view variant_name(const RuleVariant& v) {
  static constexpr std::string_view names[] = {"Containment",   "RelativeOrdering", "VAlign",    "HAlign",
                                               "BoundsOverlap", "MarginalOffset",   "SameWidth", "SameHeight"};
  return names[v.index()];
}

/// Variant name plus its discrete parameter (mode/axis), e.g. "HAlign:left".
inline std::string variant_key(const RuleVariant& v) {
  std::string key(variant_name(v));
  std::visit(overloaded{
                 [&](const rule::VAlign& r) { key += ":" + std::string(to_string(r.mode)); },
                 [&](const rule::HAlign& r) { key += ":" + std::string(to_string(r.mode)); },
                 [&](const rule::MarginalOffset& r) { key += ":" + std::string(to_string(r.axis)); },
                 [](const auto&) {},
             },
             v);
  return key;
}

inline bool is_symmetric(const RuleVariant& v) {
  return !std::holds_alternative<rule::Containment>(v) && !std::holds_alternative<rule::RelativeOrdering>(v);
}

struct LayoutRule {
  std::string id;
  RuleVariant variant;
  std::vector<std::string> members;
  double weight = 1.0;

  friend bool operator==(const LayoutRule&, const LayoutRule&) = default;
};

struct RuleSet {
  std::vector<LayoutRule> rules;
  InferenceConfig config;

  const LayoutRule* find(std::string_view id) const {
    for (const auto& r : rules) {
      if (r.id == id) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::vector<std::string> sorted_copy(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

struct Keyed {
  double value;
  std::size_t index;
};

/// Maximal groups of values whose spread is within `tol` (maximal cliques of
/// the interval graph), found by a sorted sweep. Returns element indices.
inline std::vector<std::vector<std::size_t>> maximal_windows(std::vector<Keyed> items, double tol,
                                                             std::size_t min_size,
                                                             const std::vector<std::string>& ids) {
  std::sort(items.begin(), items.end(), [&](const Keyed& a, const Keyed& b) {
    if (a.value != b.value) return a.value < b.value;
    return ids[a.index] < ids[b.index];
  });
  std::vector<std::vector<std::size_t>> out;
  std::size_t prev_end = 0;
  bool have_prev = false;
  std::size_t j = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0 && items[i].value == items[i - 1].value) continue;
    if (j < i) j = i;
    while (j + 1 < items.size() && items[j + 1].value - items[i].value <= tol) ++j;
    if (!have_prev || j > prev_end) {
      if (j - i + 1 >= min_size) {
        std::vector<std::size_t> group;
        for (std::size_t k = i; k <= j; ++k) group.push_back(items[k].index);
        out.push_back(std::move(group));
      }
    }
    prev_end = j;
    have_prev = true;
  }
  return out;
}

inline double h_coord(const ElementGeometry& g, HAlignMode m) {
  switch (m) {
    case HAlignMode::left: return g.x;
    case HAlignMode::center: return g.center_x();
    case HAlignMode::right: return g.right();
  }
  return g.x;
}

inline double v_coord(const ElementGeometry& g, VAlignMode m) {
  switch (m) {
    case VAlignMode::top: return g.y;
    case VAlignMode::middle: return g.center_y();
    case VAlignMode::bottom: return g.bottom();
  }
  return g.y;
}

}  // namespace detail

/// Reference value for alignment/size/gap residuals: the most common member
/// value. Ties go to the candidate needing the least total displacement,
/// then to the smallest value.
inline double modal_anchor(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::map<double, int> counts;
  for (double v : values) ++counts[v];
  int best_count = 0;
  for (const auto& [v, c] : counts) best_count = std::max(best_count, c);
  double best = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& [v, c] : counts) {
    if (c != best_count) continue;
    double cost = 0.0;
    for (double u : values) cost += std::abs(u - v);
    if (cost < best_cost) {
      best_cost = cost;
      best = v;
    }
  }
  return best;
}

inline std::string make_rule_id(const RuleVariant& v, const std::vector<std::string>& members) {
  std::uint64_t h = detail::fnv1a(variant_key(v));
  for (const auto& m : detail::sorted_copy(members)) {
    h = detail::fnv1a("|", h);
    h = detail::fnv1a(m, h);
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "r%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline LayoutRule make_rule(RuleVariant v, std::vector<std::string> members) {
  LayoutRule r;
  r.id = make_rule_id(v, members);
  r.variant = std::move(v);
  r.members = std::move(members);
  return r;
}

/// Directed adjacency between disjoint neighbours along one axis.
struct AdjacencyEdge {
  std::size_t from;  // element index (left/top)
  std::size_t to;    // element index (right/bottom)
  double gap;
};

/// Edges a->b where b is a's nearest neighbour past its far edge (among
/// elements sharing a positive extent on the cross axis), and a is b's
/// nearest neighbour on the near side. Nearest ties go to the smaller id.
inline std::vector<AdjacencyEdge> adjacency_edges(const Design& d, Axis axis) {
  const auto& els = d.elements;
  const std::size_t n = els.size();
  auto start = [&](std::size_t i) { return axis == Axis::horizontal ? els[i].geometry.x : els[i].geometry.y; };
  auto end = [&](std::size_t i) {
    return axis == Axis::horizontal ? els[i].geometry.right() : els[i].geometry.bottom();
  };
  auto cross_overlap = [&](std::size_t i, std::size_t j) {
    const auto& a = els[i].geometry;
    const auto& b = els[j].geometry;
    return axis == Axis::horizontal ? interval_overlap(a.y, a.h, b.y, b.h) > 0.0
                                    : interval_overlap(a.x, a.w, b.x, b.w) > 0.0;
  };
  auto better = [&](std::optional<std::size_t> cur, double cur_gap, std::size_t cand, double gap) {
    return !cur || gap < cur_gap || (gap == cur_gap && els[cand].id < els[*cur].id);
  };

  std::vector<std::optional<std::size_t>> next(n), prev(n);
  std::vector<double> next_gap(n, 0.0), prev_gap(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || start(j) < end(i) || !cross_overlap(i, j)) continue;
      const double gap = start(j) - end(i);
      if (better(next[i], next_gap[i], j, gap)) {
        next[i] = j;
        next_gap[i] = gap;
      }
      if (better(prev[j], prev_gap[j], i, gap)) {
        prev[j] = i;
        prev_gap[j] = gap;
      }
    }
  }
  std::vector<AdjacencyEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    if (next[i] && prev[*next[i]] == i) edges.push_back({i, *next[i], next_gap[i]});
  }
  return edges;
}

/// Index of each element's closest container (smallest containing area,
/// ties by id), or nullopt for top-level elements.
inline std::vector<std::optional<std::size_t>> containment_parents(const Design& d) {
  const auto& els = d.elements;
  std::vector<std::optional<std::size_t>> parent(els.size());
  for (std::size_t c = 0; c < els.size(); ++c) {
    for (std::size_t p = 0; p < els.size(); ++p) {
      if (p == c || !contains(els[p].geometry, els[c].geometry)) continue;
      if (!parent[c]) {
        parent[c] = p;
        continue;
      }
      const auto& cur = els[*parent[c]];
      const double area = els[p].geometry.area();
      if (area < cur.geometry.area() || (area == cur.geometry.area() && els[p].id < cur.id)) parent[c] = p;
    }
  }
  return parent;
}

namespace detail {

inline void bron_kerbosch(std::vector<std::size_t> r, std::vector<std::size_t> p, std::vector<std::size_t> x,
                          const std::vector<std::vector<bool>>& adj, std::vector<std::vector<std::size_t>>& out) {
  if (p.empty() && x.empty()) {
    out.push_back(std::move(r));
    return;
  }
  // Pivot on the vertex with the most neighbours in P.
  std::size_t pivot = p.empty() ? x.front() : p.front();
  std::size_t best = 0;
  for (auto* set : {&p, &x}) {
    for (std::size_t u : *set) {
      std::size_t cnt = 0;
      for (std::size_t v : p) cnt += adj[u][v] ? 1 : 0;
      if (cnt > best) {
        best = cnt;
        pivot = u;
      }
    }
  }
  const std::vector<std::size_t> candidates = p;
  for (std::size_t v : candidates) {
    if (adj[pivot][v]) continue;
    std::vector<std::size_t> r2 = r, p2, x2;
    r2.push_back(v);
    for (std::size_t u : p)
      if (adj[v][u]) p2.push_back(u);
    for (std::size_t u : x)
      if (adj[v][u]) x2.push_back(u);
    bron_kerbosch(std::move(r2), std::move(p2), std::move(x2), adj, out);
    p.erase(std::find(p.begin(), p.end(), v));
    x.push_back(v);
  }
}

}  // namespace detail

/// Maximum component size for which overlap cliques are enumerated exactly.
inline constexpr std::size_t kExactCliqueLimit = 16;

/// Maximal cliques of pairwise-overlapping elements, as index lists.
inline std::vector<std::vector<std::size_t>> overlap_cliques(const Design& d) {
  const std::size_t n = d.elements.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (overlaps(d.elements[i].geometry, d.elements[j].geometry)) adj[i][j] = adj[j][i] = true;
    }
  }
  std::vector<bool> seen(n, false);
  std::vector<std::vector<std::size_t>> cliques;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp{s}, stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (adj[u][v] && !seen[v]) {
          seen[v] = true;
          comp.push_back(v);
          stack.push_back(v);
        }
      }
    }
    if (comp.size() < 2) continue;
    std::sort(comp.begin(), comp.end(), [&](std::size_t a, std::size_t b) { return d.elements[a].id < d.elements[b].id; });
    if (comp.size() <= kExactCliqueLimit) {
      detail::bron_kerbosch({}, comp, {}, adj, cliques);
      continue;
    }
    // Greedy cover for large components.
    std::vector<std::vector<std::size_t>> greedy;
    for (std::size_t v : comp) {
      std::vector<std::size_t> clique{v};
      for (std::size_t u : comp) {
        if (u == v) continue;
        if (std::all_of(clique.begin(), clique.end(), [&](std::size_t w) { return adj[u][w]; })) clique.push_back(u);
      }
      std::sort(clique.begin(), clique.end());
      greedy.push_back(std::move(clique));
    }
    std::sort(greedy.begin(), greedy.end());
    greedy.erase(std::unique(greedy.begin(), greedy.end()), greedy.end());
    for (const auto& c : greedy) {
      bool dominated = std::any_of(greedy.begin(), greedy.end(), [&](const auto& o) {
        return o.size() > c.size() && std::includes(o.begin(), o.end(), c.begin(), c.end());
      });
      if (!dominated) cliques.push_back(c);
    }
  }
  return cliques;
}

namespace detail {

inline std::tuple<std::size_t, int> variant_order(const RuleVariant& v) {
  int sub = std::visit(overloaded{
                           [](const rule::VAlign& r) { return static_cast<int>(r.mode); },
                           [](const rule::HAlign& r) { return static_cast<int>(r.mode); },
                           [](const rule::MarginalOffset& r) { return static_cast<int>(r.axis); },
                           [](const auto&) { return 0; },
                       },
                       v);
  return {v.index(), sub};
}

inline double numeric_param(const RuleVariant& v) {
  return std::visit(overloaded{
                        [](const rule::MarginalOffset& r) { return r.gap; },
                        [](const rule::SameWidth& r) { return r.value; },
                        [](const rule::SameHeight& r) { return r.value; },
                        [](const auto&) { return 0.0; },
                    },
                    v);
}

inline bool rule_less(const LayoutRule& a, const LayoutRule& b) {
  auto va = variant_order(a.variant);
  auto vb = variant_order(b.variant);
  if (va != vb) return va < vb;
  auto sa = sorted_copy(a.members);
  auto sb = sorted_copy(b.members);
  if (sa != sb) return sa < sb;  // compares smallest member id first
  return numeric_param(a.variant) < numeric_param(b.variant);
}

inline std::vector<std::string> ids_of(const Design& d, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(d.elements[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline RuleSet infer_rules(const Design& design, const InferenceConfig& config = {}) {
  RuleSet out;
  out.config = config;
  const auto& els = design.elements;
  const std::size_t n = els.size();
  const std::size_t min_group = static_cast<std::size_t>(std::max(2, config.min_group_size));
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& e : els) ids.push_back(e.id);

  auto cluster = [&](auto value_of, double tol, auto make_variant) {
    std::vector<detail::Keyed> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) items.push_back({value_of(els[i].geometry), i});
    for (const auto& group : detail::maximal_windows(items, tol, min_group, ids)) {
      std::vector<double> values;
      for (std::size_t i : group) values.push_back(value_of(els[i].geometry));
      out.rules.push_back(make_rule(make_variant(modal_anchor(values)), detail::ids_of(design, group)));
    }
  };

  // Containment forest and reading order over its top level.
  const auto parent = containment_parents(design);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (parent[c]) children[*parent[c]].push_back(c);
  }
  for (auto& ch : children) std::sort(ch.begin(), ch.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::vector<std::size_t> top_level;
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i]) continue;
    top_level.push_back(i);
    if (children[i].empty()) continue;
    rule::Containment tree;
    std::vector<std::string> members;
    std::function<void(std::size_t, int)> walk = [&](std::size_t node, int up) {
      const int self = static_cast<int>(members.size());
      members.push_back(ids[node]);
      tree.parent.push_back(up);
      for (std::size_t c : children[node]) walk(c, self);
    };
    walk(i, -1);
    if (members.size() >= min_group) out.rules.push_back(make_rule(std::move(tree), std::move(members)));
  }
  if (top_level.size() >= min_group) {
    std::sort(top_level.begin(), top_level.end(), [&](std::size_t a, std::size_t b) {
      const auto& ga = els[a].geometry;
      const auto& gb = els[b].geometry;
      return std::tie(ga.y, ga.x, ids[a]) < std::tie(gb.y, gb.x, ids[b]);
    });
    std::vector<std::string> members;
    for (std::size_t i : top_level) members.push_back(ids[i]);
    out.rules.push_back(make_rule(rule::RelativeOrdering{}, std::move(members)));
  }

  for (VAlignMode m : {VAlignMode::top, VAlignMode::middle, VAlignMode::bottom}) {
    cluster([m](const ElementGeometry& g) { return detail::v_coord(g, m); }, config.align_tolerance,
            [m](double) { return RuleVariant{rule::VAlign{m}}; });
  }
  for (HAlignMode m : {HAlignMode::left, HAlignMode::center, HAlignMode::right}) {
    cluster([m](const ElementGeometry& g) { return detail::h_coord(g, m); }, config.align_tolerance,
            [m](double) { return RuleVariant{rule::HAlign{m}}; });
  }

  for (const auto& clique : overlap_cliques(design)) {
    if (clique.size() >= min_group) out.rules.push_back(make_rule(rule::BoundsOverlap{}, detail::ids_of(design, clique)));
  }

  // Offset chains: maximal contiguous runs of >= 2 near-equal gaps along
  // each path of the adjacency graph.
  const std::size_t min_gaps = std::max<std::size_t>(2, min_group - 1);
  for (Axis axis : {Axis::horizontal, Axis::vertical}) {
    const auto edges = adjacency_edges(design, axis);
    std::vector<std::optional<std::size_t>> out_edge(n);
    std::vector<bool> has_in(n, false);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      out_edge[edges[k].from] = k;
      has_in[edges[k].to] = true;
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (has_in[s] || !out_edge[s]) continue;
      std::vector<std::size_t> nodes{s};
      std::vector<double> gaps;
      for (auto e = out_edge[s]; e; e = out_edge[edges[*e].to]) {
        gaps.push_back(edges[*e].gap);
        nodes.push_back(edges[*e].to);
      }
      std::size_t prev_end = 0;
      bool have_prev = false;
      std::size_t j = 0;
      for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (j < i) j = i;
        double lo = std::min(gaps[i], gaps[j]), hi = std::max(gaps[i], gaps[j]);
        for (std::size_t k = i; k <= j; ++k) {
          lo = std::min(lo, gaps[k]);
          hi = std::max(hi, gaps[k]);
        }
        while (j + 1 < gaps.size() && std::max(hi, gaps[j + 1]) - std::min(lo, gaps[j + 1]) <= config.gap_tolerance) {
          ++j;
          lo = std::min(lo, gaps[j]);
          hi = std::max(hi, gaps[j]);
        }
        if ((!have_prev || j > prev_end) && j - i + 1 >= min_gaps) {
          std::vector<std::size_t> run(nodes.begin() + static_cast<std::ptrdiff_t>(i),
                                       nodes.begin() + static_cast<std::ptrdiff_t>(j) + 2);
          std::vector<double> run_gaps(gaps.begin() + static_cast<std::ptrdiff_t>(i),
                                       gaps.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          out.rules.push_back(
              make_rule(rule::MarginalOffset{axis, modal_anchor(run_gaps)}, detail::ids_of(design, run)));
        }
        prev_end = j;
        have_prev = true;
      }
    }
  }

  cluster([](const ElementGeometry& g) { return g.w; }, config.size_tolerance,
          [](double v) { return RuleVariant{rule::SameWidth{v}}; });
  cluster([](const ElementGeometry& g) { return g.h; }, config.size_tolerance,
          [](double v) { return RuleVariant{rule::SameHeight{v}}; });

  std::sort(out.rules.begin(), out.rules.end(), detail::rule_less);
  return out;
}

/// Tolerance under which a residual still counts as satisfied.
inline double rule_tolerance(const LayoutRule& r, const InferenceConfig& c) {
  return std::visit(overloaded{
                        [&](const rule::VAlign&) { return c.align_tolerance; },
                        [&](const rule::HAlign&) { return c.align_tolerance; },
                        [&](const rule::SameWidth&) { return c.size_tolerance; },
                        [&](const rule::SameHeight&) { return c.size_tolerance; },
                        [&](const rule::MarginalOffset&) { return c.gap_tolerance; },
                        [](const auto&) { return 0.0; },
                    },
                    r.variant);
}

/// Member geometries in rule order.
inline std::vector<ElementGeometry> member_geometry(const Design& d, const LayoutRule& r) {
  std::vector<ElementGeometry> out;
  out.reserve(r.members.size());
  for (const auto& id : r.members) out.push_back(d.at(id).geometry);
  return out;
}

/// Members of an offset rule sorted along its axis (start edge, then id).
inline std::vector<std::string> chain_order(const Design& d, const std::vector<std::string>& members, Axis axis) {
  std::vector<std::string> out = members;
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    const auto& ga = d.at(a).geometry;
    const auto& gb = d.at(b).geometry;
    const double sa = axis == Axis::horizontal ? ga.x : ga.y;
    const double sb = axis == Axis::horizontal ? gb.x : gb.y;
    return std::tie(sa, a) < std::tie(sb, b);
  });
  return out;
}

/// Gaps between consecutive members of a chain (may be negative).
inline std::vector<double> chain_gaps(const Design& d, const std::vector<std::string>& ordered, Axis axis) {
  std::vector<double> gaps;
  for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
    const auto& a = d.at(ordered[k]).geometry;
    const auto& b = d.at(ordered[k + 1]).geometry;
    gaps.push_back(axis == Axis::horizontal ? b.x - a.right() : b.y - a.bottom());
  }
  return gaps;
}

/// L1 translation that moves `inner` fully inside `outer`; oversize
/// dimensions contribute the distance to centre plus half the overhang.
inline double containment_shortfall(const ElementGeometry& outer, const ElementGeometry& inner) {
  auto axis_shift = [](double o0, double ol, double i0, double il) {
    if (il > ol) return std::abs((i0 + il / 2) - (o0 + ol / 2)) + (il - ol) / 2;
    if (i0 < o0) return o0 - i0;
    if (i0 + il > o0 + ol) return (i0 + il) - (o0 + ol);
    return 0.0;
  };
  return axis_shift(outer.x, outer.w, inner.x, inner.w) + axis_shift(outer.y, outer.h, inner.y, inner.h);
}

/// Adherence distance of `rule` on `design`, in canvas units. 0 means the
/// rule is satisfied exactly.
inline double rule_residual(const Design& design, const LayoutRule& r) {
  const auto geo = member_geometry(design, r);
  auto spread_from_anchor = [](const std::vector<double>& values) {
    const double anchor = modal_anchor(values);
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, std::abs(v - anchor));
    return worst;
  };
  auto project = [&](auto f) {
    std::vector<double> values;
    values.reserve(geo.size());
    for (const auto& g : geo) values.push_back(f(g));
    return values;
  };

  return std::visit(
      overloaded{
          [&](const rule::VAlign& v) {
            return spread_from_anchor(project([&](const ElementGeometry& g) { return detail::v_coord(g, v.mode); }));
          },
          [&](const rule::HAlign& v) {
            return spread_from_anchor(project([&](const ElementGeometry& g) { return detail::h_coord(g, v.mode); }));
          },
          [&](const rule::SameWidth&) { return spread_from_anchor(project([](const ElementGeometry& g) { return g.w; })); },
          [&](const rule::SameHeight&) { return spread_from_anchor(project([](const ElementGeometry& g) { return g.h; })); },
          [&](const rule::MarginalOffset& v) {
            const auto gaps = chain_gaps(design, chain_order(design, r.members, v.axis), v.axis);
            return gaps.empty() ? 0.0 : spread_from_anchor(gaps);
          },
          [&](const rule::BoundsOverlap&) {
            double worst = 0.0;
            for (std::size_t i = 0; i < geo.size(); ++i) {
              for (std::size_t j = i + 1; j < geo.size(); ++j) {
                const double sx = std::max(0.0, -interval_overlap(geo[i].x, geo[i].w, geo[j].x, geo[j].w));
                const double sy = std::max(0.0, -interval_overlap(geo[i].y, geo[i].h, geo[j].y, geo[j].h));
                worst = std::max(worst, sx + sy);
              }
            }
            return worst;
          },
          [&](const rule::Containment& c) {
            double worst = 0.0;
            for (std::size_t i = 0; i < geo.size() && i < c.parent.size(); ++i) {
              if (c.parent[i] < 0) continue;
              const auto& outer = geo[static_cast<std::size_t>(c.parent[i])];
              if (contains(outer, geo[i])) continue;
              double shortfall = containment_shortfall(outer, geo[i]);
              // Equal or larger boxes cannot be fixed by translation alone.
              if (geo[i].area() >= outer.area()) shortfall += kMinElementSize;
              worst = std::max(worst, shortfall);
            }
            return worst;
          },
          [&](const rule::RelativeOrdering&) {
            double worst = 0.0;
            for (std::size_t k = 0; k + 1 < geo.size(); ++k) {
              const auto& a = geo[k];
              const auto& b = geo[k + 1];
              double v = 0.0;
              if (a.y > b.y) {
                v = (a.y - b.y) + std::max(0.0, a.x - b.x);
              } else if (a.y == b.y && a.x > b.x) {
                v = a.x - b.x;
              }
              worst = std::max(worst, v);
            }
            return worst;
          },
      },
      r.variant);
}

/// Rules whose members intersect `ids`; an empty selection keeps everything.
inline RuleSet rules_for_selection(const RuleSet& rules, const std::set<std::string, std::less<>>& ids) {
  if (ids.empty()) return rules;
  RuleSet out;
  out.config = rules.config;
  for (const auto& r : rules.rules) {
    if (std::any_of(r.members.begin(), r.members.end(), [&](const std::string& m) { return ids.count(m) > 0; })) {
      out.rules.push_back(r);
    }
  }
  return out;
}

}  // namespace vlt
