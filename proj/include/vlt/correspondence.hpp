#pragma once

// Element correspondence between two designs: feature vectors, an exact
// optimal injective assignment, and manual overrides.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vlt/assignment.hpp"
#include "vlt/geometry.hpp"
#include "vlt/rules.hpp"

namespace vlt {

inline constexpr std::size_t kStyleBuckets = 8;
inline constexpr std::size_t kFeatureSize = std::size(kAllKinds) + 4 + 1 + kStyleBuckets + 1 + 1;
using FeatureVector = std::array<double, kFeatureSize>;

/// Largest feature distance between two elements of the same kind: four
/// geometry slots, z, text length and neighbour density each contribute at
/// most 1, the style one-hot at most 2.
inline const double kMaxFeatureDistance = 3.0;

inline double default_match_threshold() { return 0.3; }

struct MatchPair {
  std::string a;
  std::string b;
  double score = 0.0;
  bool overridden = false;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct Correspondence {
  std::vector<MatchPair> pairs;  // sorted by a-id
  std::set<std::string, std::less<>> unmatched_a;
  std::set<std::string, std::less<>> unmatched_b;
  std::set<std::string, std::less<>> overrides;

  const MatchPair* pair_for_a(std::string_view a) const {
    for (const auto& p : pairs)
      if (p.a == a) return &p;
    return nullptr;
  }
  const MatchPair* pair_for_b(std::string_view b) const {
    for (const auto& p : pairs)
      if (p.b == b) return &p;
    return nullptr;
  }
  std::optional<std::string> partner_of_a(std::string_view a) const {
    const MatchPair* p = pair_for_a(a);
    return p ? std::optional<std::string>(p->b) : std::nullopt;
  }
  std::optional<std::string> partner_of_b(std::string_view b) const {
    const MatchPair* p = pair_for_b(b);
    return p ? std::optional<std::string>(p->a) : std::nullopt;
  }

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

namespace detail {

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

inline double text_length_bucket(const Element& e) {
  if (!e.text) return 0.0;
  const std::size_t len = utf8_length(*e.text);
  if (len == 0) return 0.0;
  if (len <= 4) return 0.25;
  if (len <= 16) return 0.5;
  if (len <= 64) return 0.75;
  return 1.0;
}

inline double unit_clamp(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace detail

inline FeatureVector element_features(const Element& e, const Design& d) {
  FeatureVector f{};
  std::size_t k = 0;
  for (ElementKind kind : kAllKinds) f[k++] = e.kind == kind ? 1.0 : 0.0;
  const auto& g = e.geometry;
  f[k++] = detail::unit_clamp(g.x / d.canvas_width);
  f[k++] = detail::unit_clamp(g.y / d.canvas_height);
  f[k++] = detail::unit_clamp(g.w / d.canvas_width);
  f[k++] = detail::unit_clamp(g.h / d.canvas_height);
  const std::size_t n = d.elements.size();
  f[k++] = n > 1 ? detail::unit_clamp(static_cast<double>(g.z) / static_cast<double>(n - 1)) : 0.0;
  const std::size_t bucket = detail::fnv1a(e.style_digest) % kStyleBuckets;
  for (std::size_t b = 0; b < kStyleBuckets; ++b) f[k++] = b == bucket ? 1.0 : 0.0;
  f[k++] = detail::text_length_bucket(e);

  // Neighbours whose centre lies within twice the bbox radius (one diagonal).
  const double reach = std::hypot(g.w, g.h);
  std::size_t neighbours = 0;
  for (const auto& o : d.elements) {
    if (o.id == e.id) continue;
    if (std::hypot(o.geometry.center_x() - g.center_x(), o.geometry.center_y() - g.center_y()) <= reach) ++neighbours;
  }
  f[k++] = n > 1 ? static_cast<double>(neighbours) / static_cast<double>(n - 1) : 0.0;
  return f;
}

/// 1 - normalized feature distance; 0 when kinds differ.
inline double element_similarity(const Element& ea, const FeatureVector& fa, const Element& eb, const FeatureVector& fb) {
  if (ea.kind != eb.kind) return 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < kFeatureSize; ++i) sq += (fa[i] - fb[i]) * (fa[i] - fb[i]);
  return std::max(0.0, 1.0 - std::sqrt(sq) / kMaxFeatureDistance);
}

/// Similarity matrix, rows = a.elements, columns = b.elements (document order).
inline std::vector<std::vector<double>> similarity_matrix(const Design& a, const Design& b) {
  std::vector<FeatureVector> fa, fb;
  for (const auto& e : a.elements) fa.push_back(element_features(e, a));
  for (const auto& e : b.elements) fb.push_back(element_features(e, b));
  std::vector<std::vector<double>> s(a.elements.size(), std::vector<double>(b.elements.size(), 0.0));
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    for (std::size_t j = 0; j < b.elements.size(); ++j) {
      s[i][j] = element_similarity(a.elements[i], fa[i], b.elements[j], fb[j]);
    }
  }
  return s;
}

struct MatchOptions {
  double threshold = default_match_threshold();
};

namespace detail {

/// Scores are quantized to 1e-6 so the assignment runs on exact integers.
inline constexpr std::int64_t kScoreScale = 1'000'000;

inline void sort_pairs(Correspondence& m) {
  std::sort(m.pairs.begin(), m.pairs.end(), [](const MatchPair& x, const MatchPair& y) { return x.a < y.a; });
}

}  // namespace detail

/// Optimal injective mapping maximizing total similarity; pairs scoring
/// below the threshold are dropped. Overrides recorded in `prior` are kept
/// verbatim and their elements are excluded from the optimization.
inline Correspondence match_designs(const Design& a, const Design& b, const MatchOptions& options = {},
                                   const Correspondence* prior = nullptr) {
  Correspondence out;
  std::set<std::string, std::less<>> fixed_a, fixed_b;
  if (prior != nullptr) {
    for (const auto& id : prior->overrides) {
      if (a.find(id) == nullptr) continue;
      const MatchPair* p = prior->pair_for_a(id);
      if (p != nullptr && b.find(p->b) == nullptr) continue;
      out.overrides.insert(id);
      fixed_a.insert(id);
      if (p != nullptr) {
        out.pairs.push_back(*p);
        fixed_b.insert(p->b);
      } else {
        out.unmatched_a.insert(id);
      }
    }
  }

  // Rows and columns ordered by id for lexicographic tie-breaking.
  std::vector<const Element*> rows, cols;
  for (const auto& e : a.elements)
    if (!fixed_a.count(e.id)) rows.push_back(&e);
  for (const auto& e : b.elements)
    if (!fixed_b.count(e.id)) cols.push_back(&e);
  auto by_id = [](const Element* x, const Element* y) { return x->id < y->id; };
  std::sort(rows.begin(), rows.end(), by_id);
  std::sort(cols.begin(), cols.end(), by_id);

  std::vector<FeatureVector> fr, fc;
  for (const Element* e : rows) fr.push_back(element_features(*e, a));
  for (const Element* e : cols) fc.push_back(element_features(*e, b));

  const std::size_t n = std::max(rows.size(), cols.size());
  std::vector<std::vector<double>> score(rows.size(), std::vector<double>(cols.size(), 0.0));
  std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, detail::kScoreScale));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      score[i][j] = element_similarity(*rows[i], fr[i], *cols[j], fc[j]);
      cost[i][j] = detail::kScoreScale - std::llround(score[i][j] * static_cast<double>(detail::kScoreScale));
    }
  }

  const auto solution = solve_assignment(cost);
  std::vector<bool> col_used(cols.size(), false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t j = solution.column_of_row[i];
    if (j < cols.size() && score[i][j] >= options.threshold && score[i][j] > 0.0) {
      out.pairs.push_back({rows[i]->id, cols[j]->id, score[i][j], false});
      col_used[j] = true;
    } else {
      out.unmatched_a.insert(rows[i]->id);
    }
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (!col_used[j]) out.unmatched_b.insert(cols[j]->id);
  }
  detail::sort_pairs(out);
  return out;
}

/// Forces (a_id, b_id) as an overridden pair with score 1, evicting prior
/// partners of either side. An empty b_id forces a_id unmatched.
inline Correspondence override_match(const Correspondence& m, const Design& a, const Design& b, const std::string& a_id,
                                     const std::optional<std::string>& b_id) {
  if (a.find(a_id) == nullptr) throw Error(ErrorCode::unknown_element, "design A has no element " + a_id);
  if (b_id && b.find(*b_id) == nullptr) throw Error(ErrorCode::unknown_element, "design B has no element " + *b_id);
  Correspondence out = m;
  auto drop = [&](auto pred) {
    auto it = std::find_if(out.pairs.begin(), out.pairs.end(), pred);
    if (it == out.pairs.end()) return;
    out.unmatched_a.insert(it->a);
    out.unmatched_b.insert(it->b);
    out.overrides.erase(it->a);
    out.pairs.erase(it);
  };
  drop([&](const MatchPair& p) { return p.a == a_id; });
  if (b_id) drop([&](const MatchPair& p) { return p.b == *b_id; });

  out.overrides.insert(a_id);
  if (b_id) {
    out.unmatched_a.erase(a_id);
    out.unmatched_b.erase(*b_id);
    out.pairs.push_back({a_id, *b_id, 1.0, true});
    detail::sort_pairs(out);
  } else {
    out.unmatched_a.insert(a_id);
  }
  return out;
}

/// Injectivity and coverage check used by tests and the session layer.
inline bool correspondence_is_consistent(const Correspondence& m, const Design& a, const Design& b) {
  std::set<std::string> seen_a, seen_b;
  for (const auto& p : m.pairs) {
    if (!seen_a.insert(p.a).second || !seen_b.insert(p.b).second) return false;
    if (a.find(p.a) == nullptr || b.find(p.b) == nullptr) return false;
    if (m.unmatched_a.count(p.a) || m.unmatched_b.count(p.b)) return false;
  }
  for (const auto& id : m.unmatched_a)
    if (!seen_a.insert(id).second) return false;
  for (const auto& id : m.unmatched_b)
    if (!seen_b.insert(id).second) return false;
  return seen_a.size() == a.elements.size() && seen_b.size() == b.elements.size();
}

}  // namespace vlt
