#pragma once

// Brute-force rule enumerator. Every family is evaluated as a predicate over
// all subsets (or pairs) of elements; nothing here calls the inference code
// or its geometry helpers.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vlt/geometry.hpp"
#include "vlt/rules.hpp"

namespace oracle {

struct Box {
  std::string id;
  double x, y, w, h;
  double r() const { return x + w; }
  double b() const { return y + h; }
};

inline std::vector<Box> boxes(const vlt::Design& d) {
  std::vector<Box> out;
  for (const auto& e : d.elements) out.push_back({e.id, e.geometry.x, e.geometry.y, e.geometry.w, e.geometry.h});
  return out;
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join(std::vector<std::string> ids, bool sort) {
  if (sort) std::sort(ids.begin(), ids.end());
  std::string s;
  for (const auto& i : ids) s += i + ",";
  return s;
}

/// Most frequent value; ties by least summed |difference|, then smallest.
inline double mode_of(const std::vector<double>& v) {
  double best = 0;
  int best_count = -1;
  double best_cost = 0;
  for (double c : v) {
    int count = 0;
    double cost = 0;
    for (double u : v) {
      count += u == c;
      cost += u > c ? u - c : c - u;
    }
    if (count > best_count || (count == best_count && (cost < best_cost || (cost == best_cost && c < best)))) {
      best = c;
      best_count = count;
      best_cost = cost;
    }
  }
  return best;
}

inline double overlap_len(double a0, double a1, double b0, double b1) { return std::min(a1, b1) - std::max(a0, b0); }

/// p encloses c: c's box is at least 98% covered by p and p is larger.
inline bool encloses(const Box& p, const Box& c) {
  const double ox = overlap_len(p.x, p.r(), c.x, c.r());
  const double oy = overlap_len(p.y, p.b(), c.y, c.b());
  if (ox <= 0 || oy <= 0) return false;
  return p.w * p.h > c.w * c.h && ox * oy >= vlt::kContainmentCoverage * (c.w * c.h);
}

inline bool partial_overlap(const Box& a, const Box& b) {
  if (overlap_len(a.x, a.r(), b.x, b.r()) <= 0 || overlap_len(a.y, a.b(), b.y, b.b()) <= 0) return false;
  return !encloses(a, b) && !encloses(b, a);
}

/// Canonical text of a library rule, comparable with the oracle's output.
inline std::string canonical(const vlt::LayoutRule& r) {
  const std::string key = vlt::variant_key(r.variant);
  if (const auto* c = std::get_if<vlt::rule::Containment>(&r.variant)) {
    std::vector<std::string> edges;
    for (std::size_t i = 0; i < r.members.size(); ++i) {
      edges.push_back(r.members[i] + "<" + (c->parent[i] < 0 ? std::string("#") : r.members[static_cast<std::size_t>(c->parent[i])]));
    }
    // Also pin the preorder encoding: parents precede children.
    for (std::size_t i = 0; i < r.members.size(); ++i) {
      if (c->parent[i] >= static_cast<int>(i)) edges.push_back("!order");
    }
    return key + "|" + join(edges, true);
  }
  if (std::holds_alternative<vlt::rule::RelativeOrdering>(r.variant)) return key + "|" + join(r.members, false);
  double param = 0;
  if (const auto* o = std::get_if<vlt::rule::MarginalOffset>(&r.variant)) param = o->gap;
  if (const auto* s = std::get_if<vlt::rule::SameWidth>(&r.variant)) param = s->value;
  if (const auto* s = std::get_if<vlt::rule::SameHeight>(&r.variant)) param = s->value;
  return key + "|" + join(r.members, true) + "|" + num(param);
}

inline std::multiset<std::string> canonical(const vlt::RuleSet& s) {
  std::multiset<std::string> out;
  for (const auto& r : s.rules) out.insert(canonical(r));
  return out;
}

inline std::vector<std::string> ids_of(const std::vector<Box>& bx, unsigned mask) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < bx.size(); ++i)
    if (mask >> i & 1u) out.push_back(bx[i].id);
  return out;
}

inline std::multiset<std::string> enumerate(const vlt::Design& d, const vlt::InferenceConfig& cfg = {}) {
  const auto bx = boxes(d);
  const std::size_t n = bx.size();
  const std::size_t min_group = static_cast<std::size_t>(std::max(2, cfg.min_group_size));
  const unsigned full = n == 0 ? 0u : (1u << n) - 1u;
  std::multiset<std::string> out;

  // Value-clustered families: every maximal subset whose spread is within
  // tolerance.
  auto spread_family = [&](const std::string& key, auto value, double tol, bool with_param) {
    auto fits = [&](unsigned mask) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(mask >> i & 1u)) continue;
        lo = std::min(lo, value(bx[i]));
        hi = std::max(hi, value(bx[i]));
      }
      return hi - lo <= tol;
    };
    for (unsigned mask = 1; mask <= full; ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) < min_group || !fits(mask)) continue;
      bool maximal = true;
      for (std::size_t k = 0; k < n && maximal; ++k) {
        if (!(mask >> k & 1u) && fits(mask | 1u << k)) maximal = false;
      }
      if (!maximal) continue;
      std::string s = key + "|" + join(ids_of(bx, mask), true);
      if (with_param) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i)
          if (mask >> i & 1u) vals.push_back(value(bx[i]));
        s += "|" + num(mode_of(vals));
      } else {
        s += "|" + num(0);
      }
      out.insert(s);
    }
  };
  spread_family("VAlign:top", [](const Box& b) { return b.y; }, cfg.align_tolerance, false);
  spread_family("VAlign:middle", [](const Box& b) { return b.y + b.h / 2; }, cfg.align_tolerance, false);
  spread_family("VAlign:bottom", [](const Box& b) { return b.b(); }, cfg.align_tolerance, false);
  spread_family("HAlign:left", [](const Box& b) { return b.x; }, cfg.align_tolerance, false);
  spread_family("HAlign:center", [](const Box& b) { return b.x + b.w / 2; }, cfg.align_tolerance, false);
  spread_family("HAlign:right", [](const Box& b) { return b.r(); }, cfg.align_tolerance, false);
  spread_family("SameWidth", [](const Box& b) { return b.w; }, cfg.size_tolerance, true);
  spread_family("SameHeight", [](const Box& b) { return b.h; }, cfg.size_tolerance, true);

  // Bounds overlap: maximal subsets whose members pairwise partially overlap.
  auto all_overlap = [&](unsigned mask) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if ((mask >> i & 1u) && (mask >> j & 1u) && !partial_overlap(bx[i], bx[j])) return false;
    return true;
  };
  for (unsigned mask = 1; mask <= full; ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) < std::max<std::size_t>(2, min_group) || !all_overlap(mask))
      continue;
    bool maximal = true;
    for (std::size_t k = 0; k < n && maximal; ++k)
      if (!(mask >> k & 1u) && all_overlap(mask | 1u << k)) maximal = false;
    if (maximal) out.insert("BoundsOverlap|" + join(ids_of(bx, mask), true) + "|" + num(0));
  }

  // Containment: each element's parent is its smallest encloser (ties by
  // id). Each root with descendants yields one tree.
  std::vector<int> parent(n, -1);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t p = 0; p < n; ++p) {
      if (p == c || !encloses(bx[p], bx[c])) continue;
      bool best = true;
      for (std::size_t q = 0; q < n; ++q) {
        if (q == c || q == p || !encloses(bx[q], bx[c])) continue;
        const double aq = bx[q].w * bx[q].h, ap = bx[p].w * bx[p].h;
        if (aq < ap || (aq == ap && bx[q].id < bx[p].id)) best = false;
      }
      if (best) parent[c] = static_cast<int>(p);
    }
  }
  auto root_of = [&](std::size_t i) {
    while (parent[i] >= 0) i = static_cast<std::size_t>(parent[i]);
    return i;
  };
  for (std::size_t r = 0; r < n; ++r) {
    if (parent[r] >= 0) continue;
    std::vector<std::string> edges{bx[r].id + "<#"};
    for (std::size_t i = 0; i < n; ++i) {
      if (i != r && root_of(i) == r) edges.push_back(bx[i].id + "<" + bx[static_cast<std::size_t>(parent[i])].id);
    }
    if (edges.size() >= std::max<std::size_t>(2, min_group)) out.insert("Containment|" + join(edges, true));
  }

  // Relative ordering of the top level, by (y, x, id).
  std::vector<std::size_t> top;
  for (std::size_t i = 0; i < n; ++i)
    if (parent[i] < 0) top.push_back(i);
  if (top.size() >= min_group) {
    std::vector<std::string> seq(top.size());
    for (std::size_t i : top) {
      std::size_t rank = 0;
      for (std::size_t j : top) {
        const auto& a = bx[j];
        const auto& b = bx[i];
        if (a.y < b.y || (a.y == b.y && (a.x < b.x || (a.x == b.x && a.id < b.id)))) ++rank;
      }
      seq[rank] = bx[i].id;
    }
    out.insert("RelativeOrdering|" + join(seq, false));
  }

  // Marginal offsets: maximal runs of >= 2 gaps (spread within tolerance)
  // along paths of mutually-nearest separated neighbours.
  const std::size_t min_gaps = std::max<std::size_t>(2, min_group - 1);
  for (int axis = 0; axis < 2; ++axis) {
    auto lo = [&](const Box& b) { return axis == 0 ? b.x : b.y; };
    auto hi = [&](const Box& b) { return axis == 0 ? b.r() : b.b(); };
    auto cross = [&](const Box& a, const Box& b) {
      return axis == 0 ? overlap_len(a.y, a.b(), b.y, b.b()) > 0 : overlap_len(a.x, a.r(), b.x, b.r()) > 0;
    };
    auto follows = [&](std::size_t a, std::size_t b) { return a != b && lo(bx[b]) >= hi(bx[a]) && cross(bx[a], bx[b]); };
    auto closer = [&](double g1, const std::string& i1, double g2, const std::string& i2) {
      return g1 < g2 || (g1 == g2 && i1 < i2);
    };
    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (!follows(a, b)) continue;
        const double g = lo(bx[b]) - hi(bx[a]);
        bool ok = true;
        for (std::size_t c = 0; c < n && ok; ++c) {
          if (c != b && follows(a, c) && closer(lo(bx[c]) - hi(bx[a]), bx[c].id, g, bx[b].id)) ok = false;
          if (c != a && follows(c, b) && closer(lo(bx[b]) - hi(bx[c]), bx[c].id, g, bx[a].id)) ok = false;
        }
        edge[a][b] = ok;
      }
    }
    // A subset is a run when its members, sorted by start, are consecutive
    // edges.
    auto as_path = [&](unsigned mask, std::vector<std::size_t>& order) {
      order.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) order.push_back(i);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lo(bx[a]) < lo(bx[b]); });
      for (std::size_t k = 0; k + 1 < order.size(); ++k)
        if (!edge[order[k]][order[k + 1]]) return false;
      return true;
    };
    auto gaps_of = [&](const std::vector<std::size_t>& order) {
      std::vector<double> g;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) g.push_back(lo(bx[order[k + 1]]) - hi(bx[order[k]]));
      return g;
    };
    auto even = [&](const std::vector<double>& g) {
      return *std::max_element(g.begin(), g.end()) - *std::min_element(g.begin(), g.end()) <= cfg.gap_tolerance;
    };
    std::vector<std::size_t> order, ext;
    for (unsigned mask = 1; mask <= full; ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) < min_gaps + 1) continue;
      if (!as_path(mask, order)) continue;
      const auto g = gaps_of(order);
      if (!even(g)) continue;
      bool maximal = true;
      for (std::size_t k = 0; k < n && maximal; ++k) {
        if (mask >> k & 1u) continue;
        if (!(edge[k][order.front()] || edge[order.back()][k])) continue;
        if (as_path(mask | 1u << k, ext) && even(gaps_of(ext))) maximal = false;
      }
      if (!maximal) continue;
      out.insert(std::string(axis == 0 ? "MarginalOffset:horizontal" : "MarginalOffset:vertical") + "|" +
                 join(ids_of(bx, mask), true) + "|" + num(mode_of(g)));
    }
  }
  return out;
}

}  // namespace oracle
