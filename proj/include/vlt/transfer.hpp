#pragma once

// Designer controls, from global layout copy down to direct manipulation,
// each producing a Transformation against the current target design.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vlt/correspondence.hpp"
#include "vlt/geometry.hpp"
#include "vlt/rules.hpp"

namespace vlt {

/// Number of matched neighbours whose translation an unmatched element follows.
inline constexpr std::size_t kAnchorNeighbours = 3;

/// Short-lived view over the inputs of a transfer step.
struct TransferContext {
  const Design& target;
  const Design& source;
  const Correspondence& mapping;
  const RuleSet& target_rules;
  const RuleSet& source_rules;
  double sx = 1.0;
  double sy = 1.0;
};

inline TransferContext make_context(const Design& target, const Design& source, const Correspondence& mapping,
                                    const RuleSet& target_rules, const RuleSet& source_rules) {
  if (!(target.canvas_width > 0 && target.canvas_height > 0 && source.canvas_width > 0 && source.canvas_height > 0)) {
    throw Error(ErrorCode::invalid_argument, "canvas dimensions must be positive");
  }
  return TransferContext{target,
                         source,
                         mapping,
                         target_rules,
                         source_rules,
                         target.canvas_width / source.canvas_width,
                         target.canvas_height / source.canvas_height};
}

namespace detail {

inline Delta mask_locked(Delta d, PropertySet locked) {
  for (Property p : kAllProperties) {
    if (locked.contains(p)) d.set_component(p, 0.0);
  }
  return d;
}

/// Source geometry mapped into the target canvas.
inline ElementGeometry scaled_partner(const TransferContext& ctx, const Element& partner) {
  const auto& g = partner.geometry;
  return ElementGeometry{g.x * ctx.sx, g.y * ctx.sy, g.z, std::max(kMinElementSize, g.w * ctx.sx),
                         std::max(kMinElementSize, g.h * ctx.sy)};
}

inline const Element* partner_in_source(const TransferContext& ctx, const std::string& target_id) {
  auto partner = ctx.mapping.partner_of_a(target_id);
  return partner ? ctx.source.find(*partner) : nullptr;
}

inline Delta copy_delta(const TransferContext& ctx, const Element& e, const Element& partner) {
  return mask_locked(delta_between(e.geometry, scaled_partner(ctx, partner)), e.locked);
}

}  // namespace detail

inline Transformation global_layout_copy(const TransferContext& ctx) {
  Transformation t;
  std::vector<const Element*> matched;
  std::map<std::string, Delta, std::less<>> moved;
  for (const auto& e : ctx.target.elements) {
    const Element* partner = detail::partner_in_source(ctx, e.id);
    if (partner == nullptr) continue;
    const Delta d = detail::copy_delta(ctx, e, *partner);
    t.set(e.id, d);
    moved[e.id] = d;
    matched.push_back(&e);
  }
  if (matched.empty()) return t;

  // Unmatched elements follow the mean translation of their nearest matched
  // neighbours.
  for (const auto& e : ctx.target.elements) {
    if (moved.count(e.id)) continue;
    std::vector<std::pair<double, const Element*>> near;
    for (const Element* m : matched) {
      const double dist = std::hypot(m->geometry.center_x() - e.geometry.center_x(),
                                     m->geometry.center_y() - e.geometry.center_y());
      near.emplace_back(dist, m);
    }
    std::sort(near.begin(), near.end(), [](const auto& l, const auto& r) {
      return l.first != r.first ? l.first < r.first : l.second->id < r.second->id;
    });
    const std::size_t k = std::min(kAnchorNeighbours, near.size());
    Delta d;
    for (std::size_t i = 0; i < k; ++i) {
      d.dx += moved[near[i].second->id].dx;
      d.dy += moved[near[i].second->id].dy;
    }
    d.dx /= static_cast<double>(k);
    d.dy /= static_cast<double>(k);
    t.set(e.id, detail::mask_locked(d, e.locked));
  }
  return t;
}

inline Transformation element_layout_copy(const TransferContext& ctx, std::span<const std::string> ids) {
  Transformation t;
  for (const auto& id : ids) {
    const Element& e = ctx.target.at(id);
    const Element* partner = detail::partner_in_source(ctx, id);
    if (partner != nullptr) t.set(id, detail::copy_delta(ctx, e, *partner));
  }
  return t;
}

inline Transformation property_copy(const TransferContext& ctx, std::span<const std::string> ids, PropertySet properties) {
  if (properties.empty()) throw Error(ErrorCode::invalid_argument, "property_copy needs at least one property");
  Transformation t;
  for (const auto& id : ids) {
    const Element& e = ctx.target.at(id);
    const Element* partner = detail::partner_in_source(ctx, id);
    if (partner == nullptr) throw Error(ErrorCode::unmatched_element, id);
    Delta full = detail::copy_delta(ctx, e, *partner);
    Delta d;
    for (Property p : properties.to_vector()) d.set_component(p, full.component(p));
    t.set(id, d);
  }
  return t;
}

namespace detail {

[[noreturn]] inline void infeasible(const LayoutRule& r, const std::string& why) {
  throw Error(ErrorCode::infeasible_rule, r.id + " (" + std::string(variant_name(r.variant)) + "): " + why);
}

/// Moves every member so that `coord(g)` equals the modal anchor, using
/// `shift` to turn a coordinate change into a delta.
template <class Coord, class Shift>
Transformation snap_to_anchor(const Design& d, const LayoutRule& r, Coord coord, Shift shift, Property needed) {
  std::vector<double> values;
  for (const auto& id : r.members) values.push_back(coord(d.at(id).geometry));
  const double anchor = modal_anchor(values);
  Transformation t;
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    if (values[i] == anchor) continue;
    const Element& e = d.at(r.members[i]);
    if (e.locked.contains(needed)) infeasible(r, "member " + e.id + " is locked on " + std::string(to_string(needed)));
    t.set(e.id, shift(anchor - values[i]));
  }
  return t;
}

inline double lower_endpoint_median(std::vector<double> endpoints) {
  std::sort(endpoints.begin(), endpoints.end());
  return endpoints[endpoints.size() / 2 - 1];
}

}  // namespace detail

/// Smallest-displacement transformation that brings `rule` to zero residual.
inline Transformation enforce_rule(const Design& design, const LayoutRule& r) {
  for (const auto& id : r.members) design.at(id);
  if (rule_residual(design, r) == 0.0) return {};

  return std::visit(
      overloaded{
          [&](const rule::HAlign& v) {
            return detail::snap_to_anchor(
                design, r, [&](const ElementGeometry& g) { return detail::h_coord(g, v.mode); },
                [](double s) { return Delta{s, 0, 0, 0, 0}; }, Property::x);
          },
          [&](const rule::VAlign& v) {
            return detail::snap_to_anchor(
                design, r, [&](const ElementGeometry& g) { return detail::v_coord(g, v.mode); },
                [](double s) { return Delta{0, s, 0, 0, 0}; }, Property::y);
          },
          [&](const rule::SameWidth&) {
            return detail::snap_to_anchor(
                design, r, [](const ElementGeometry& g) { return g.w; }, [](double s) { return Delta{0, 0, 0, s, 0}; },
                Property::w);
          },
          [&](const rule::SameHeight&) {
            return detail::snap_to_anchor(
                design, r, [](const ElementGeometry& g) { return g.h; }, [](double s) { return Delta{0, 0, 0, 0, s}; },
                Property::h);
          },
          [&](const rule::MarginalOffset& v) {
            const bool horizontal = v.axis == Axis::horizontal;
            const Property moved = horizontal ? Property::x : Property::y;
            const auto order = chain_order(design, r.members, v.axis);
            std::vector<double> start, size, offset;
            double run = 0.0;
            for (const auto& id : order) {
              const auto& g = design.at(id).geometry;
              start.push_back(horizontal ? g.x : g.y);
              size.push_back(horizontal ? g.w : g.h);
              offset.push_back(run);
              run += size.back() + v.gap;
            }
            // Packed chain keeps the members' mean centre unless a locked
            // member pins it.
            double centre = 0.0, packed_centre = 0.0;
            for (std::size_t k = 0; k < order.size(); ++k) {
              centre += start[k] + size[k] / 2;
              packed_centre += offset[k] + size[k] / 2;
            }
            // Snapped to 1/256 so grid-aligned inputs repack with exact gaps.
            double origin = std::round((centre - packed_centre) / static_cast<double>(order.size()) * 256.0) / 256.0;
            std::optional<double> pinned;
            for (std::size_t k = 0; k < order.size(); ++k) {
              if (!design.at(order[k]).locked.contains(moved)) continue;
              const double o = start[k] - offset[k];
              if (pinned && std::abs(*pinned - o) > 1e-9) detail::infeasible(r, "locked members disagree on spacing");
              if (!pinned) pinned = o;
            }
            if (pinned) origin = *pinned;
            Transformation t;
            for (std::size_t k = 0; k < order.size(); ++k) {
              const double shift = origin + offset[k] - start[k];
              if (design.at(order[k]).locked.contains(moved)) continue;
              t.set(order[k], horizontal ? Delta{shift, 0, 0, 0, 0} : Delta{0, shift, 0, 0, 0});
            }
            return t;
          },
          [&](const rule::Containment& c) {
            std::vector<ElementGeometry> geo = member_geometry(design, r);
            std::vector<Delta> shift(geo.size());
            auto in_subtree = [&](std::size_t node, std::size_t root) {
              for (int k = static_cast<int>(node); k >= 0; k = c.parent[static_cast<std::size_t>(k)]) {
                if (static_cast<std::size_t>(k) == root) return true;
              }
              return false;
            };
            for (std::size_t i = 0; i < geo.size(); ++i) {
              if (c.parent[i] < 0) continue;
              const ElementGeometry& outer = geo[static_cast<std::size_t>(c.parent[i])];
              if (contains(outer, geo[i])) continue;
              if (geo[i].w > outer.w || geo[i].h > outer.h || geo[i].area() >= outer.area()) {
                detail::infeasible(r, r.members[i] + " does not fit inside " + r.members[static_cast<std::size_t>(c.parent[i])]);
              }
              auto axis_shift = [](double o0, double ol, double i0, double il) {
                if (i0 < o0) return o0 - i0;
                if (i0 + il > o0 + ol) return (o0 + ol) - (i0 + il);
                return 0.0;
              };
              const double dx = axis_shift(outer.x, outer.w, geo[i].x, geo[i].w);
              const double dy = axis_shift(outer.y, outer.h, geo[i].y, geo[i].h);
              for (std::size_t k = i; k < geo.size(); ++k) {
                if (!in_subtree(k, i)) continue;
                const auto& locked = design.at(r.members[k]).locked;
                if ((dx != 0.0 && locked.contains(Property::x)) || (dy != 0.0 && locked.contains(Property::y))) {
                  detail::infeasible(r, r.members[k] + " is locked");
                }
                geo[k].x += dx;
                geo[k].y += dy;
                shift[k].dx += dx;
                shift[k].dy += dy;
              }
            }
            Transformation t;
            for (std::size_t i = 0; i < geo.size(); ++i) t.set(r.members[i], shift[i]);
            return t;
          },
          [&](const rule::BoundsOverlap&) {
            // Pairwise-intersecting boxes share a common point per axis; pick
            // the point minimizing total travel, restricted to locked members.
            Transformation t;
            for (Property axis : {Property::x, Property::y}) {
              std::vector<double> endpoints;
              double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
              for (const auto& id : r.members) {
                const Element& e = design.at(id);
                const double s = axis == Property::x ? e.geometry.x : e.geometry.y;
                const double len = axis == Property::x ? e.geometry.w : e.geometry.h;
                endpoints.push_back(s);
                endpoints.push_back(s + len);
                if (e.locked.contains(axis)) {
                  lo = std::max(lo, s);
                  hi = std::min(hi, s + len);
                }
              }
              if (lo > hi) detail::infeasible(r, "locked members do not overlap");
              const double p = std::clamp(detail::lower_endpoint_median(endpoints), lo, hi);
              for (const auto& id : r.members) {
                const Element& e = design.at(id);
                const double s = axis == Property::x ? e.geometry.x : e.geometry.y;
                const double len = axis == Property::x ? e.geometry.w : e.geometry.h;
                double move = 0.0;
                if (p < s) move = p - s;
                if (p > s + len) move = p - (s + len);
                if (move == 0.0) continue;
                Delta d;
                d.set_component(axis, move);
                t.add(id, d);
              }
            }
            return t;
          },
          [&](const rule::RelativeOrdering&) {
            std::vector<ElementGeometry> geo = member_geometry(design, r);
            Transformation t;
            for (std::size_t k = 1; k < geo.size(); ++k) {
              const auto& a = geo[k - 1];
              auto& b = geo[k];
              Delta d;
              if (a.y > b.y) d.dy = a.y - b.y;
              if (a.y == b.y + d.dy && a.x > b.x) d.dx = a.x - b.x;
              if (d.is_zero()) continue;
              const auto& locked = design.at(r.members[k]).locked;
              if ((d.dx != 0.0 && locked.contains(Property::x)) || (d.dy != 0.0 && locked.contains(Property::y))) {
                detail::infeasible(r, r.members[k] + " is locked");
              }
              b.x += d.dx;
              b.y += d.dy;
              t.set(r.members[k], d);
            }
            return t;
          },
      },
      r.variant);
}

/// H-Off / V-Off: repacks the selected chain with the gap observed between
/// the source partners, keeping the first element fixed.
inline Transformation conform_offset(const TransferContext& ctx, std::span<const std::string> ids, Axis axis) {
  if (ids.size() < 2) throw Error(ErrorCode::invalid_argument, "conform_offset needs at least two elements");
  const bool horizontal = axis == Axis::horizontal;
  const double scale = horizontal ? ctx.sx : ctx.sy;
  struct Item {
    const Element* target;
    const Element* partner;
  };
  std::vector<Item> items;
  for (const auto& id : ids) {
    const Element& e = ctx.target.at(id);
    const Element* partner = detail::partner_in_source(ctx, id);
    if (partner == nullptr) throw Error(ErrorCode::unmatched_element, id);
    items.push_back({&e, partner});
  }
  auto start = [&](const ElementGeometry& g) { return horizontal ? g.x : g.y; };
  auto size = [&](const ElementGeometry& g) { return horizontal ? g.w : g.h; };
  std::sort(items.begin(), items.end(), [&](const Item& l, const Item& r) {
    const auto& a = l.target->geometry;
    const auto& b = r.target->geometry;
    const double sa = start(a), sb = start(b);
    if (sa != sb) return sa < sb;
    return std::tie(a.y, a.x, l.target->id) < std::tie(b.y, b.x, r.target->id);
  });
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const auto& a = items[i].target->geometry;
      const auto& b = items[j].target->geometry;
      if (interval_overlap(start(a), size(a), start(b), size(b)) > 0.0) {
        throw Error(ErrorCode::not_a_chain, items[i].target->id + " and " + items[j].target->id + " overlap");
      }
    }
  }

  double gap_sum = 0.0;
  for (std::size_t k = 0; k + 1 < items.size(); ++k) {
    const auto& p = items[k].partner->geometry;
    const auto& q = items[k + 1].partner->geometry;
    gap_sum += (start(q) - (start(p) + size(p))) * scale;
  }
  const double gap = std::max(0.0, gap_sum / static_cast<double>(items.size() - 1));

  Transformation t;
  double cursor = start(items.front().target->geometry) + size(items.front().target->geometry) + gap;
  for (std::size_t k = 1; k < items.size(); ++k) {
    const Element& e = *items[k].target;
    const double shift = cursor - start(e.geometry);
    if (shift != 0.0 && e.locked.contains(horizontal ? Property::x : Property::y)) {
      throw Error(ErrorCode::locked_property_violation, e.id);
    }
    t.set(e.id, horizontal ? Delta{shift, 0, 0, 0, 0} : Delta{0, shift, 0, 0, 0});
    cursor += size(e.geometry) + gap;
  }
  return t;
}

/// Direct manipulation: a single-entry transformation moving `id` to `g`.
inline Transformation set_geometry(const Design& design, const std::string& id, const ElementGeometry& g) {
  const Element& e = design.at(id);
  if (!std::isfinite(g.x) || !std::isfinite(g.y) || !std::isfinite(g.w) || !std::isfinite(g.h) || g.z < 0) {
    throw Error(ErrorCode::invalid_argument, "geometry for " + id + " is not finite");
  }
  if (g.w < kMinElementSize || g.h < kMinElementSize) throw Error(ErrorCode::min_size_violation, id);
  const Delta d = delta_between(e.geometry, g);
  for (Property p : kAllProperties) {
    if (d.component(p) != 0.0 && e.locked.contains(p)) {
      throw Error(ErrorCode::locked_property_violation, id + "." + std::string(to_string(p)));
    }
  }
  Transformation t;
  t.set(id, d);
  return t;
}

/// Re-targets a source rule onto target ids through the mapping. Unmatched
/// members are dropped (containment children re-attach to their nearest
/// matched ancestor); numeric parameters are rescaled to the target canvas.
inline std::optional<LayoutRule> map_rule_to_target(const LayoutRule& r, const Correspondence& m, double sx, double sy,
                                                    std::size_t min_group = 2) {
  std::vector<std::string> members;
  std::vector<int> index(r.members.size(), -1);
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    if (auto a = m.partner_of_b(r.members[i])) {
      index[i] = static_cast<int>(members.size());
      members.push_back(*a);
    }
  }
  if (members.size() < min_group) return std::nullopt;

  RuleVariant variant = std::visit(
      overloaded{
          [&](const rule::Containment& c) -> RuleVariant {
            rule::Containment out;
            for (std::size_t i = 0; i < r.members.size(); ++i) {
              if (index[i] < 0) continue;
              int up = c.parent[i];
              while (up >= 0 && index[static_cast<std::size_t>(up)] < 0) up = c.parent[static_cast<std::size_t>(up)];
              out.parent.push_back(up < 0 ? -1 : index[static_cast<std::size_t>(up)]);
            }
            return out;
          },
          [&](const rule::MarginalOffset& o) -> RuleVariant {
            return rule::MarginalOffset{o.axis, o.gap * (o.axis == Axis::horizontal ? sx : sy)};
          },
          [&](const rule::SameWidth& s) -> RuleVariant { return rule::SameWidth{s.value * sx}; },
          [&](const rule::SameHeight& s) -> RuleVariant { return rule::SameHeight{s.value * sy}; },
          [](const auto& other) -> RuleVariant { return other; },
      },
      r.variant);

  // A pruned containment tree must still have a single root.
  if (const auto* c = std::get_if<rule::Containment>(&variant)) {
    if (std::count(c->parent.begin(), c->parent.end(), -1) != 1) return std::nullopt;
  }
  if (is_symmetric(variant)) std::sort(members.begin(), members.end());
  LayoutRule out = make_rule(std::move(variant), std::move(members));
  out.weight = r.weight;
  return out;
}

/// Rules used to score an output design: target rules plus source rules
/// mapped onto target ids. On an id collision the target rule wins.
inline RuleSet scoring_rules(const RuleSet& target_rules, const RuleSet& source_rules, const Correspondence& m, double sx,
                             double sy) {
  RuleSet out = target_rules;
  std::set<std::string> seen;
  for (const auto& r : out.rules) seen.insert(r.id);
  for (const auto& r : source_rules.rules) {
    auto mapped = map_rule_to_target(r, m, sx, sy, static_cast<std::size_t>(std::max(2, target_rules.config.min_group_size)));
    if (mapped && seen.insert(mapped->id).second) out.rules.push_back(std::move(*mapped));
  }
  return out;
}

}  // namespace vlt
