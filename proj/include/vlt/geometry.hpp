#pragma once

// Element/design data model, transformation deltas and the rectangle
// relations every other module builds on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlt/error.hpp"

namespace vlt {

/// Minimum width/height of any element, in canvas units.
inline constexpr double kMinElementSize = 1.0;

/// Fraction of the inner box's area that must fall inside the outer box
/// for the pair to count as containment.
inline constexpr double kContainmentCoverage = 0.98;

enum class Property : std::uint8_t { x, y, z, w, h };

inline constexpr Property kAllProperties[] = {Property::x, Property::y, Property::z, Property::w,
                                              Property::h};

constexpr std::string_view to_string(Property p) {
  switch (p) {
    case Property::x: return "x";
    case Property::y: return "y";
    case Property::z: return "z";
    case Property::w: return "w";
    case Property::h: return "h";
  }
  return "?";
}

inline std::optional<Property> property_from_string(std::string_view s) {
  for (Property p : kAllProperties) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

/// Small bit set over the five geometry properties.
class PropertySet {
 public:
  constexpr PropertySet() = default;
  constexpr PropertySet(std::initializer_list<Property> props) {
    for (Property p : props) insert(p);
  }

  static constexpr PropertySet all() { return PropertySet{Property::x, Property::y, Property::z, Property::w, Property::h}; }

  constexpr bool contains(Property p) const { return (bits_ & bit(p)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr PropertySet& insert(Property p) {
    bits_ = static_cast<std::uint8_t>(bits_ | bit(p));
    return *this;
  }
  constexpr PropertySet& erase(Property p) {
    bits_ = static_cast<std::uint8_t>(bits_ & ~bit(p));
    return *this;
  }
  constexpr PropertySet& merge(PropertySet other) {
    bits_ = static_cast<std::uint8_t>(bits_ | other.bits_);
    return *this;
  }
  constexpr PropertySet& remove(PropertySet other) {
    bits_ = static_cast<std::uint8_t>(bits_ & ~other.bits_);
    return *this;
  }

  std::vector<Property> to_vector() const {
    std::vector<Property> out;
    for (Property p : kAllProperties) {
      if (contains(p)) out.push_back(p);
    }
    return out;
  }

  friend constexpr bool operator==(PropertySet, PropertySet) = default;

 private:
  static constexpr std::uint8_t bit(Property p) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p)); }
  std::uint8_t bits_ = 0;
};

/// Axis-aligned box plus layer index. (x, y) is the top-left corner.
struct ElementGeometry {
  double x = 0.0;
  double y = 0.0;
  int z = 0;
  double w = kMinElementSize;
  double h = kMinElementSize;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  double area() const { return w * h; }

  double value(Property p) const {
    switch (p) {
      case Property::x: return x;
      case Property::y: return y;
      case Property::z: return z;
      case Property::w: return w;
      case Property::h: return h;
    }
    return 0.0;
  }

  bool is_valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && z >= 0 &&
           w >= kMinElementSize && h >= kMinElementSize;
  }

  friend bool operator==(const ElementGeometry&, const ElementGeometry&) = default;
};

enum class ElementKind : std::uint8_t { rect, ellipse, text, path, image, group };

inline constexpr ElementKind kAllKinds[] = {ElementKind::rect, ElementKind::ellipse, ElementKind::text,
                                            ElementKind::path, ElementKind::image, ElementKind::group};

constexpr std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::rect: return "rect";
    case ElementKind::ellipse: return "ellipse";
    case ElementKind::text: return "text";
    case ElementKind::path: return "path";
    case ElementKind::image: return "image";
    case ElementKind::group: return "group";
  }
  return "?";
}

inline std::optional<ElementKind> kind_from_string(std::string_view s) {
  for (ElementKind k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct Element {
  std::string id;
  ElementGeometry geometry;
  ElementKind kind = ElementKind::rect;
  std::string style_digest;
  std::optional<std::string> text;
  PropertySet locked;

  friend bool operator==(const Element&, const Element&) = default;
};

struct Design {
  double canvas_width = 0.0;
  double canvas_height = 0.0;
  std::vector<Element> elements;

  const Element* find(std::string_view id) const {
    auto it = std::find_if(elements.begin(), elements.end(), [&](const Element& e) { return e.id == id; });
    return it == elements.end() ? nullptr : &*it;
  }

  Element* find(std::string_view id) {
    auto it = std::find_if(elements.begin(), elements.end(), [&](const Element& e) { return e.id == id; });
    return it == elements.end() ? nullptr : &*it;
  }

  const Element& at(std::string_view id) const {
    const Element* e = find(id);
    if (e == nullptr) throw Error(ErrorCode::unknown_element, std::string(id));
    return *e;
  }

  friend bool operator==(const Design&, const Design&) = default;
};

struct Delta {
  double dx = 0.0;
  double dy = 0.0;
  int dz = 0;
  double dw = 0.0;
  double dh = 0.0;

  double component(Property p) const {
    switch (p) {
      case Property::x: return dx;
      case Property::y: return dy;
      case Property::z: return dz;
      case Property::w: return dw;
      case Property::h: return dh;
    }
    return 0.0;
  }

  void set_component(Property p, double v) {
    switch (p) {
      case Property::x: dx = v; break;
      case Property::y: dy = v; break;
      case Property::z: dz = static_cast<int>(std::lround(v)); break;
      case Property::w: dw = v; break;
      case Property::h: dh = v; break;
    }
  }

  bool is_zero() const { return dx == 0.0 && dy == 0.0 && dz == 0 && dw == 0.0 && dh == 0.0; }

  /// Properties carrying a nonzero change.
  PropertySet touched() const {
    PropertySet s;
    for (Property p : kAllProperties) {
      if (component(p) != 0.0) s.insert(p);
    }
    return s;
  }

  Delta& operator+=(const Delta& o) {
    dx += o.dx;
    dy += o.dy;
    dz += o.dz;
    dw += o.dw;
    dh += o.dh;
    return *this;
  }
  friend Delta operator+(Delta a, const Delta& b) { return a += b; }
  friend bool operator==(const Delta&, const Delta&) = default;
};

/// Difference between two geometries (new - old).
inline Delta delta_between(const ElementGeometry& from, const ElementGeometry& to) {
  return Delta{to.x - from.x, to.y - from.y, to.z - from.z, to.w - from.w, to.h - from.h};
}

/// Sparse per-element deltas. An absent id means a zero delta; zero entries
/// are never stored, so structural equality is semantic equality.
class Transformation {
 public:
  using Map = std::map<std::string, Delta, std::less<>>;

  Transformation() = default;
  Transformation(std::initializer_list<Map::value_type> entries) {
    for (const auto& [id, d] : entries) set(id, d);
  }

  void set(const std::string& id, const Delta& d) {
    if (d.is_zero()) {
      entries_.erase(id);
    } else {
      entries_[id] = d;
    }
  }

  void add(const std::string& id, const Delta& d) { set(id, get(id) + d); }

  Delta get(std::string_view id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? Delta{} : it->second;
  }

  bool contains(std::string_view id) const { return entries_.find(id) != entries_.end(); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const Map& entries() const { return entries_; }

  friend bool operator==(const Transformation&, const Transformation&) = default;

 private:
  Map entries_;
};

/// Component-wise sum of deltas; ids present in one input pass through.
inline Transformation compose(const Transformation& first, const Transformation& second) {
  Transformation out = first;
  for (const auto& [id, d] : second.entries()) out.add(id, d);
  return out;
}

/// Returns A* = design + t. Geometry fields are incremented by the deltas.
/// When any delta moves z, layers are re-ranked densely by
/// (z + dz, document index); otherwise z values are left as they are.
inline Design apply_transformation(const Design& design, const Transformation& t) {
  Design out = design;
  std::vector<std::pair<double, std::size_t>> layer_keys;
  bool restack = false;

  for (const auto& [id, d] : t.entries()) {
    Element* e = out.find(id);
    if (e == nullptr) throw Error(ErrorCode::unknown_element, id);
    for (Property p : kAllProperties) {
      if (!std::isfinite(d.component(p))) throw Error(ErrorCode::invalid_argument, "non-finite delta for " + id);
      if (d.component(p) != 0.0 && e->locked.contains(p)) {
        throw Error(ErrorCode::locked_property_violation, id + "." + std::string(to_string(p)));
      }
    }
    ElementGeometry& g = e->geometry;
    if (g.w + d.dw < kMinElementSize || g.h + d.dh < kMinElementSize) {
      throw Error(ErrorCode::min_size_violation, id);
    }
    g.x += d.dx;
    g.y += d.dy;
    g.w += d.dw;
    g.h += d.dh;
    g.z += d.dz;
    if (d.dz != 0) restack = true;
  }

  if (restack) {
    layer_keys.reserve(out.elements.size());
    for (std::size_t i = 0; i < out.elements.size(); ++i) {
      layer_keys.emplace_back(out.elements[i].geometry.z, i);
    }
    std::sort(layer_keys.begin(), layer_keys.end());
    for (std::size_t rank = 0; rank < layer_keys.size(); ++rank) {
      out.elements[layer_keys[rank].second].geometry.z = static_cast<int>(rank);
    }
  }
  return out;
}

enum class Relation : std::uint8_t { a_contains_b, b_contains_a, overlap, disjoint };

constexpr std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::a_contains_b: return "a-contains-b";
    case Relation::b_contains_a: return "b-contains-a";
    case Relation::overlap: return "overlap";
    case Relation::disjoint: return "disjoint";
  }
  return "?";
}

struct RelationReport {
  Relation relation = Relation::disjoint;
  // Edge-to-edge distances; set only for disjoint pairs separated on that axis.
  std::optional<double> horizontal_gap;
  std::optional<double> vertical_gap;
};

/// Signed overlap length of [a0, a0+al] and [b0, b0+bl]; negative is a gap.
inline double interval_overlap(double a0, double al, double b0, double bl) {
  return std::min(a0 + al, b0 + bl) - std::max(a0, b0);
}

inline RelationReport bounds_relation(const ElementGeometry& a, const ElementGeometry& b) {
  const double ix = interval_overlap(a.x, a.w, b.x, b.w);
  const double iy = interval_overlap(a.y, a.h, b.y, b.h);
  RelationReport report;
  if (ix > 0.0 && iy > 0.0) {
    const double shared = ix * iy;
    if (a.area() > b.area() && shared >= kContainmentCoverage * b.area()) {
      report.relation = Relation::a_contains_b;
    } else if (b.area() > a.area() && shared >= kContainmentCoverage * a.area()) {
      report.relation = Relation::b_contains_a;
    } else {
      report.relation = Relation::overlap;
    }
    return report;
  }
  report.relation = Relation::disjoint;
  if (ix <= 0.0) report.horizontal_gap = -ix;
  if (iy <= 0.0) report.vertical_gap = -iy;
  return report;
}

inline bool contains(const ElementGeometry& outer, const ElementGeometry& inner) {
  return bounds_relation(outer, inner).relation == Relation::a_contains_b;
}

/// Positive-area intersection that is not containment.
inline bool overlaps(const ElementGeometry& a, const ElementGeometry& b) {
  return bounds_relation(a, b).relation == Relation::overlap;
}

}  // namespace vlt
