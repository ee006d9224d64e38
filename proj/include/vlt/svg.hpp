#pragma once

// SVG subset <-> Design.
//
// Supported: rect, circle, ellipse, image, text, path leaves and g/a
// containers with translate/scale transforms. Groups with an id become
// elements; anonymous groups are flattened. Everything else is carried
// through as opaque markup.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vlt/geometry.hpp"
#include "vlt/xml.hpp"

namespace vlt {

/// Text metrics used in place of a font rasterizer.
inline constexpr double kTextAdvanceEm = 0.6;
inline constexpr double kTextLineHeightEm = 1.2;
inline constexpr double kDefaultFontSize = 16.0;

/// Axis-aligned scale followed by translation: p -> s*p + t.
struct Affine {
  double sx = 1.0;
  double sy = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  double map_x(double x) const { return sx * x + tx; }
  double map_y(double y) const { return sy * y + ty; }

  Affine inverse() const { return Affine{1.0 / sx, 1.0 / sy, -tx / sx, -ty / sy}; }

  bool is_identity(double eps = 1e-12) const {
    return std::abs(sx - 1.0) <= eps && std::abs(sy - 1.0) <= eps && std::abs(tx) <= eps * 1e3 &&
           std::abs(ty) <= eps * 1e3;
  }

  /// (a * b)(p) == a(b(p))
  friend Affine operator*(const Affine& a, const Affine& b) {
    return Affine{a.sx * b.sx, a.sy * b.sy, a.sx * b.tx + a.tx, a.sy * b.ty + a.ty};
  }
};

struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

inline Box map_box(const Affine& m, const Box& b) {
  const double ax = m.map_x(b.x0), bx = m.map_x(b.x1);
  const double ay = m.map_y(b.y0), by = m.map_y(b.y1);
  return Box{std::min(ax, bx), std::min(ay, by), std::max(ax, bx), std::max(ay, by)};
}

inline Box to_box(const ElementGeometry& g) { return Box{g.x, g.y, g.right(), g.bottom()}; }

/// Affine taking box `from` onto box `to`.
inline Affine box_map(const ElementGeometry& from, const ElementGeometry& to) {
  const double sx = to.w / from.w;
  const double sy = to.h / from.h;
  return Affine{sx, sy, to.x - sx * from.x, to.y - sy * from.y};
}

enum class GeometryBinding { rect_attrs, center_radius, translate_scale_wrapper, text_anchor };

constexpr std::string_view to_string(GeometryBinding b) {
  switch (b) {
    case GeometryBinding::rect_attrs: return "rect-attrs";
    case GeometryBinding::center_radius: return "center-radius";
    case GeometryBinding::translate_scale_wrapper: return "translate-scale-wrapper";
    case GeometryBinding::text_anchor: return "text-anchor";
  }
  return "?";
}

struct SourceFragment {
  std::string element_id;
  std::string original_markup;
  GeometryBinding binding = GeometryBinding::rect_attrs;
  std::size_t node = 0;
  ElementGeometry original;
};

struct FragmentTable {
  std::shared_ptr<const xml::Document> document;
  std::map<std::string, SourceFragment, std::less<>> fragments;
  std::map<std::size_t, std::string> node_ids;

  const SourceFragment* find(std::string_view id) const {
    auto it = fragments.find(id);
    return it == fragments.end() ? nullptr : &it->second;
  }
};

struct ParsedDesign {
  Design design;
  FragmentTable fragments;
};

std::string format_number(double v);

namespace svg_detail {

inline bool is_sep(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ','; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Parses a leading number; advances `s` past it.
inline std::optional<double> take_number(std::string_view& s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '+') ++i;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), v);
  if (ec != std::errc() || ptr == s.data() + i) return std::nullopt;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return v;
}

inline std::vector<double> number_list(std::string_view s) {
  std::vector<double> out;
  while (true) {
    while (!s.empty() && is_sep(s.front())) s.remove_prefix(1);
    if (s.empty()) break;
    auto v = take_number(s);
    if (!v) break;
    out.push_back(*v);
  }
  return out;
}

inline std::optional<double> parse_length(std::string_view raw, double em = kDefaultFontSize) {
  std::string_view s = trim(raw);
  auto v = take_number(s);
  if (!v || !std::isfinite(*v)) return std::nullopt;
  s = trim(s);
  if (s.empty() || s == "px") return *v;
  if (s == "pt") return *v * 4.0 / 3.0;
  if (s == "pc") return *v * 16.0;
  if (s == "mm") return *v * 96.0 / 25.4;
  if (s == "cm") return *v * 96.0 / 2.54;
  if (s == "in") return *v * 96.0;
  if (s == "em") return *v * em;
  if (s == "ex") return *v * em / 2.0;
  return std::nullopt;
}

inline std::map<std::string, std::string> parse_style(std::string_view style) {
  std::map<std::string, std::string> out;
  while (!style.empty()) {
    const auto semi = style.find(';');
    std::string_view decl = style.substr(0, semi);
    style = semi == std::string_view::npos ? std::string_view{} : style.substr(semi + 1);
    const auto colon = decl.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = trim(decl.substr(0, colon));
    const auto value = trim(decl.substr(colon + 1));
    if (!key.empty()) out[std::string(key)] = std::string(value);
  }
  return out;
}

/// Presentation property from the style attribute, else the plain attribute.
inline std::optional<std::string> presentation(const xml::Node& n, const std::string& key) {
  if (auto style = n.attr("style")) {
    auto props = parse_style(*style);
    if (auto it = props.find(key); it != props.end()) return it->second;
  }
  return n.attr(key);
}

inline std::string style_digest(const xml::Node& n) {
  static const char* const keys[] = {"fill",        "fill-opacity", "font-family", "font-size", "font-style",
                                     "font-weight", "opacity",      "stroke",      "stroke-opacity",
                                     "stroke-width", "text-anchor"};
  std::string out;
  for (const char* k : keys) {
    if (auto v = presentation(n, k)) {
      out += k;
      out += ':';
      out += std::string(trim(*v));
      out += ';';
    }
  }
  return out;
}

inline Affine parse_transform(std::string_view s) {
  Affine out;
  while (true) {
    while (!s.empty() && is_sep(s.front())) s.remove_prefix(1);
    if (s.empty()) break;
    const auto open = s.find('(');
    const auto close = s.find(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      throw Error(ErrorCode::malformed_xml, "bad transform list: " + std::string(s));
    }
    const std::string name(trim(s.substr(0, open)));
    const auto args = number_list(s.substr(open + 1, close - open - 1));
    s.remove_prefix(close + 1);
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi) {
        throw Error(ErrorCode::malformed_xml, "wrong argument count for " + name);
      }
    };
    Affine step;
    if (name == "translate") {
      need(1, 2);
      step.tx = args[0];
      step.ty = args.size() > 1 ? args[1] : 0.0;
    } else if (name == "scale") {
      need(1, 2);
      step.sx = args[0];
      step.sy = args.size() > 1 ? args[1] : args[0];
    } else if (name == "matrix") {
      need(6, 6);
      if (args[1] != 0.0 || args[2] != 0.0) throw Error(ErrorCode::unsupported_transform, "matrix with rotation/skew");
      step = Affine{args[0], args[3], args[4], args[5]};
    } else if (name == "rotate") {
      need(1, 3);
      if (std::fmod(args[0], 360.0) != 0.0) throw Error(ErrorCode::unsupported_transform, "rotate");
    } else if (name == "skewX" || name == "skewY") {
      need(1, 1);
      if (std::fmod(args[0], 180.0) != 0.0) throw Error(ErrorCode::unsupported_transform, name);
    } else {
      throw Error(ErrorCode::unsupported_transform, "unknown transform " + name);
    }
    if (step.sx == 0.0 || step.sy == 0.0) throw Error(ErrorCode::unsupported_transform, "degenerate scale");
    out = out * step;
  }
  return out;
}

inline Affine node_transform(const xml::Node& n) {
  auto t = n.attr("transform");
  return t ? parse_transform(*t) : Affine{};
}

/// Control-point hull of path data, in the path's own coordinates.
inline std::optional<Box> path_hull(std::string_view d) {
  std::vector<std::pair<double, double>> pts;
  double cx = 0, cy = 0, start_x = 0, start_y = 0;
  double last_ctrl_x = 0, last_ctrl_y = 0;
  char cmd = 0, prev_cmd = 0;
  auto skip = [&] {
    while (!d.empty() && is_sep(d.front())) d.remove_prefix(1);
  };
  auto num = [&]() -> double {
    skip();
    auto v = take_number(d);
    if (!v) throw Error(ErrorCode::malformed_xml, "bad path data");
    return *v;
  };
  auto flag = [&]() -> double {
    skip();
    if (d.empty() || (d.front() != '0' && d.front() != '1')) throw Error(ErrorCode::malformed_xml, "bad arc flag");
    const double v = d.front() == '1' ? 1.0 : 0.0;
    d.remove_prefix(1);
    return v;
  };
  while (true) {
    skip();
    if (d.empty()) break;
    const char c = d.front();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cmd = c;
      d.remove_prefix(1);
      if (cmd == 'Z' || cmd == 'z') {
        cx = start_x;
        cy = start_y;
        prev_cmd = cmd;
        continue;
      }
    } else if (cmd == 0) {
      throw Error(ErrorCode::malformed_xml, "path data must start with a command");
    }
    const bool rel = std::islower(static_cast<unsigned char>(cmd)) != 0;
    const double ox = rel ? cx : 0.0, oy = rel ? cy : 0.0;
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
    auto point = [&](double x, double y) { pts.emplace_back(x, y); };
    switch (up) {
      case 'M': {
        const double x = ox + num(), y = oy + num();
        cx = start_x = x;
        cy = start_y = y;
        point(x, y);
        cmd = rel ? 'l' : 'L';
        break;
      }
      case 'L': {
        cx = ox + num();
        cy = oy + num();
        point(cx, cy);
        break;
      }
      case 'H': cx = ox + num(); point(cx, cy); break;
      case 'V': cy = oy + num(); point(cx, cy); break;
      case 'C': {
        const double x1 = ox + num(), y1 = oy + num(), x2 = ox + num(), y2 = oy + num();
        cx = ox + num();
        cy = oy + num();
        point(x1, y1);
        point(x2, y2);
        point(cx, cy);
        last_ctrl_x = x2;
        last_ctrl_y = y2;
        break;
      }
      case 'S': {
        const bool smooth = prev_cmd == 'C' || prev_cmd == 'c' || prev_cmd == 'S' || prev_cmd == 's';
        const double rx = smooth ? 2 * cx - last_ctrl_x : cx, ry = smooth ? 2 * cy - last_ctrl_y : cy;
        const double x2 = ox + num(), y2 = oy + num();
        cx = ox + num();
        cy = oy + num();
        point(rx, ry);
        point(x2, y2);
        point(cx, cy);
        last_ctrl_x = x2;
        last_ctrl_y = y2;
        break;
      }
      case 'Q': {
        const double x1 = ox + num(), y1 = oy + num();
        cx = ox + num();
        cy = oy + num();
        point(x1, y1);
        point(cx, cy);
        last_ctrl_x = x1;
        last_ctrl_y = y1;
        break;
      }
      case 'T': {
        const bool smooth = prev_cmd == 'Q' || prev_cmd == 'q' || prev_cmd == 'T' || prev_cmd == 't';
        const double x1 = smooth ? 2 * cx - last_ctrl_x : cx, y1 = smooth ? 2 * cy - last_ctrl_y : cy;
        cx = ox + num();
        cy = oy + num();
        point(x1, y1);
        point(cx, cy);
        last_ctrl_x = x1;
        last_ctrl_y = y1;
        break;
      }
      case 'A': {
        num();
        num();
        num();
        flag();
        flag();
        cx = ox + num();
        cy = oy + num();
        point(cx, cy);
        break;
      }
      default: throw Error(ErrorCode::malformed_xml, std::string("unknown path command ") + cmd);
    }
    prev_cmd = up == 'M' ? 'M' : cmd;
  }
  if (pts.empty()) return std::nullopt;
  Box b{pts[0].first, pts[0].second, pts[0].first, pts[0].second};
  for (auto [x, y] : pts) {
    b.x0 = std::min(b.x0, x);
    b.y0 = std::min(b.y0, y);
    b.x1 = std::max(b.x1, x);
    b.y1 = std::max(b.y1, y);
  }
  return b;
}

inline void collect_text(const xml::Document& doc, const xml::Node& n, std::string& out) {
  for (std::size_t c : n.children) {
    const auto& k = doc.nodes[c];
    if (k.type == xml::NodeType::text || k.type == xml::NodeType::cdata) out += k.text;
    else if (k.type == xml::NodeType::element) collect_text(doc, k, out);
  }
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

inline std::size_t codepoints(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

inline bool is_leaf_kind(std::string_view name) {
  return name == "rect" || name == "circle" || name == "ellipse" || name == "image" || name == "text" || name == "path";
}

inline bool is_container(std::string_view name) { return name == "g" || name == "a" || name == "switch"; }

struct Inherited {
  double font_size = kDefaultFontSize;
  std::string text_anchor = "start";
};

inline Inherited inherit(const xml::Node& n, Inherited in) {
  if (auto fs = presentation(n, "font-size")) {
    if (auto v = parse_length(*fs, in.font_size)) in.font_size = *v;
  }
  if (auto ta = presentation(n, "text-anchor")) in.text_anchor = std::string(trim(*ta));
  return in;
}

inline double attr_number(const xml::Node& n, const char* name, double fallback = 0.0) {
  auto v = n.attr(name);
  if (!v) return fallback;
  auto list = number_list(*v);
  if (!list.empty() && trim(*v).find_first_of(" ,\t\n") == std::string_view::npos) {
    return parse_length(*v).value_or(list.front());
  }
  return list.empty() ? fallback : list.front();
}

class Reader {
 public:
  explicit Reader(std::shared_ptr<const xml::Document> doc) : doc_(std::move(doc)) {}

  ParsedDesign read() {
    const xml::Node& root = doc_->nodes[doc_->root];
    if (root.local_name() != "svg") throw Error(ErrorCode::malformed_xml, "root element is not <svg>");

    Affine root_space;
    std::optional<double> width, height;
    if (auto vb = root.attr("viewBox")) {
      auto v = number_list(*vb);
      if (v.size() == 4 && v[2] > 0 && v[3] > 0) {
        width = v[2];
        height = v[3];
        root_space = Affine{1, 1, -v[0], -v[1]};
      }
    }
    if (!width || !height) {
      auto w = root.attr("width") ? parse_length(*root.attr("width")) : std::nullopt;
      auto h = root.attr("height") ? parse_length(*root.attr("height")) : std::nullopt;
      if (!w || !h || *w <= 0 || *h <= 0) throw Error(ErrorCode::missing_canvas_size, "svg needs width/height or a viewBox");
      width = w;
      height = h;
    }
    out_.design.canvas_width = *width;
    out_.design.canvas_height = *height;
    out_.fragments.document = doc_;

    for (std::size_t i = 0; i < doc_->nodes.size(); ++i) {
      if (auto id = doc_->nodes[i].attr("id"); id && doc_->nodes[i].type == xml::NodeType::element) {
        taken_.insert(*id);
      }
    }
    const Inherited inh = inherit(root, Inherited{});
    for (std::size_t c : root.children) visit(c, root_space, inh);
    return std::move(out_);
  }

 private:
  std::string assign_id(const xml::Node& n) {
    if (auto id = n.attr("id"); id && !id->empty() && used_.insert(*id).second) return *id;
    std::string base = n.attr("id") && !n.attr("id")->empty() ? *n.attr("id") : std::string(n.local_name());
    for (std::size_t k = 1;; ++k) {
      std::string cand = base + "-" + std::to_string(k);
      if (!taken_.count(cand) && used_.insert(cand).second) return cand;
    }
  }

  std::size_t add_element(std::size_t node, ElementKind kind, GeometryBinding binding) {
    const xml::Node& n = doc_->nodes[node];
    Element e;
    e.id = assign_id(n);
    e.kind = kind;
    e.style_digest = style_digest(n);
    e.geometry.z = static_cast<int>(out_.design.elements.size());
    out_.design.elements.push_back(e);
    SourceFragment f;
    f.element_id = e.id;
    f.original_markup = doc_->source.substr(n.begin, n.end - n.begin);
    f.binding = binding;
    f.node = node;
    out_.fragments.fragments[e.id] = f;
    out_.fragments.node_ids[node] = e.id;
    return out_.design.elements.size() - 1;
  }

  void set_geometry(std::size_t index, const Box& b) {
    Element& e = out_.design.elements[index];
    e.geometry.x = b.x0;
    e.geometry.y = b.y0;
    e.geometry.w = std::max(kMinElementSize, b.width());
    e.geometry.h = std::max(kMinElementSize, b.height());
    out_.fragments.fragments[e.id].original = e.geometry;
  }

  /// Visits a node; returns the canvas boxes of supported leaves below it.
  std::vector<Box> visit(std::size_t idx, const Affine& parent, const Inherited& inh) {
    const xml::Node& n = doc_->nodes[idx];
    if (n.type != xml::NodeType::element) return {};
    const std::string_view name = n.local_name();

    if (is_container(name)) {
      const Affine placement = parent * node_transform(n);
      const Inherited here = inherit(n, inh);
      std::optional<std::size_t> group;
      if (name == "g" && n.attr("id") && !n.attr("id")->empty()) {
        group = add_element(idx, ElementKind::group, GeometryBinding::translate_scale_wrapper);
      }
      std::vector<Box> boxes;
      for (std::size_t c : n.children) {
        auto sub = visit(c, placement, here);
        boxes.insert(boxes.end(), sub.begin(), sub.end());
      }
      if (group) {
        Box u;
        if (boxes.empty()) {
          u = Box{placement.map_x(0), placement.map_y(0), placement.map_x(0), placement.map_y(0)};
        } else {
          u = boxes.front();
          for (const auto& b : boxes) {
            u.x0 = std::min(u.x0, b.x0);
            u.y0 = std::min(u.y0, b.y0);
            u.x1 = std::max(u.x1, b.x1);
            u.y1 = std::max(u.y1, b.y1);
          }
        }
        set_geometry(*group, u);
      }
      return boxes;
    }
    if (!is_leaf_kind(name)) return {};

    const Affine placement = parent * node_transform(n);
    const Inherited here = inherit(n, inh);
    Box local;
    ElementKind kind = ElementKind::rect;
    GeometryBinding binding = GeometryBinding::rect_attrs;
    std::optional<std::string> text;
    if (name == "rect" || name == "image") {
      kind = name == "rect" ? ElementKind::rect : ElementKind::image;
      const double x = attr_number(n, "x"), y = attr_number(n, "y");
      local = Box{x, y, x + std::max(0.0, attr_number(n, "width")), y + std::max(0.0, attr_number(n, "height"))};
    } else if (name == "circle") {
      kind = ElementKind::ellipse;
      binding = GeometryBinding::center_radius;
      const double cx = attr_number(n, "cx"), cy = attr_number(n, "cy"), r = std::max(0.0, attr_number(n, "r"));
      local = Box{cx - r, cy - r, cx + r, cy + r};
    } else if (name == "ellipse") {
      kind = ElementKind::ellipse;
      binding = GeometryBinding::center_radius;
      const double cx = attr_number(n, "cx"), cy = attr_number(n, "cy");
      const double rx = std::max(0.0, attr_number(n, "rx")), ry = std::max(0.0, attr_number(n, "ry"));
      local = Box{cx - rx, cy - ry, cx + rx, cy + ry};
    } else if (name == "text") {
      kind = ElementKind::text;
      binding = GeometryBinding::text_anchor;
      std::string raw;
      collect_text(*doc_, n, raw);
      text = collapse_whitespace(raw);
      const double fs = here.font_size;
      const double w = kTextAdvanceEm * fs * static_cast<double>(codepoints(*text));
      double x = attr_number(n, "x");
      const double top = attr_number(n, "y") - fs;
      if (here.text_anchor == "middle") x -= w / 2;
      else if (here.text_anchor == "end") x -= w;
      local = Box{x, top, x + w, top + kTextLineHeightEm * fs};
    } else {
      kind = ElementKind::path;
      binding = GeometryBinding::translate_scale_wrapper;
      auto d = n.attr("d");
      local = (d ? path_hull(*d) : std::nullopt).value_or(Box{});
    }
    const Box canvas = map_box(placement, local);
    const std::size_t index = add_element(idx, kind, binding);
    out_.design.elements[index].text = text;
    set_geometry(index, canvas);
    return {canvas};
  }

  std::shared_ptr<const xml::Document> doc_;
  ParsedDesign out_;
  std::set<std::string> taken_;
  std::set<std::string> used_;
};

class Writer {
 public:
  Writer(const Design& design, const FragmentTable& table) : design_(design), table_(table), doc_(*table.document) {
    for (const auto& e : design.elements) {
      if (table.find(e.id) == nullptr) throw Error(ErrorCode::missing_fragment, e.id);
    }
  }

  std::string write() {
    const xml::Node& root = doc_.nodes[doc_.root];
    out_.append(doc_.source, 0, root.begin);
    out_.append(doc_.source, root.begin, root.start_tag_end - root.begin);
    if (!root.self_closing) {
      Affine root_space;
      if (auto vb = root.attr("viewBox")) {
        auto v = number_list(*vb);
        if (v.size() == 4 && v[2] > 0 && v[3] > 0) root_space = Affine{1, 1, -v[0], -v[1]};
      }
      emit_children(root, root_space, root_space);
      out_.append(doc_.source, root.content_end, root.end - root.content_end);
    }
    out_.append(doc_.source, root.end, std::string::npos);
    return std::move(out_);
  }

 private:
  const Element* element_for(std::size_t node) const {
    auto it = table_.node_ids.find(node);
    return it == table_.node_ids.end() ? nullptr : design_.find(it->second);
  }

  /// Stacking key of a child: its own z for elements, else the smallest z
  /// found below it. Unkeyed children keep their slot.
  std::optional<int> stacking_key(std::size_t idx) const {
    if (const Element* e = element_for(idx)) return e->geometry.z;
    const xml::Node& n = doc_.nodes[idx];
    if (n.type != xml::NodeType::element || !is_container(n.local_name())) return std::nullopt;
    std::optional<int> best;
    for (std::size_t c : n.children) {
      if (auto k = stacking_key(c); k && (!best || *k < *best)) best = k;
    }
    return best;
  }

  void emit_children(const xml::Node& n, const Affine& now, const Affine& was) {
    std::vector<std::size_t> kids = n.children;
    std::vector<std::size_t> slots;
    std::vector<std::pair<int, std::size_t>> keyed;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (auto k = stacking_key(kids[i])) {
        slots.push_back(i);
        keyed.emplace_back(*k, kids[i]);
      }
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t s = 0; s < slots.size(); ++s) kids[slots[s]] = keyed[s].second;
    for (std::size_t k : kids) emit(k, now, was);
  }

  void verbatim(const xml::Node& n) { out_.append(doc_.source, n.begin, n.end - n.begin); }

  static std::string wrapper_open(const Affine& w) {
    return "<g transform=\"translate(" + format_number(w.tx) + " " + format_number(w.ty) + ") scale(" +
           format_number(w.sx) + " " + format_number(w.sy) + ")\">";
  }

  void emit(std::size_t idx, const Affine& now, const Affine& was) {
    const xml::Node& n = doc_.nodes[idx];
    if (n.type != xml::NodeType::element) return verbatim(n);
    const std::string_view name = n.local_name();
    const Element* e = element_for(idx);

    if (is_container(name)) {
      const Affine own = node_transform(n);
      Affine wrap;
      if (e != nullptr) {
        const ElementGeometry& before = table_.find(e->id)->original;
        wrap = now.inverse() * box_map(before, e->geometry) * was;
      }
      const bool wrapped = !wrap.is_identity();
      if (wrapped) out_ += wrapper_open(wrap);
      out_.append(doc_.source, n.begin, n.start_tag_end - n.begin);
      if (!n.self_closing) {
        emit_children(n, now * wrap * own, was * own);
        out_.append(doc_.source, n.content_end, n.end - n.content_end);
      }
      if (wrapped) out_ += "</g>";
      return;
    }
    if (e == nullptr) return verbatim(n);
    emit_leaf(n, *e, now, was);
  }

  void emit_leaf(const xml::Node& n, const Element& e, const Affine& now, const Affine& was) {
    const SourceFragment& frag = *table_.find(e.id);
    const ElementGeometry& before = frag.original;
    const ElementGeometry& after = e.geometry;
    const bool same_box = before.x == after.x && before.y == after.y && before.w == after.w && before.h == after.h;
    const bool same_space = (now.inverse() * was).is_identity();
    if (same_box && same_space) return verbatim(n);

    const Affine own = node_transform(n);
    const Affine place = now * own;
    const bool positive = place.sx > 0 && place.sy > 0;
    const Box local = map_box(place.inverse(), to_box(after));
    std::vector<std::pair<std::string, std::string>> attrs;

    if (positive) {
      switch (frag.binding) {
        case GeometryBinding::rect_attrs:
          attrs = {{"x", format_number(local.x0)},
                   {"y", format_number(local.y0)},
                   {"width", format_number(local.width())},
                   {"height", format_number(local.height())}};
          break;
        case GeometryBinding::center_radius:
          if (n.local_name() == "circle") {
            if (std::abs(local.width() - local.height()) <= 1e-9 * std::max(1.0, local.width())) {
              attrs = {{"cx", format_number((local.x0 + local.x1) / 2)},
                       {"cy", format_number((local.y0 + local.y1) / 2)},
                       {"r", format_number(local.width() / 2)}};
            }
          } else {
            attrs = {{"cx", format_number((local.x0 + local.x1) / 2)},
                     {"cy", format_number((local.y0 + local.y1) / 2)},
                     {"rx", format_number(local.width() / 2)},
                     {"ry", format_number(local.height() / 2)}};
          }
          break;
        case GeometryBinding::text_anchor: {
          const Box old_local = map_box((was * own).inverse(), to_box(before));
          const bool same_size = std::abs(local.width() - old_local.width()) <= 1e-9 * std::max(1.0, local.width()) &&
                                 std::abs(local.height() - old_local.height()) <= 1e-9 * std::max(1.0, local.height());
          auto single = [&](const char* a) {
            auto v = n.attr(a);
            return !v || number_list(*v).size() == 1;
          };
          if (same_size && single("x") && single("y")) {
            attrs = {{"x", format_number(attr_number(n, "x") + (local.x0 - old_local.x0))},
                     {"y", format_number(attr_number(n, "y") + (local.y0 - old_local.y0))}};
          }
          break;
        }
        case GeometryBinding::translate_scale_wrapper: break;
      }
    }

    if (attrs.empty()) {
      const Affine wrap = now.inverse() * box_map(before, after) * was;
      out_ += wrapper_open(wrap);
      verbatim(n);
      out_ += "</g>";
      return;
    }
    out_ += rewrite_start_tag(n, attrs);
    out_.append(doc_.source, n.start_tag_end, n.end - n.start_tag_end);
  }

  std::string rewrite_start_tag(const xml::Node& n, const std::vector<std::pair<std::string, std::string>>& values) const {
    std::vector<std::pair<const xml::Attribute*, std::string>> replace;
    std::string appended;
    for (const auto& [name, value] : values) {
      if (const xml::Attribute* a = n.attribute(name)) {
        replace.emplace_back(a, value);
      } else {
        appended += " " + name + "=\"" + xml::escape_attribute(value) + "\"";
      }
    }
    std::sort(replace.begin(), replace.end(), [](const auto& l, const auto& r) { return l.first->value_begin < r.first->value_begin; });
    const std::size_t close = n.start_tag_end - (n.self_closing ? 2 : 1);
    std::string out;
    std::size_t cursor = n.begin;
    for (const auto& [a, value] : replace) {
      out.append(doc_.source, cursor, a->value_begin - cursor);
      out += xml::escape_attribute(value);
      cursor = a->value_end;
    }
    out.append(doc_.source, cursor, close - cursor);
    out += appended;
    out.append(doc_.source, close, n.start_tag_end - close);
    return out;
  }

  const Design& design_;
  const FragmentTable& table_;
  const xml::Document& doc_;
  std::string out_;
};

}  // namespace svg_detail

/// Short decimal (at most six fractional digits) when that is within 1e-12
/// relative of the value, else the shortest exact representation.
inline std::string format_number(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  if (std::abs(std::strtod(s.c_str(), nullptr) - v) > 1e-12 * std::max(1.0, std::abs(v))) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    s.assign(buf, end);
  }
  return s;
}

inline ParsedDesign parse_design(std::string svg) {
  auto doc = std::make_shared<const xml::Document>(xml::parse(std::move(svg)));
  return svg_detail::Reader(std::move(doc)).read();
}

inline std::string serialize_design(const Design& design, const FragmentTable& fragments) {
  if (!fragments.document) throw Error(ErrorCode::missing_fragment, "fragment table has no document");
  return svg_detail::Writer(design, fragments).write();
}

}  // namespace vlt
