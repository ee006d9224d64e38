#pragma once

// Minimal XML reader that keeps byte offsets for every node and attribute
// value, so documents can be re-emitted with surgical edits.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlt/error.hpp"

namespace vlt::xml {

struct Attribute {
  std::string name;
  std::string value;  // entity-decoded
  std::size_t value_begin = 0;  // raw span inside the quotes
  std::size_t value_end = 0;
};

enum class NodeType { element, text, comment, cdata, instruction, doctype };

struct Node {
  NodeType type = NodeType::element;
  std::string name;
  std::vector<Attribute> attributes;
  std::vector<std::size_t> children;
  std::optional<std::size_t> parent;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t start_tag_end = 0;  // one past the start tag's '>'
  std::size_t content_end = 0;    // offset of "</", or end when self-closing
  bool self_closing = false;
  std::string text;  // decoded character data for text/cdata nodes

  const Attribute* attribute(std::string_view n) const {
    for (const auto& a : attributes) {
      if (a.name == n) return &a;
    }
    return nullptr;
  }

  std::optional<std::string> attr(std::string_view n) const {
    const Attribute* a = attribute(n);
    return a ? std::optional<std::string>(a->value) : std::nullopt;
  }

  std::string_view local_name() const {
    std::string_view n = name;
    auto colon = n.find(':');
    return colon == std::string_view::npos ? n : n.substr(colon + 1);
  }
};

struct Document {
  std::string source;
  std::vector<Node> nodes;
  std::size_t root = 0;
};

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace detail

/// Decodes the predefined and numeric character references. Unknown named
/// entities are kept verbatim.
inline std::string decode_entities(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '&') {
      out += raw[i];
      continue;
    }
    const auto semi = raw.find(';', i);
    if (semi == std::string_view::npos) {
      out += raw[i];
      continue;
    }
    const std::string_view ent = raw.substr(i + 1, semi - i - 1);
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (!ent.empty() && ent[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      bool ok = ent.size() > (hex ? 2u : 1u);
      for (std::size_t k = hex ? 2 : 1; k < ent.size() && ok; ++k) {
        const char c = ent[k];
        int digit = -1;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (hex && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        if (digit < 0) ok = false;
        else cp = cp * (hex ? 16u : 10u) + static_cast<std::uint32_t>(digit);
      }
      if (!ok || cp > 0x10FFFF) {
        out.append(raw.substr(i, semi - i + 1));
      } else {
        detail::append_utf8(out, cp);
      }
    } else {
      out.append(raw.substr(i, semi - i + 1));
    }
    i = semi;
  }
  return out;
}

inline std::string escape_attribute(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string source) { doc_.source = std::move(source); }

  Document parse() && {
    const std::string& s = doc_.source;
    std::vector<std::size_t> stack;
    std::optional<std::size_t> root;
    pos_ = 0;
    if (s.compare(0, 3, "\xEF\xBB\xBF") == 0) pos_ = 3;

    while (pos_ < s.size()) {
      if (s[pos_] != '<') {
        const std::size_t start = pos_;
        pos_ = s.find('<', pos_);
        if (pos_ == std::string::npos) pos_ = s.size();
        const std::string_view raw(s.data() + start, pos_ - start);
        if (stack.empty() && raw.find_first_not_of(" \t\r\n") != std::string_view::npos) {
          fail("character data outside the root element", start);
        }
        Node n;
        n.type = NodeType::text;
        n.begin = start;
        n.end = pos_;
        n.text = decode_entities(raw);
        add(std::move(n), stack);
        continue;
      }
      if (starts("<!--")) {
        const std::size_t start = pos_;
        pos_ = find_or_fail("-->", start) + 3;
        add(simple(NodeType::comment, start), stack);
      } else if (starts("<![CDATA[")) {
        const std::size_t start = pos_;
        const std::size_t close = find_or_fail("]]>", start);
        Node n = simple(NodeType::cdata, start);
        n.text = s.substr(start + 9, close - start - 9);
        pos_ = close + 3;
        n.end = pos_;
        add(std::move(n), stack);
      } else if (starts("<?")) {
        const std::size_t start = pos_;
        pos_ = find_or_fail("?>", start) + 2;
        add(simple(NodeType::instruction, start), stack);
      } else if (starts("<!DOCTYPE") || starts("<!doctype")) {
        const std::size_t start = pos_;
        int depth = 0;
        for (; pos_ < s.size(); ++pos_) {
          if (s[pos_] == '[') ++depth;
          else if (s[pos_] == ']') --depth;
          else if (s[pos_] == '>' && depth <= 0) break;
        }
        if (pos_ >= s.size()) fail("unterminated DOCTYPE", start);
        ++pos_;
        add(simple(NodeType::doctype, start), stack);
      } else if (starts("</")) {
        const std::size_t start = pos_;
        pos_ += 2;
        const std::string name = read_name();
        skip_space();
        if (pos_ >= s.size() || s[pos_] != '>') fail("malformed end tag", start);
        ++pos_;
        if (stack.empty()) fail("unexpected end tag </" + name + ">", start);
        Node& open = doc_.nodes[stack.back()];
        if (open.name != name) fail("end tag </" + name + "> does not match <" + open.name + ">", start);
        open.content_end = start;
        open.end = pos_;
        stack.pop_back();
      } else {
        const std::size_t start = pos_;
        ++pos_;
        Node n;
        n.type = NodeType::element;
        n.begin = start;
        n.name = read_name();
        if (n.name.empty()) fail("expected element name", start);
        while (true) {
          const bool had_space = skip_space();
          if (pos_ >= s.size()) fail("unterminated start tag", start);
          if (s[pos_] == '>') {
            ++pos_;
            break;
          }
          if (starts("/>")) {
            pos_ += 2;
            n.self_closing = true;
            break;
          }
          if (!had_space) fail("expected whitespace before attribute", pos_);
          Attribute a;
          a.name = read_name();
          if (a.name.empty()) fail("expected attribute name", pos_);
          skip_space();
          if (pos_ >= s.size() || s[pos_] != '=') fail("expected '=' after attribute " + a.name, pos_);
          ++pos_;
          skip_space();
          if (pos_ >= s.size() || (s[pos_] != '"' && s[pos_] != '\'')) fail("expected quoted value", pos_);
          const char quote = s[pos_++];
          a.value_begin = pos_;
          const std::size_t close = s.find(quote, pos_);
          if (close == std::string::npos) fail("unterminated attribute value", a.value_begin);
          a.value_end = close;
          const std::string_view raw(s.data() + a.value_begin, close - a.value_begin);
          if (raw.find('<') != std::string_view::npos) fail("'<' in attribute value", a.value_begin);
          a.value = decode_entities(raw);
          for (const auto& prev : n.attributes) {
            if (prev.name == a.name) fail("duplicate attribute " + a.name, a.value_begin);
          }
          n.attributes.push_back(std::move(a));
          pos_ = close + 1;
        }
        n.start_tag_end = pos_;
        if (n.self_closing) {
          n.content_end = pos_;
          n.end = pos_;
        }
        if (stack.empty()) {
          if (root) fail("multiple root elements", start);
        }
        const bool closed = n.self_closing;
        const std::size_t idx = add(std::move(n), stack);
        if (stack.empty()) root = idx;
        if (!closed) stack.push_back(idx);
      }
    }
    if (!stack.empty()) fail("unclosed element <" + doc_.nodes[stack.back()].name + ">", doc_.nodes[stack.back()].begin);
    if (!root) fail("document has no root element", 0);
    doc_.root = *root;
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw Error(ErrorCode::malformed_xml, what + " at offset " + std::to_string(at));
  }

  bool starts(std::string_view token) const { return doc_.source.compare(pos_, token.size(), token) == 0; }

  std::size_t find_or_fail(std::string_view token, std::size_t start) const {
    const std::size_t at = doc_.source.find(token, pos_);
    if (at == std::string::npos) fail("unterminated markup", start);
    return at;
  }

  Node simple(NodeType type, std::size_t start) const {
    Node n;
    n.type = type;
    n.begin = start;
    n.end = pos_;
    return n;
  }

  bool skip_space() {
    const std::size_t before = pos_;
    while (pos_ < doc_.source.size() &&
           (doc_.source[pos_] == ' ' || doc_.source[pos_] == '\t' || doc_.source[pos_] == '\n' || doc_.source[pos_] == '\r')) {
      ++pos_;
    }
    return pos_ != before;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < doc_.source.size()) {
      const unsigned char c = static_cast<unsigned char>(doc_.source[pos_]);
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || c >= 0x80 ||
                      (pos_ > start && ((c >= '0' && c <= '9') || c == '-' || c == '.'));
      if (!ok) break;
      ++pos_;
    }
    return doc_.source.substr(start, pos_ - start);
  }

  std::size_t add(Node n, const std::vector<std::size_t>& stack) {
    const std::size_t idx = doc_.nodes.size();
    if (!stack.empty()) {
      n.parent = stack.back();
      doc_.nodes[stack.back()].children.push_back(idx);
    }
    doc_.nodes.push_back(std::move(n));
    return idx;
  }

  Document doc_;
  std::size_t pos_ = 0;
};

inline Document parse(std::string source) { return Parser(std::move(source)).parse(); }

}  // namespace vlt::xml
