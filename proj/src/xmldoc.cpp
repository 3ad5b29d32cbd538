#include "tmano/xmldoc.hpp"

#include <cctype>
#include <sstream>

namespace tmano::xmldoc {

namespace {

struct Reader {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw XmlError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                   what);
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return eof() ? '\0' : text[pos]; }

  char get() {
    if (eof()) fail("unexpected end of document");
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
  }

  bool consume(std::string_view tok) {
    if (text.compare(pos, tok.size(), tok) != 0) return false;
    for (std::size_t i = 0; i < tok.size(); ++i) get();
    return true;
  }

  std::string name() {
    std::string out;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
          c == '.') {
        out.push_back(get());
      } else {
        break;
      }
    }
    if (out.empty()) fail("expected an element name");
    return out;
  }
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string decode_entity(Reader& r) {
  std::string ent;
  while (!r.eof() && r.peek() != ';') {
    ent.push_back(r.get());
    if (ent.size() > 6) r.fail("unterminated entity reference");
  }
  if (r.eof()) r.fail("unterminated entity reference");
  r.get();  // ';'
  if (ent == "lt") return "<";
  if (ent == "gt") return ">";
  if (ent == "amp") return "&";
  if (ent == "quot") return "\"";
  if (ent == "apos") return "'";
  r.fail("unknown entity: &" + ent + ";");
}

XmlNode parse_element(Reader& r) {
  if (!r.consume("<")) r.fail("expected '<'");
  XmlNode node;
  node.name = r.name();
  r.skip_ws();
  if (r.consume("/>")) return node;
  if (!r.consume(">")) r.fail("expected '>' after element name " + node.name);

  std::string raw_text;
  for (;;) {
    if (r.eof()) r.fail("unterminated element: " + node.name);
    if (r.peek() == '<') {
      if (r.text.compare(r.pos, 2, "</") == 0) {
        r.consume("</");
        std::string closing = r.name();
        if (closing != node.name)
          r.fail("mismatched closing tag: expected </" + node.name + ">, got </" + closing + ">");
        r.skip_ws();
        if (!r.consume(">")) r.fail("expected '>' in closing tag");
        break;
      }
      node.children.push_back(parse_element(r));
      raw_text.push_back(' ');  // separate text runs around child elements
    } else if (r.peek() == '&') {
      r.get();
      raw_text += decode_entity(r);
    } else {
      raw_text.push_back(r.get());
    }
  }
  node.text = trim(raw_text);
  return node;
}

}  // namespace

const XmlNode* XmlNode::child(std::string_view n) const {
  for (const auto& c : children)
    if (c.name == n) return &c;
  return nullptr;
}

std::vector<const XmlNode*> XmlNode::children_named(std::string_view n) const {
  std::vector<const XmlNode*> out;
  for (const auto& c : children)
    if (c.name == n) out.push_back(&c);
  return out;
}

XmlNode parse(std::string_view document) {
  Reader r{document};
  r.skip_ws();
  if (r.text.compare(r.pos, 5, "<?xml") == 0) {
    // The declaration is validated, not skipped: only version/encoding/
    // standalone pseudo-attributes with sensible values are accepted.
    std::size_t body_start = r.pos + 5;
    std::size_t end = r.text.find("?>", body_start);
    if (end == std::string_view::npos) r.fail("unterminated XML declaration");
    std::string body(r.text.substr(body_start, end - body_start));
    std::istringstream attrs(body);
    std::string attr;
    bool saw_version = false;
    while (attrs >> attr) {
      auto eq = attr.find('=');
      if (eq == std::string::npos || attr.size() < eq + 3 || attr[eq + 1] != '"' ||
          attr.back() != '"')
        r.fail("malformed XML declaration attribute: " + attr);
      std::string key = attr.substr(0, eq);
      std::string value = attr.substr(eq + 2, attr.size() - eq - 3);
      if (key == "version") {
        if (value != "1.0") r.fail("unsupported XML version: " + value);
        saw_version = true;
      } else if (key == "encoding") {
        if (value != "UTF-8" && value != "utf-8") r.fail("unsupported encoding: " + value);
      } else if (key == "standalone") {
        if (value != "yes" && value != "no") r.fail("bad standalone value: " + value);
      } else {
        r.fail("unknown XML declaration attribute: " + key);
      }
    }
    if (!saw_version) r.fail("XML declaration without a version");
    r.pos = end + 2;
    r.skip_ws();
  }
  if (r.eof()) r.fail("empty document");
  XmlNode root = parse_element(r);
  r.skip_ws();
  if (!r.eof()) r.fail("trailing content after root element");
  return root;
}

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace {

void serialize_node(const XmlNode& node, std::string& out) {
  out += '<';
  out += node.name;
  out += '>';
  out += escape_text(node.text);
  for (const auto& c : node.children) serialize_node(c, out);
  out += "</";
  out += node.name;
  out += '>';
}

}  // namespace

std::string serialize(const XmlNode& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\" ?>";
  serialize_node(root, out);
  return out;
}

}  // namespace tmano::xmldoc
