// Minimal XML subset used by the credential documents: an optional
// declaration, nested elements without attributes, character data with the
// five standard entities. No namespaces, CDATA, processing instructions or
// DTDs — the credential schemas need none of them, and keeping the reader
// small gives exact control over the canonical form the signatures cover.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tmano::xmldoc {

class XmlError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct XmlNode {
  std::string name;
  std::string text;  // concatenated character data, whitespace-trimmed
  std::vector<XmlNode> children;

  // First child with the given name, or nullptr.
  const XmlNode* child(std::string_view name) const;
  std::vector<const XmlNode*> children_named(std::string_view name) const;
};

// Parses a document; the root element is returned. Throws XmlError with a
// line/column prefix on malformed input.
XmlNode parse(std::string_view document);

// Compact serialization: XML declaration followed by the element tree with
// no whitespace between tags. Text is entity-escaped.
std::string serialize(const XmlNode& root);

std::string escape_text(std::string_view text);

}  // namespace tmano::xmldoc
