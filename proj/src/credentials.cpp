#include "tmano/credentials.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "tmano/xmldoc.hpp"

namespace tmano::credentials {

namespace {

using xmldoc::XmlNode;

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool in_ws = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      in_ws = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    s = trim(s.substr(1, s.size() - 2));
  return s;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string strip_all_ws(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

std::int64_t parse_int(const std::string& s, const std::string& path) {
  std::int64_t v = 0;
  std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw SchemaError(path, "expected an integer, got '" + t + "'");
  return v;
}

// Strict walk helpers: every child of `node` must be consumed by the schema.

struct Walker {
  const XmlNode& node;
  std::string path;
  std::size_t next = 0;

  Walker(const XmlNode& n, std::string p) : node(n), path(std::move(p)) {}

  const XmlNode& require(const std::string& name) {
    if (next >= node.children.size())
      throw SchemaError(path, "missing element <" + name + ">");
    const XmlNode& c = node.children[next];
    if (c.name != name)
      throw SchemaError(path + "/" + c.name, "unexpected element, expected <" + name + ">");
    ++next;
    return c;
  }

  const XmlNode* optional(const std::string& name) {
    if (next < node.children.size() && node.children[next].name == name)
      return &node.children[next++];
    return nullptr;
  }

  std::vector<const XmlNode*> repeated(const std::string& name) {
    std::vector<const XmlNode*> out;
    while (const XmlNode* c = optional(name)) out.push_back(c);
    return out;
  }

  void done() {
    if (next < node.children.size())
      throw SchemaError(path + "/" + node.children[next].name, "unknown element");
  }
};

std::string leaf(const XmlNode& n, const std::string& path) {
  if (!n.children.empty())
    throw SchemaError(path + "/" + n.children[0].name, "unknown element");
  return collapse_ws(n.text);
}

std::string hex_leaf(const XmlNode& n, const std::string& path, std::size_t expected_len) {
  std::string v = lowercase(strip_all_ws(unquote(leaf(n, path))));
  if (!crypto::is_hex(v)) throw SchemaError(path, "malformed hex value");
  if (expected_len != 0 && v.size() != expected_len)
    throw SchemaError(path, "hex value has length " + std::to_string(v.size()) + ", expected " +
                                std::to_string(expected_len));
  return v;
}

HashInfo parse_hash_info(const XmlNode& n, const std::string& path) {
  Walker w(n, path);
  HashInfo h;
  const XmlNode& value = w.require("value");
  h.issuer = unquote(leaf(w.require("issuer"), path + "/issuer"));
  h.type = unquote(leaf(w.require("type"), path + "/type"));
  w.done();
  if (h.type != "SHA2") throw SchemaError(path + "/type", "unsupported hash type: " + h.type);
  h.value = hex_leaf(value, path + "/value", 64);
  return h;
}

std::vector<DynamicProperty> parse_property_list(const XmlNode& n, const std::string& path) {
  std::vector<DynamicProperty> out;
  Walker w(n, path);
  for (const XmlNode* p : w.repeated("p")) {
    DynamicProperty dp;
    dp.text = unquote(collapse_ws(p->text));
    if (dp.text.empty()) throw SchemaError(path + "/p", "empty property string");
    Walker pw(*p, path + "/p");
    if (const XmlNode* v = pw.optional("v"))
      dp.value = parse_int(leaf(*v, path + "/p/v"), path + "/p/v");
    pw.done();
    out.push_back(std::move(dp));
  }
  w.done();
  return out;
}

XmlNode elem(std::string name, std::string text = {}) {
  XmlNode n;
  n.name = std::move(name);
  n.text = std::move(text);
  return n;
}

}  // namespace

std::int64_t parse_validity_seconds(const std::string& validity) {
  std::string v = trim(validity);
  std::size_t i = 0;
  while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) ++i;
  if (i == 0) throw std::invalid_argument("unparsable validity: " + validity);
  std::int64_t n = std::stoll(v.substr(0, i));
  std::string unit = v.substr(i);
  std::int64_t mult;
  if (unit == "s") mult = 1;
  else if (unit == "min") mult = 60;
  else if (unit == "hr") mult = 3600;
  else if (unit == "d") mult = 86400;
  else throw std::invalid_argument("unparsable validity unit: " + validity);
  if (n <= 0) throw std::invalid_argument("validity must be positive: " + validity);
  return n * mult;
}

PropertyCertificate parse_certificate(const std::string& document) {
  XmlNode root = xmldoc::parse(document);
  if (root.name != "vnfCertificate")
    throw SchemaError(root.name, "expected root element <vnfCertificate>");
  PropertyCertificate cert;
  Walker w(root, "vnfCertificate");

  {
    const XmlNode& n = w.require("certificateInfo");
    std::string path = "vnfCertificate/certificateInfo";
    Walker ci(n, path);
    cert.info.id = unquote(leaf(ci.require("id"), path + "/id"));
    cert.info.issuer = unquote(leaf(ci.require("issuer"), path + "/issuer"));
    cert.info.issuer_key = strip_all_ws(unquote(ci.require("issuerKey").text));
    cert.info.sign_algo = unquote(leaf(ci.require("signAlgo"), path + "/signAlgo"));
    cert.info.digital_sign = hex_leaf(ci.require("digitalSign"), path + "/digitalSign", 0);
    cert.info.validity = unquote(leaf(ci.require("validity"), path + "/validity"));
    if (const XmlNode* ia = ci.optional("issuedAt"))
      cert.info.issued_at = parse_int(leaf(*ia, path + "/issuedAt"), path + "/issuedAt");
    ci.done();
    parse_validity_seconds(cert.info.validity);  // throws SchemaError-equivalent below
  }
  {
    const XmlNode& n = w.require("vnfInfo");
    std::string path = "vnfCertificate/vnfInfo";
    Walker vi(n, path);
    cert.vnf_id = unquote(leaf(vi.require("id"), path + "/id"));
    cert.vnf_name = unquote(leaf(vi.require("vnfName"), path + "/vnfName"));
    cert.vnf_make = unquote(leaf(vi.require("vnfMake"), path + "/vnfMake"));
    cert.vnf_purpose = unquote(leaf(vi.require("vnfPurpose"), path + "/vnfPurpose"));
    const XmlNode& map = vi.require("vnfMap");
    vi.done();
    Walker vm(map, path + "/vnfMap");
    auto infos = vm.repeated("serviceVMinfo");
    vm.done();
    if (infos.empty()) throw SchemaError(path + "/vnfMap", "missing <serviceVMinfo>");
    for (const XmlNode* svm : infos) {
      std::string vpath = path + "/vnfMap/serviceVMinfo";
      Walker sw(*svm, vpath);
      ServiceVmInfo info;
      info.vmid = unquote(leaf(sw.require("vmid"), vpath + "/vmid"));
      info.vm_name = unquote(leaf(sw.require("vmName"), vpath + "/vmName"));
      info.vim_location = unquote(leaf(sw.require("vimLocation"), vpath + "/vimLocation"));
      sw.done();
      cert.vnf_map.push_back(std::move(info));
    }
  }
  {
    const XmlNode& n = w.require("staticProperty");
    std::string path = "vnfCertificate/staticProperty";
    Walker sp(n, path);
    cert.vnf_hash = parse_hash_info(sp.require("vnfHashinfo"), path + "/vnfHashinfo");
    cert.service_vm_hash =
        parse_hash_info(sp.require("serviceVMHashinfo"), path + "/serviceVMHashinfo");
    sp.done();
  }
  {
    const XmlNode& n = w.require("dynamicProperty");
    std::string path = "vnfCertificate/dynamicProperty";
    Walker dp(n, path);
    if (const XmlNode* vp = dp.optional("vnfProperty"))
      cert.vnf_properties = parse_property_list(*vp, path + "/vnfProperty");
    if (const XmlNode* sp = dp.optional("serviceVMProperty"))
      cert.service_vm_properties = parse_property_list(*sp, path + "/serviceVMProperty");
    dp.done();
  }
  w.done();
  return cert;
}

namespace {

XmlNode property_list_node(const std::string& name,
                           const std::vector<DynamicProperty>& props) {
  XmlNode n = elem(name);
  for (const auto& p : props) {
    XmlNode pn = elem("p", p.text);
    if (p.value) pn.children.push_back(elem("v", std::to_string(*p.value)));
    n.children.push_back(std::move(pn));
  }
  return n;
}

XmlNode hash_info_node(const std::string& name, const HashInfo& h) {
  XmlNode n = elem(name);
  n.children.push_back(elem("value", h.value));
  n.children.push_back(elem("issuer", h.issuer));
  n.children.push_back(elem("type", h.type));
  return n;
}

XmlNode certificate_node(const PropertyCertificate& cert, bool blank_signature) {
  XmlNode root = elem("vnfCertificate");

  XmlNode info = elem("certificateInfo");
  info.children.push_back(elem("id", cert.info.id));
  info.children.push_back(elem("issuer", cert.info.issuer));
  info.children.push_back(elem("issuerKey", cert.info.issuer_key));
  info.children.push_back(elem("signAlgo", cert.info.sign_algo));
  info.children.push_back(elem("digitalSign", blank_signature ? "" : cert.info.digital_sign));
  info.children.push_back(elem("validity", cert.info.validity));
  if (cert.info.issued_at)
    info.children.push_back(elem("issuedAt", std::to_string(*cert.info.issued_at)));
  root.children.push_back(std::move(info));

  XmlNode vnf = elem("vnfInfo");
  vnf.children.push_back(elem("id", cert.vnf_id));
  vnf.children.push_back(elem("vnfName", cert.vnf_name));
  vnf.children.push_back(elem("vnfMake", cert.vnf_make));
  vnf.children.push_back(elem("vnfPurpose", cert.vnf_purpose));
  XmlNode map = elem("vnfMap");
  for (const auto& svm : cert.vnf_map) {
    XmlNode n = elem("serviceVMinfo");
    n.children.push_back(elem("vmid", svm.vmid));
    n.children.push_back(elem("vmName", svm.vm_name));
    n.children.push_back(elem("vimLocation", svm.vim_location));
    map.children.push_back(std::move(n));
  }
  vnf.children.push_back(std::move(map));
  root.children.push_back(std::move(vnf));

  XmlNode st = elem("staticProperty");
  st.children.push_back(hash_info_node("vnfHashinfo", cert.vnf_hash));
  st.children.push_back(hash_info_node("serviceVMHashinfo", cert.service_vm_hash));
  root.children.push_back(std::move(st));

  XmlNode dyn = elem("dynamicProperty");
  dyn.children.push_back(property_list_node("vnfProperty", cert.vnf_properties));
  dyn.children.push_back(
      property_list_node("serviceVMProperty", cert.service_vm_properties));
  root.children.push_back(std::move(dyn));
  return root;
}

std::string signature_payload(const PropertyCertificate& cert) {
  return xmldoc::serialize(certificate_node(cert, /*blank_signature=*/true));
}

}  // namespace

std::string serialize_certificate(const PropertyCertificate& cert) {
  return xmldoc::serialize(certificate_node(cert, /*blank_signature=*/false));
}

PropertyCertificate canonicalize_and_sign(PropertyCertificate cert,
                                          const crypto::KeyPair& key) {
  if (cert.info.sign_algo != "ECDSA")
    throw std::invalid_argument("unsupported signing algorithm: " + cert.info.sign_algo);
  cert.info.issuer_key = key.public_key_base64();
  cert.info.digital_sign = key.sign_hex(signature_payload(cert));
  return cert;
}

bool verify_signature(const PropertyCertificate& cert) {
  return verify_signature(cert, cert.info.issuer_key);
}

bool verify_signature(const PropertyCertificate& cert, const std::string& public_key_base64) {
  if (cert.info.digital_sign.empty()) return false;
  return crypto::verify_hex(signature_payload(cert), cert.info.digital_sign,
                            public_key_base64);
}

// -- Trust policy ------------------------------------------------------------

TrustPolicy parse_policy(const std::string& document) {
  XmlNode root = xmldoc::parse(document);
  if (root.name != "trustPolicy")
    throw SchemaError(root.name, "expected root element <trustPolicy>");
  TrustPolicy policy;
  Walker w(root, "trustPolicy");
  {
    const XmlNode& n = w.require("info");
    Walker iw(n, "trustPolicy/info");
    policy.id = unquote(leaf(iw.require("id"), "trustPolicy/info/id"));
    policy.creator = unquote(leaf(iw.require("creator"), "trustPolicy/info/creator"));
    policy.creator_role = unquote(leaf(iw.require("cRole"), "trustPolicy/info/cRole"));
    iw.done();
  }
  auto rules = w.repeated("rule");
  w.done();
  if (rules.empty()) throw SchemaError("trustPolicy", "a policy needs at least one rule");

  auto req_strings = [](const XmlNode& n, const std::string& path, const char* name) {
    std::vector<std::string> out;
    for (const XmlNode* r : n.children_named(name)) {
      std::string s = trim(collapse_ws(r->text));
      if (s.empty()) throw SchemaError(path + "/" + name, "empty requirement");
      out.push_back(std::move(s));
    }
    return out;
  };

  for (const XmlNode* rule_node : rules) {
    std::string rpath = "trustPolicy/rule";
    Walker rw(*rule_node, rpath);
    const XmlNode& target = rw.require("target");
    rw.done();
    std::string tpath = rpath + "/target";
    Walker tw(target, tpath);
    PolicyRule rule;
    rule.platform = trim(collapse_ws(tw.require("platform").text));
    rule.resources = trim(collapse_ws(tw.require("resources").text));
    const XmlNode& condition = tw.require("condition");
    const XmlNode& action = tw.require("action");
    tw.done();

    std::string cpath = tpath + "/condition";
    Walker cw(condition, cpath);
    const XmlNode& entity = cw.require("entity");
    cw.done();
    std::string epath = cpath + "/entity";
    Walker ew(entity, epath);
    if (const XmlNode* vnf = ew.optional("vnf")) {
      std::string vpath = epath + "/vnf";
      for (const auto& c : vnf->children)
        if (c.name != "sP" && c.name != "dP")
          throw SchemaError(vpath + "/" + c.name, "unknown element");
      rule.vnf_static = req_strings(*vnf, vpath, "sP");
      rule.vnf_dynamic = req_strings(*vnf, vpath, "dP");
    }
    if (const XmlNode* svm = ew.optional("serviceVM")) {
      std::string vpath = epath + "/serviceVM";
      for (const auto& c : svm->children)
        if (c.name != "sP" && c.name != "dP")
          throw SchemaError(vpath + "/" + c.name, "unknown element");
      rule.vm_static = req_strings(*svm, vpath, "sP");
      rule.vm_dynamic = req_strings(*svm, vpath, "dP");
    }
    ew.done();
    if (!rule.has_vnf_requirements() && !rule.has_vm_requirements())
      throw SchemaError(cpath, "rule has an empty condition");

    std::string apath = tpath + "/action";
    Walker aw(action, apath);
    rule.boot_time_verdict = trim(aw.require("bTime").text);
    rule.run_time_verdict = trim(aw.require("rTime").text);
    aw.done();
    for (const std::string* v : {&rule.boot_time_verdict, &rule.run_time_verdict})
      if (*v != "Trusted" && *v != "Untrusted")
        throw SchemaError(apath, "unknown verdict label: " + *v);

    policy.rules.push_back(std::move(rule));
  }
  return policy;
}

std::string serialize_policy(const TrustPolicy& policy) {
  XmlNode root = elem("trustPolicy");
  XmlNode info = elem("info");
  info.children.push_back(elem("id", policy.id));
  info.children.push_back(elem("creator", policy.creator));
  info.children.push_back(elem("cRole", policy.creator_role));
  root.children.push_back(std::move(info));
  for (const auto& rule : policy.rules) {
    XmlNode target = elem("target");
    target.children.push_back(elem("platform", rule.platform));
    target.children.push_back(elem("resources", rule.resources));
    XmlNode entity = elem("entity");
    auto fill = [](XmlNode& n, const std::vector<std::string>& sp,
                   const std::vector<std::string>& dp) {
      for (const auto& s : sp) n.children.push_back(elem("sP", s));
      for (const auto& s : dp) n.children.push_back(elem("dP", s));
    };
    if (rule.has_vnf_requirements()) {
      XmlNode vnf = elem("vnf");
      fill(vnf, rule.vnf_static, rule.vnf_dynamic);
      entity.children.push_back(std::move(vnf));
    }
    if (rule.has_vm_requirements()) {
      XmlNode svm = elem("serviceVM");
      fill(svm, rule.vm_static, rule.vm_dynamic);
      entity.children.push_back(std::move(svm));
    }
    XmlNode condition = elem("condition");
    condition.children.push_back(std::move(entity));
    target.children.push_back(std::move(condition));
    XmlNode action = elem("action");
    action.children.push_back(elem("bTime", rule.boot_time_verdict));
    action.children.push_back(elem("rTime", rule.run_time_verdict));
    target.children.push_back(std::move(action));
    XmlNode rule_node = elem("rule");
    rule_node.children.push_back(std::move(target));
    root.children.push_back(std::move(rule_node));
  }
  return xmldoc::serialize(root);
}

// -- Hashed digest report ----------------------------------------------------

DigestReport parse_digest_report(const std::string& document) {
  DigestReport report;
  std::istringstream in(document);
  std::string line;
  int lineno = 0;
  bool have_timestamp = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto at = [&](const std::string& what) {
      return "digest report line " + std::to_string(lineno) + ": " + what;
    };
    auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument(at("missing ':'"));
    std::string key = trim(s.substr(0, colon));
    std::string value = trim(s.substr(colon + 1));
    if (key == "slice") {
      report.slice_id = value;
    } else if (key == "reporter") {
      report.reporter = value;
    } else if (key == "timestamp") {
      report.timestamp = std::stoll(value);
      have_timestamp = true;
    } else if (key == "component") {
      std::istringstream fields(value);
      DigestEntry e;
      std::string tail;
      if (!(fields >> e.component >> e.algorithm >> e.digest))
        throw std::invalid_argument(at("expected '<id> <algorithm> <digest>'"));
      if (fields >> tail) {
        if (!tail.starts_with("parent="))
          throw std::invalid_argument(at("unexpected field: " + tail));
        e.parent = tail.substr(7);
      }
      e.digest = lowercase(e.digest);
      report.entries.push_back(std::move(e));
    } else {
      throw std::invalid_argument(at("unknown key: " + key));
    }
  }
  if (report.slice_id.empty()) throw std::invalid_argument("digest report: missing slice id");
  if (!have_timestamp) report.timestamp = 0;
  validate_digest_report(report);
  return report;
}

std::string serialize_digest_report(const DigestReport& report) {
  std::ostringstream os;
  os << "slice: " << report.slice_id << '\n';
  if (!report.reporter.empty()) os << "reporter: " << report.reporter << '\n';
  os << "timestamp: " << report.timestamp << '\n';
  for (const auto& e : report.entries) {
    os << "component: " << e.component << ' ' << e.algorithm << ' ' << e.digest;
    if (e.parent) os << " parent=" << *e.parent;
    os << '\n';
  }
  return os.str();
}

void validate_digest_report(const DigestReport& report) {
  std::vector<std::string> seen;
  for (const auto& e : report.entries) {
    if (!crypto::is_hex(e.digest) || e.digest.size() != crypto::digest_hex_length(e.algorithm))
      throw std::invalid_argument("malformed digest for component " + e.component);
    if (std::find(seen.begin(), seen.end(), e.component) != seen.end())
      throw std::invalid_argument("duplicate component id: " + e.component);
    seen.push_back(e.component);
  }
  for (const auto& e : report.entries)
    if (e.parent && std::find(seen.begin(), seen.end(), *e.parent) == seen.end())
      throw std::invalid_argument("unknown parent component: " + *e.parent);
}

// -- Property-string normalisation -------------------------------------------

std::string property_string_to_constant(const std::string& s,
                                        std::optional<std::int64_t> value) {
  std::string out;
  bool sep = false;
  for (char raw : s) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      if (sep && !out.empty()) out.push_back('_');
      sep = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      sep = true;
    }
  }
  if (out.empty()) throw std::invalid_argument("property string normalises to nothing: " + s);
  if (value) out += "_" + std::to_string(*value);
  return out;
}

std::string PropertyVocabulary::intern(const std::string& raw,
                                       std::optional<std::int64_t> value) {
  std::string constant = property_string_to_constant(raw, value);
  for (auto& [c, raws] : entries_) {
    if (c != constant) continue;
    if (std::find(raws.begin(), raws.end(), raw) == raws.end()) raws.push_back(raw);
    return constant;
  }
  entries_.push_back({constant, {raw}});
  return constant;
}

std::vector<std::pair<std::string, std::vector<std::string>>> PropertyVocabulary::collisions()
    const {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto& e : entries_)
    if (e.second.size() > 1) out.push_back(e);
  return out;
}

}  // namespace tmano::credentials
