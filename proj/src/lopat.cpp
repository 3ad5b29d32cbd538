#include "tmano/lopat.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

namespace tmano::lopat {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

const char* sort_name(Sort s) {
  switch (s) {
    case Sort::NetworkSlice: return "NetworkSlice";
    case Sort::Component: return "Component";
    case Sort::Property: return "Property";
    case Sort::Target: return "Target";
    case Sort::Resource: return "Resource";
    case Sort::Action: return "Action";
    case Sort::Permission: return "Permission";
    case Sort::Number: return "Number";
  }
  return "?";
}

const char* predicate_name(Predicate p) {
  switch (p) {
    case Predicate::HasC: return "HasC";
    case Predicate::HasNS: return "HasNS";
    case Predicate::SatC: return "SatC";
    case Predicate::SatNS: return "SatNS";
    case Predicate::PreReq: return "PreReq";
    case Predicate::Do: return "Do";
  }
  return "?";
}

std::optional<Predicate> predicate_from_name(const std::string& name) {
  if (name == "HasC") return Predicate::HasC;
  if (name == "HasNS") return Predicate::HasNS;
  if (name == "SatC") return Predicate::SatC;
  if (name == "SatNS") return Predicate::SatNS;
  if (name == "PreReq") return Predicate::PreReq;
  if (name == "Do") return Predicate::Do;
  return std::nullopt;
}

const std::vector<Sort>& predicate_signature(Predicate p) {
  static const std::vector<Sort> has_c{Sort::Component, Sort::Component};
  static const std::vector<Sort> has_ns{Sort::NetworkSlice, Sort::Component};
  static const std::vector<Sort> sat_c{Sort::Component, Sort::Property};
  static const std::vector<Sort> sat_ns{Sort::NetworkSlice, Sort::Property};
  static const std::vector<Sort> pre_req{Sort::Component, Sort::Property, Sort::Component,
                                         Sort::Property};
  static const std::vector<Sort> do_sig{Sort::NetworkSlice, Sort::Resource, Sort::Action,
                                        Sort::Permission};
  switch (p) {
    case Predicate::HasC: return has_c;
    case Predicate::HasNS: return has_ns;
    case Predicate::SatC: return sat_c;
    case Predicate::SatNS: return sat_ns;
    case Predicate::PreReq: return pre_req;
    case Predicate::Do: return do_sig;
  }
  return sat_c;
}

Term make_constant(std::string name, Sort sort) {
  if (name.empty()) throw std::invalid_argument("constant name must be non-empty");
  return Term{TermKind::Constant, std::move(name), sort};
}

Term make_variable(std::string name, Sort sort) {
  if (name.empty() || !std::isupper(static_cast<unsigned char>(name[0])))
    throw std::invalid_argument("variable name must start with an uppercase letter: " + name);
  return Term{TermKind::Variable, std::move(name), sort};
}

bool Literal::ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

Literal make_literal(Predicate p, std::vector<Term> args) {
  const auto& sig = predicate_signature(p);
  if (args.size() != sig.size())
    throw std::invalid_argument(std::string(predicate_name(p)) + " expects " +
                                std::to_string(sig.size()) + " arguments, got " +
                                std::to_string(args.size()));
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i].sort != sig[i])
      throw std::invalid_argument(std::string(predicate_name(p)) + " argument " +
                                  std::to_string(i + 1) + " has sort " +
                                  sort_name(args[i].sort) + ", expected " + sort_name(sig[i]));
    if (sig[i] == Sort::Permission && !args[i].is_variable() && args[i].name != "allow" &&
        args[i].name != "deny")
      throw std::invalid_argument("permission must be allow or deny, got " + args[i].name);
  }
  return Literal{p, std::move(args)};
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Lexer {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  explicit Lexer(const std::string& t) : text(t) {}

  SourcePos where() const { return SourcePos{line, col}; }

  void bump() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_ws_and_comments() {
    while (pos < text.size()) {
      char c = text[pos];
      if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else if (c == '#') {
        while (pos < text.size() && text[pos] != '\n') bump();
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws_and_comments();
    return pos >= text.size();
  }

  char peek() const { return pos < text.size() ? text[pos] : '\0'; }

  void expect(char c, const char* what) {
    skip_ws_and_comments();
    if (pos >= text.size() || text[pos] != c)
      throw ParseError(where(), std::string("expected '") + c + "' " + what);
    bump();
  }

  bool consume(const std::string& tok) {
    skip_ws_and_comments();
    if (text.compare(pos, tok.size(), tok) == 0) {
      for (std::size_t i = 0; i < tok.size(); ++i) bump();
      return true;
    }
    return false;
  }

  std::string ident(const char* what) {
    skip_ws_and_comments();
    if (pos >= text.size() || !is_ident_start(text[pos]))
      throw ParseError(where(), std::string("expected ") + what);
    std::string out;
    while (pos < text.size() && is_ident_char(text[pos])) {
      out.push_back(text[pos]);
      bump();
    }
    return out;
  }
};

Term parse_term(Lexer& lx, Sort sort) {
  SourcePos at = lx.where();
  std::string name = lx.ident("a term");
  // "Hash_<hex>" is a digest constant despite the uppercase initial.
  if (std::isupper(static_cast<unsigned char>(name[0])) && !name.starts_with("Hash_"))
    return make_variable(name, sort);
  if (name.starts_with("hash_") || name.starts_with("Hash_")) {
    name = lowercase(name);
    if (name.size() == 5) throw ParseError(at, "hash constant has no digest: " + name);
    for (std::size_t i = 5; i < name.size(); ++i) {
      char c = name[i];
      if (!std::isxdigit(static_cast<unsigned char>(c)))
        throw ParseError(at, "hash constant contains non-hex character: " + name);
    }
  }
  if (sort == Sort::Permission && name != "allow" && name != "deny")
    throw ParseError(at, "permission must be allow or deny, got " + name);
  return make_constant(name, sort);
}

Literal parse_literal(Lexer& lx, std::unordered_map<std::string, Sort>& var_sorts) {
  SourcePos at = lx.where();
  std::string pname = lx.ident("a predicate name");
  auto pred = predicate_from_name(pname);
  if (!pred) throw ParseError(at, "unknown predicate name: " + pname);
  const auto& sig = predicate_signature(*pred);
  lx.expect('(', "after predicate name");
  std::vector<Term> args;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (i > 0) lx.expect(',', "between arguments");
    SourcePos targ = lx.where();
    Term t = parse_term(lx, sig[i]);
    if (t.is_variable()) {
      auto [it, inserted] = var_sorts.emplace(t.name, t.sort);
      if (!inserted && it->second != t.sort)
        throw ParseError(targ, "variable " + t.name + " used with sort " + sort_name(t.sort) +
                                   " but previously " + sort_name(it->second));
    }
    args.push_back(std::move(t));
  }
  lx.skip_ws_and_comments();
  if (lx.peek() == ',')
    throw ParseError(lx.where(), std::string(predicate_name(*pred)) + " takes exactly " +
                                     std::to_string(sig.size()) + " arguments");
  lx.expect(')', "after arguments");
  return Literal{*pred, std::move(args)};
}

Rule parse_one_rule(Lexer& lx) {
  std::unordered_map<std::string, Sort> var_sorts;
  SourcePos at = lx.where();
  Literal head = parse_literal(lx, var_sorts);
  std::vector<Literal> body;
  if (lx.consume("<-")) {
    body.push_back(parse_literal(lx, var_sorts));
    while (lx.consume("&")) body.push_back(parse_literal(lx, var_sorts));
  }
  lx.expect('.', "at end of rule");

  Rule r;
  r.head = std::move(head);
  r.body = std::move(body);
  if (r.body.empty() && r.head.ground()) {
    r.kind = RuleKind::Fact;
  } else if (r.head.predicate == Predicate::SatC) {
    r.kind = RuleKind::CP;
  } else if (r.head.predicate == Predicate::SatNS) {
    r.kind = RuleKind::NSP;
  } else {
    throw ParseError(at, r.body.empty()
                             ? "a fact must be ground"
                             : std::string("rule head must be SatC or SatNS, got ") +
                                   predicate_name(r.head.predicate));
  }
  return r;
}

}  // namespace

Rule parse_rule(const std::string& text) {
  Lexer lx(text);
  Rule r = parse_one_rule(lx);
  if (!lx.eof()) throw ParseError(lx.where(), "trailing input after rule");
  return r;
}

std::vector<Rule> parse_rules(const std::string& text) {
  Lexer lx(text);
  std::vector<Rule> out;
  while (!lx.eof()) out.push_back(parse_one_rule(lx));
  return out;
}

std::string to_string(const Term& t) { return t.name; }

std::string to_string(const Literal& l) {
  std::ostringstream os;
  os << predicate_name(l.predicate) << '(';
  for (std::size_t i = 0; i < l.args.size(); ++i) {
    if (i > 0) os << ',';
    os << l.args[i].name;
  }
  os << ')';
  return os.str();
}

std::string to_string(const Rule& r) {
  std::ostringstream os;
  os << to_string(r.head);
  if (!r.body.empty()) {
    os << " <- ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i > 0) os << " & ";
      os << to_string(r.body[i]);
    }
  }
  os << '.';
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation

namespace {

ValidationResult fail(std::string reason) { return ValidationResult{false, std::move(reason)}; }

bool body_has(const Rule& r, Predicate p) {
  return std::any_of(r.body.begin(), r.body.end(),
                     [p](const Literal& l) { return l.predicate == p; });
}

}  // namespace

ValidationResult validate_rule(const Rule& rule) {
  switch (rule.kind) {
    case RuleKind::Fact:
      if (!rule.body.empty()) return fail("a fact must have an empty body");
      if (!rule.head.ground()) return fail("a fact must be ground");
      return {};
    case RuleKind::CP: {
      if (rule.head.predicate != Predicate::SatC)
        return fail("CP rule head must be SatC");
      for (const auto& l : rule.body)
        if (l.predicate != Predicate::SatC && l.predicate != Predicate::HasC)
          return fail(std::string("forbidden predicate in CP body: ") +
                      predicate_name(l.predicate));
      if (!rule.body.empty() && !body_has(rule, Predicate::SatC))
        return fail("missing SatC in CP body");
      break;
    }
    case RuleKind::NSP: {
      if (rule.head.predicate != Predicate::SatNS)
        return fail("NSP rule head must be SatNS");
      for (const auto& l : rule.body)
        if (l.predicate != Predicate::SatC && l.predicate != Predicate::SatNS &&
            l.predicate != Predicate::HasNS)
          return fail(std::string("forbidden predicate in NSP body: ") +
                      predicate_name(l.predicate));
      if (body_has(rule, Predicate::SatC) && !body_has(rule, Predicate::HasNS))
        return fail("SatC in NSP body requires a HasNS literal");
      if (!rule.body.empty() && !body_has(rule, Predicate::SatC) &&
          !body_has(rule, Predicate::SatNS))
        return fail("missing SatNS in NSP body");
      break;
    }
  }
  // Head variables must be bound by the body.
  for (const auto& t : rule.head.args) {
    if (!t.is_variable()) continue;
    bool bound = false;
    for (const auto& l : rule.body)
      for (const auto& bt : l.args)
        if (bt.is_variable() && bt.name == t.name) bound = true;
    if (!bound) return fail("head variable " + t.name + " does not occur in the body");
  }
  return {};
}

Rule substitute(const Rule& rule, const Binding& binding) {
  for (const auto& [name, value] : binding)
    if (value.is_variable())
      throw std::invalid_argument("binding for " + name + " must map to a constant");
  auto apply = [&](const Literal& l) {
    Literal out = l;
    for (auto& t : out.args) {
      if (!t.is_variable()) continue;
      auto it = binding.find(t.name);
      if (it == binding.end()) continue;
      if (it->second.sort != t.sort)
        throw std::invalid_argument("binding for " + t.name + " has sort " +
                                    sort_name(it->second.sort) + ", expected " +
                                    sort_name(t.sort));
      t = it->second;
    }
    return out;
  };
  Rule out;
  out.head = apply(rule.head);
  out.kind = rule.kind;
  out.body.reserve(rule.body.size());
  for (const auto& l : rule.body) out.body.push_back(apply(l));
  return out;
}

namespace {

// Rewrites variables to canonical names in first-occurrence order.
Rule canonical_renaming(const Rule& r) {
  std::unordered_map<std::string, std::string> names;
  auto canon = [&](Literal l) {
    for (auto& t : l.args) {
      if (!t.is_variable()) continue;
      auto [it, inserted] = names.emplace(t.name, "V" + std::to_string(names.size()));
      t.name = it->second;
    }
    return l;
  };
  Rule out;
  out.kind = r.kind;
  out.head = canon(r.head);
  for (const auto& l : r.body) out.body.push_back(canon(l));
  return out;
}

}  // namespace

bool equal_up_to_renaming(const Rule& a, const Rule& b) {
  return canonical_renaming(a) == canonical_renaming(b);
}

void RuleBase::add(Rule rule) {
  auto v = validate_rule(rule);
  if (!v.ok) throw std::invalid_argument("invalid rule " + to_string(rule) + ": " + v.reason);
  for (const auto& existing : rules_)
    if (equal_up_to_renaming(existing, rule))
      throw std::invalid_argument("duplicate rule: " + to_string(rule));
  rules_.push_back(std::move(rule));
}

}  // namespace tmano::lopat
