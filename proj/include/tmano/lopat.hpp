// LOPAT: a logic language for property-attestation trust.
//
// Sorts, terms, literals and the two rule forms (component-property and
// slice-property), with a textual syntax, parser and well-formedness
// validation.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmano::lopat {

enum class Sort : std::uint8_t {
  NetworkSlice,
  Component,
  Property,
  Target,
  Resource,
  Action,
  Permission,
  Number,
};

const char* sort_name(Sort s);

enum class Predicate : std::uint8_t { HasC, HasNS, SatC, SatNS, PreReq, Do };

const char* predicate_name(Predicate p);
std::optional<Predicate> predicate_from_name(const std::string& name);

// Argument sorts per predicate, fixed by the language.
const std::vector<Sort>& predicate_signature(Predicate p);

enum class TermKind : std::uint8_t { Constant, Variable };

struct Term {
  TermKind kind = TermKind::Constant;
  std::string name;
  Sort sort = Sort::Component;

  bool is_variable() const { return kind == TermKind::Variable; }
  bool operator==(const Term&) const = default;
  auto operator<=>(const Term&) const = default;
};

Term make_constant(std::string name, Sort sort);
Term make_variable(std::string name, Sort sort);

struct Literal {
  Predicate predicate = Predicate::SatC;
  std::vector<Term> args;

  bool ground() const;
  bool operator==(const Literal&) const = default;
  auto operator<=>(const Literal&) const = default;
};

// Builds a literal, assigning argument sorts from the predicate signature.
// Throws std::invalid_argument on arity mismatch or a variable/constant whose
// declared sort conflicts with its position.
Literal make_literal(Predicate p, std::vector<Term> args);

enum class RuleKind : std::uint8_t { CP, NSP, Fact };

struct Rule {
  Literal head;
  std::vector<Literal> body;
  RuleKind kind = RuleKind::Fact;

  bool operator==(const Rule&) const = default;
};

struct SourcePos {
  int line = 0;
  int column = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourcePos pos, const std::string& what)
      : std::runtime_error("line " + std::to_string(pos.line) + ", column " +
                           std::to_string(pos.column) + ": " + what),
        pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

// Parses a single rule: `Head <- L1 & L2 & ... & Ln.` or `Head.` for facts.
// Variables begin with an uppercase letter; constants do not. Hash-valued
// property constants (`hash_<hex>`) are normalised to lowercase.
Rule parse_rule(const std::string& text);

// Parses a `.lopat` document: one rule per statement, `#` line comments.
std::vector<Rule> parse_rules(const std::string& text);

std::string to_string(const Term& t);
std::string to_string(const Literal& l);
std::string to_string(const Rule& r);

struct ValidationResult {
  bool ok = true;
  std::string reason;  // names the violated clause when !ok
};

// Checks the rule-form invariants:
//   CP:  head SatC; body only SatC/HasC; non-empty body needs >=1 SatC.
//   NSP: head SatNS; body only SatC/SatNS/HasNS; a body SatC needs >=1 HasNS;
//        a non-empty body without SatC needs >=1 SatNS.
//   Fact: empty body, ground head.
// Also rejects head variables that never occur in the body.
ValidationResult validate_rule(const Rule& rule);

using Binding = std::map<std::string, Term>;  // variable name -> constant

// Replaces bound variables by constants; unbound variables remain.
// Throws std::invalid_argument when a binding's constant sort differs from
// the variable's sort or maps to a non-constant.
Rule substitute(const Rule& rule, const Binding& binding);

class RuleBase {
 public:
  RuleBase() = default;
  explicit RuleBase(std::string realm) : realm_(std::move(realm)) {}

  // Validates and appends. Rejects duplicates (equal up to variable
  // renaming). Throws std::invalid_argument on either failure.
  void add(Rule rule);

  const std::vector<Rule>& rules() const { return rules_; }
  const std::string& realm() const { return realm_; }
  std::size_t size() const { return rules_.size(); }

 private:
  std::vector<Rule> rules_;
  std::string realm_;
};

// True when the two rules are equal modulo a consistent renaming of
// variables.
bool equal_up_to_renaming(const Rule& a, const Rule& b);

}  // namespace tmano::lopat
