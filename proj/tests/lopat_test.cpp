#include <random>
#include <set>

#include "doctest.h"
#include "generators.hpp"
#include "tmano/lopat.hpp"

using namespace tmano::lopat;

namespace {

Rule parsed(const std::string& text) {
  Rule rule = parse_rule(text);
  auto v = validate_rule(rule);
  CAPTURE(text);
  CAPTURE(v.reason);
  REQUIRE(v.ok);
  return rule;
}

}  // namespace

TEST_CASE("predicate signatures are fixed by the language") {
  CHECK(predicate_signature(Predicate::HasC).size() == 2);
  CHECK(predicate_signature(Predicate::HasNS).size() == 2);
  CHECK(predicate_signature(Predicate::SatC).size() == 2);
  CHECK(predicate_signature(Predicate::SatNS).size() == 2);
  CHECK(predicate_signature(Predicate::PreReq).size() == 4);
  CHECK(predicate_signature(Predicate::Do).size() == 4);
  CHECK(predicate_signature(Predicate::SatNS)[0] == Sort::NetworkSlice);
  CHECK(predicate_signature(Predicate::SatC)[0] == Sort::Component);
  CHECK(predicate_signature(Predicate::Do)[3] == Sort::Permission);
}

TEST_CASE("make_literal enforces arity and sorts") {
  CHECK_THROWS_AS(make_literal(Predicate::SatC, {make_constant("c1", Sort::Component)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_literal(Predicate::SatC, {make_constant("p1", Sort::Property),
                                                 make_constant("c1", Sort::Component)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      make_literal(Predicate::Do,
                   {make_constant("ns1", Sort::NetworkSlice), make_constant("r1", Sort::Resource),
                    make_constant("read", Sort::Action), make_constant("maybe", Sort::Permission)}),
      std::invalid_argument);
  auto ok = make_literal(Predicate::Do, {make_constant("ns1", Sort::NetworkSlice),
                                         make_constant("r1", Sort::Resource),
                                         make_constant("read", Sort::Action),
                                         make_constant("allow", Sort::Permission)});
  CHECK(ok.ground());
}

TEST_CASE("the documented component-property rule forms parse and validate") {
  // Abstraction of one property type to another.
  Rule a = parsed("SatC(c1,p1) <- SatC(c1,p2).");
  CHECK(a.kind == RuleKind::CP);
  CHECK(a.body.size() == 1);

  // Hash plus absence-of-malware evidence abstracted to a trust property.
  Rule b = parsed(
      "SatC(c1,trusted_true) <- "
      "SatC(c1,hash_e2c182bbb85c2e3a5fcae1936c5900cf91dd7743) & SatC(c1,malware_false).");
  CHECK(b.kind == RuleKind::CP);
  CHECK(b.body.size() == 2);
  CHECK(b.body[0].args[1].name == "hash_e2c182bbb85c2e3a5fcae1936c5900cf91dd7743");

  // Property inherited from a sub-component.
  Rule c = parsed("SatC(c1,p1) <- SatC(c2,p2) & HasC(c1,c2).");
  CHECK(c.kind == RuleKind::CP);
}

TEST_CASE("the documented slice-property rule forms parse and validate") {
  Rule a = parsed("SatNS(ns1,p1) <- SatNS(ns1,p2).");
  CHECK(a.kind == RuleKind::NSP);

  Rule b = parsed("SatNS(ns1,p1) <- SatC(c2,p2) & HasNS(ns1,c2).");
  CHECK(b.kind == RuleKind::NSP);

  Rule c = parsed("SatNS(ns1,p1) <- SatC(c2,p2) & HasNS(ns1,c2) & SatNS(ns1,p3).");
  CHECK(c.kind == RuleKind::NSP);
  CHECK(c.body.size() == 3);
}

TEST_CASE("fact rules are ground with empty bodies") {
  Rule f = parsed("SatC(c1,p1).");
  CHECK(f.kind == RuleKind::Fact);
  CHECK(f.body.empty());
  CHECK(f.head.ground());

  Rule pre = parsed("PreReq(c1,p1,c2,p2).");
  CHECK(pre.kind == RuleKind::Fact);

  Rule with_var = parse_rule("SatC(X,p1).");
  CHECK_FALSE(validate_rule(with_var).ok);
}

TEST_CASE("well-formedness clauses are enforced") {
  // CP body without any SatC literal.
  Rule r = parse_rule("SatC(c1,p1) <- HasC(c1,c2).");
  CHECK_FALSE(validate_rule(r).ok);

  // NSP body with SatC but no HasNS.
  r = parse_rule("SatNS(ns1,p1) <- SatC(c1,p2).");
  CHECK_FALSE(validate_rule(r).ok);

  // NSP body without SatC needs at least one SatNS.
  r = parse_rule("SatNS(ns1,p1) <- HasNS(ns1,c1).");
  CHECK_FALSE(validate_rule(r).ok);

  // Head variable that never occurs in the body.
  r = parse_rule("SatC(X,p1) <- SatC(c1,p2).");
  CHECK_FALSE(validate_rule(r).ok);

  // Forbidden body predicate for a CP rule.
  r = parse_rule("SatC(c1,p1) <- SatC(c1,p2) & HasNS(ns1,c1).");
  CHECK_FALSE(validate_rule(r).ok);
}

TEST_CASE("variables start uppercase and keep one sort per rule") {
  Rule r = parsed("SatC(X,p1) <- SatC(X,p2).");
  CHECK(r.head.args[0].is_variable());
  CHECK(r.head.args[0].sort == Sort::Component);

  // X would be a Component in SatC but a NetworkSlice in SatNS.
  CHECK_THROWS_AS(parse_rule("SatNS(X,p1) <- SatC(X,p2) & HasNS(X,c1)."), ParseError);
}

TEST_CASE("hash constants are validated and normalised to lowercase") {
  Rule r = parsed("SatC(c1,Hash_E2C182BBB85C2E3A5FCAE1936C5900CF91DD7743) <- SatC(c1,p1).");
  CHECK(r.head.args[1].name == "hash_e2c182bbb85c2e3a5fcae1936c5900cf91dd7743");

  CHECK_THROWS_AS(parse_rule("SatC(c1,hash_xyz) <- SatC(c1,p1)."), ParseError);
  CHECK_THROWS_AS(parse_rule("SatC(c1,hash_) <- SatC(c1,p1)."), ParseError);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_rules("SatC(c1,p1) <- SatC(c1,p2).\nSatC(c1 p2).\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos().line == 2);
  }
  CHECK_THROWS_AS(parse_rule("SatC(c1,p1)"), ParseError);        // missing period
  CHECK_THROWS_AS(parse_rule("Unknown(c1,p1)."), ParseError);    // unknown predicate
  CHECK_THROWS_AS(parse_rule("SatC(c1,p1,p2)."), ParseError);    // arity
}

TEST_CASE("documents support comments and many rules") {
  auto rules = parse_rules(
      "# component rules\n"
      "SatC(c1,p1) <- SatC(c1,p2).\n"
      "\n"
      "SatC(c1,p1).  # trailing comment\n");
  CHECK(rules.size() == 2);
}

TEST_CASE("substitute replaces bound variables and rejects sort mismatches") {
  Rule r = parse_rule("SatC(X,p1) <- SatC(X,p2).");
  Binding binding{{"X", make_constant("c7", Sort::Component)}};
  Rule ground = substitute(r, binding);
  CHECK(ground.head.ground());
  CHECK(ground.head.args[0].name == "c7");

  Binding bad{{"X", make_constant("ns1", Sort::NetworkSlice)}};
  CHECK_THROWS_AS(substitute(r, bad), std::invalid_argument);
}

TEST_CASE("rule base rejects duplicates up to variable renaming") {
  RuleBase rules;
  rules.add(parse_rule("SatC(X,p1) <- SatC(X,p2)."));
  CHECK_THROWS_AS(rules.add(parse_rule("SatC(Y,p1) <- SatC(Y,p2).")), std::invalid_argument);
  rules.add(parse_rule("SatC(X,p1) <- SatC(X,p3)."));  // different body constant
  CHECK(rules.size() == 2);

  CHECK(equal_up_to_renaming(parse_rule("SatNS(S,p1) <- SatNS(S,p2)."),
                             parse_rule("SatNS(T,p1) <- SatNS(T,p2).")));
  CHECK_FALSE(equal_up_to_renaming(parse_rule("SatNS(S,p1) <- SatNS(S,p2)."),
                                   parse_rule("SatNS(S,p2) <- SatNS(S,p1).")));
}

TEST_CASE("invalid rules cannot enter a rule base") {
  RuleBase rules;
  CHECK_THROWS_AS(rules.add(parse_rule("SatC(c1,p1) <- HasC(c1,c2).")), std::invalid_argument);
  CHECK(rules.size() == 0);
}

// Round-trip oracle: serializing a randomly generated valid rule and parsing
// it back must reproduce the rule exactly.
TEST_CASE("random valid rules survive a serialize/parse round trip") {
  std::mt19937 rng(20260826);
  for (int i = 0; i < 500; ++i) {
    auto universe = testgen::make_universe(rng);
    Rule rule = testgen::random_rule(rng, universe);
    REQUIRE(validate_rule(rule).ok);
    std::string text = to_string(rule);
    CAPTURE(text);
    Rule back = parse_rule(text);
    CHECK(back == rule);
    CHECK(to_string(back) == text);
  }
}
