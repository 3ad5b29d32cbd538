// Fact derivation from credentials and trust-query resolution: backward
// chaining over CP/NSP rules with prerequisite checks, cycle detection and a
// step budget, plus a forward-chaining fixpoint used as an independent
// reference for testing.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmano/credentials.hpp"
#include "tmano/lopat.hpp"

namespace tmano::resolution {

enum class Provenance { DigestReport, PropertyCertificate, Asserted };

const char* provenance_name(Provenance p);

struct Fact {
  lopat::Literal literal;
  Provenance provenance = Provenance::Asserted;
};

class FactBase {
 public:
  // Idempotent; returns false when the literal was already present.
  // Throws std::invalid_argument for non-ground literals.
  bool insert(lopat::Literal literal, Provenance provenance);

  bool contains(const lopat::Literal& literal) const;
  std::optional<Provenance> provenance_of(const lopat::Literal& literal) const;

  // Ground facts with the given predicate, in insertion order.
  std::vector<lopat::Literal> by_predicate(lopat::Predicate p) const;
  // Facts with the given predicate whose first argument has this name.
  std::vector<lopat::Literal> matching(lopat::Predicate p, const std::string& first_arg) const;

  const std::vector<Fact>& all() const { return facts_; }
  std::size_t size() const { return facts_.size(); }

  // All constant names of the given sort appearing in any fact argument.
  std::set<std::string> constants(lopat::Sort sort) const;

 private:
  std::vector<Fact> facts_;
  std::set<lopat::Literal> index_;
};

struct Query {
  lopat::Literal request;                // the Do literal
  std::vector<lopat::Literal> goals;     // SatNS trust conditions

  // Throws std::invalid_argument unless request is a ground Do literal and
  // goals is a non-empty list of ground SatNS literals.
  static Query make(lopat::Literal request, std::vector<lopat::Literal> goals);
};

enum class StepKind { Header, FactMatch, RuleExpansion, PrereqCheck, Failure };

struct TraceNode {
  lopat::Literal goal;
  StepKind kind = StepKind::Failure;
  bool satisfied = false;
  std::string detail;
  std::vector<TraceNode> children;
};

// One node per line, indentation = depth.
std::string export_trace(const TraceNode& root);

struct Limits {
  int max_depth = 64;
  long max_steps = 100000;
};

struct ResolveResult {
  bool satisfied = false;
  TraceNode trace;
  // "allow"/"deny" from the query's Do literal, set when satisfied.
  std::string permission;
};

// Trust derivation: resolves every goal SatNS of the query. Direct
// certificate-fact derivation is gated on PreReq facts; otherwise NSP rules
// whose heads match are expanded (SatNS recursively, HasNS against facts,
// SatC via cp_resolve). Budget exhaustion and cycles fail the affected goal
// with reasons "budget" and "cycle".
ResolveResult resolve(const Query& query, const FactBase& facts, const lopat::RuleBase& rules,
                      Limits limits = {});

struct GoalResult {
  bool satisfied = false;
  TraceNode trace;
};

// CP resolution for a single ground SatC goal.
GoalResult cp_resolve(const lopat::Literal& goal, const FactBase& facts,
                      const lopat::RuleBase& rules, Limits limits = {});

// Single ground SatNS or SatC goal through the same machinery as resolve.
GoalResult resolve_goal(const lopat::Literal& goal, const FactBase& facts,
                        const lopat::RuleBase& rules, Limits limits = {});

// False iff some PreReq((subject),(c2,p2)) fact exists whose prerequisite
// SatC(c2,p2) is absent from the fact base. Fact lookup only.
bool check_prereq(const std::string& subject, const std::string& property,
                  const FactBase& facts);

// Least fixpoint of the CP/NSP rules over the facts, with the same PreReq
// gating as resolve applied to the base Sat* facts. Rules must be
// range-restricted (validate_rule guarantees head variables occur in the
// body); body-only variables are enumerated over the constant universe.
FactBase forward_close(const FactBase& facts, const lopat::RuleBase& rules);

// -- Fact derivation from credentials ----------------------------------------

// HasNS(slice, c) for every top-level measured component, HasC(parent, c)
// for every sub-component, SatC(c, hash_<digest>) for every measurement.
FactBase derive_facts_from_digest_report(const credentials::DigestReport& report);

struct CertDerivation {
  FactBase facts;
  std::vector<std::string> skipped;  // per-certificate reasons
};

// Each attested property becomes a ground SatC fact for the certificate's
// VNF (vnfProperty section) or its service VMs (serviceVMProperty section),
// plus SatC hash facts from the static section. Certificates failing
// signature verification or the validity window are skipped with a reason;
// the rest are processed.
CertDerivation derive_facts_from_property_certs(
    const std::vector<credentials::PropertyCertificate>& certs,
    std::optional<std::int64_t> now = std::nullopt);

// Subject identifiers are normalised to lowercase constants.
std::string subject_constant(const std::string& id);

}  // namespace tmano::resolution
