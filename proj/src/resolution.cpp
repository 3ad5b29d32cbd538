#include "tmano/resolution.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace tmano::resolution {

using lopat::Literal;
using lopat::Predicate;
using lopat::Rule;
using lopat::RuleBase;
using lopat::RuleKind;
using lopat::Sort;
using lopat::Term;

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::DigestReport: return "digest_report";
    case Provenance::PropertyCertificate: return "property_certificate";
    case Provenance::Asserted: return "asserted";
  }
  return "?";
}

bool FactBase::insert(Literal literal, Provenance provenance) {
  if (!literal.ground())
    throw std::invalid_argument("facts must be ground: " + lopat::to_string(literal));
  if (!index_.insert(literal).second) return false;
  facts_.push_back(Fact{std::move(literal), provenance});
  return true;
}

bool FactBase::contains(const Literal& literal) const { return index_.count(literal) > 0; }

std::optional<Provenance> FactBase::provenance_of(const Literal& literal) const {
  for (const auto& f : facts_)
    if (f.literal == literal) return f.provenance;
  return std::nullopt;
}

std::vector<Literal> FactBase::by_predicate(Predicate p) const {
  std::vector<Literal> out;
  for (const auto& f : facts_)
    if (f.literal.predicate == p) out.push_back(f.literal);
  return out;
}

std::vector<Literal> FactBase::matching(Predicate p, const std::string& first_arg) const {
  std::vector<Literal> out;
  for (const auto& f : facts_)
    if (f.literal.predicate == p && f.literal.args[0].name == first_arg)
      out.push_back(f.literal);
  return out;
}

std::set<std::string> FactBase::constants(Sort sort) const {
  std::set<std::string> out;
  for (const auto& f : facts_)
    for (const auto& t : f.literal.args)
      if (t.sort == sort) out.insert(t.name);
  return out;
}

Query Query::make(Literal request, std::vector<Literal> goals) {
  if (request.predicate != Predicate::Do || !request.ground())
    throw std::invalid_argument("query request must be a ground Do literal");
  if (goals.empty()) throw std::invalid_argument("query goals must be non-empty");
  for (const auto& g : goals)
    if (g.predicate != Predicate::SatNS || !g.ground())
      throw std::invalid_argument("query goals must be ground SatNS literals: " +
                                  lopat::to_string(g));
  return Query{std::move(request), std::move(goals)};
}

bool check_prereq(const std::string& subject, const std::string& property,
                  const FactBase& facts) {
  for (const auto& prereq : facts.by_predicate(Predicate::PreReq)) {
    if (prereq.args[0].name != subject || prereq.args[1].name != property) continue;
    Literal needed = lopat::make_literal(
        Predicate::SatC, {lopat::make_constant(prereq.args[2].name, Sort::Component),
                          lopat::make_constant(prereq.args[3].name, Sort::Property)});
    if (!facts.contains(needed)) return false;
  }
  return true;
}

namespace {

using Universe = std::map<Sort, std::set<std::string>>;

Universe collect_universe(const FactBase& facts, const RuleBase& rules) {
  Universe u;
  for (const auto& f : facts.all())
    for (const auto& t : f.literal.args) u[t.sort].insert(t.name);
  for (const auto& r : rules.rules()) {
    for (const auto& t : r.head.args)
      if (!t.is_variable()) u[t.sort].insert(t.name);
    for (const auto& l : r.body)
      for (const auto& t : l.args)
        if (!t.is_variable()) u[t.sort].insert(t.name);
  }
  return u;
}

bool is_sat(Predicate p) { return p == Predicate::SatC || p == Predicate::SatNS; }

struct Solver {
  const FactBase& facts;
  const RuleBase& rules;
  Limits limits;
  Universe universe;
  long steps = 0;
  bool budget_hit = false;
  std::set<Literal> in_progress;

  Solver(const FactBase& f, const RuleBase& r, Limits l)
      : facts(f), rules(r), limits(l), universe(collect_universe(f, r)) {}

  bool charge() {
    if (++steps > limits.max_steps) {
      budget_hit = true;
      return false;
    }
    return true;
  }

  static TraceNode node(const Literal& goal, StepKind kind, bool satisfied,
                        std::string detail) {
    return TraceNode{goal, kind, satisfied, std::move(detail), {}};
  }

  // Matches a ground goal against a possibly-variable rule head.
  static bool match_head(const Literal& goal, const Literal& head, lopat::Binding& binding) {
    for (std::size_t i = 0; i < goal.args.size(); ++i) {
      const Term& h = head.args[i];
      const Term& g = goal.args[i];
      if (!h.is_variable()) {
        if (h.name != g.name) return false;
        continue;
      }
      auto it = binding.find(h.name);
      if (it == binding.end()) {
        binding.emplace(h.name, g);
      } else if (it->second.name != g.name) {
        return false;
      }
    }
    return true;
  }

  static Literal apply(const Literal& l, const lopat::Binding& binding) {
    Literal out = l;
    for (auto& t : out.args) {
      if (!t.is_variable()) continue;
      auto it = binding.find(t.name);
      if (it != binding.end()) t = it->second;
    }
    return out;
  }

  bool prereq_ok(const Literal& goal, TraceNode& parent) {
    bool ok = check_prereq(goal.args[0].name, goal.args[1].name, facts);
    parent.children.push_back(node(goal, StepKind::PrereqCheck, ok,
                                   ok ? "prerequisites satisfied" : "prerequisite missing"));
    return ok;
  }

  // Ground SatC/SatNS goal.
  bool solve(const Literal& goal, int depth, std::vector<TraceNode>& out) {
    if (!charge() || depth > limits.max_depth) {
      budget_hit = true;
      out.push_back(node(goal, StepKind::Failure, false, "budget"));
      return false;
    }
    if (in_progress.count(goal)) {
      out.push_back(node(goal, StepKind::Failure, false, "cycle"));
      return false;
    }

    // Direct derivation from credential facts, gated on prerequisites.
    if (facts.contains(goal)) {
      TraceNode n = node(goal, StepKind::FactMatch, false, "");
      if (auto prov = facts.provenance_of(goal)) n.detail = provenance_name(*prov);
      if (prereq_ok(goal, n)) {
        n.satisfied = true;
        out.push_back(std::move(n));
        return true;
      }
      out.push_back(std::move(n));
    }

    in_progress.insert(goal);
    bool found = false;
    for (const auto& rule : rules.rules()) {
      if (rule.head.predicate != goal.predicate) continue;
      if (goal.predicate == Predicate::SatC &&
          !(rule.kind == RuleKind::CP || rule.kind == RuleKind::Fact))
        continue;
      if (goal.predicate == Predicate::SatNS &&
          !(rule.kind == RuleKind::NSP || rule.kind == RuleKind::Fact))
        continue;
      lopat::Binding binding;
      if (!match_head(goal, rule.head, binding)) continue;
      TraceNode n = node(goal, StepKind::RuleExpansion, false, lopat::to_string(rule));
      if (solve_body(ordered_body(rule.body), 0, binding, depth + 1, n.children)) {
        n.satisfied = true;
        out.push_back(std::move(n));
        found = true;
        break;
      }
      out.push_back(std::move(n));
    }
    in_progress.erase(goal);
    if (!found)
      out.push_back(
          node(goal, StepKind::Failure, false, budget_hit ? "budget" : "no derivation"));
    return found;
  }

  // Has* literals first so they bind variables from facts before Sat*
  // subgoals are attempted.
  static std::vector<Literal> ordered_body(const std::vector<Literal>& body) {
    std::vector<Literal> out;
    for (const auto& l : body)
      if (!is_sat(l.predicate)) out.push_back(l);
    for (const auto& l : body)
      if (is_sat(l.predicate)) out.push_back(l);
    return out;
  }

  bool solve_body(const std::vector<Literal>& body, std::size_t idx, lopat::Binding binding,
                  int depth, std::vector<TraceNode>& out) {
    if (idx == body.size()) return true;
    if (!charge()) {
      out.push_back(node(body[idx], StepKind::Failure, false, "budget"));
      return false;
    }
    Literal lit = apply(body[idx], binding);

    if (lit.ground()) {
      if (is_sat(lit.predicate)) {
        if (!solve(lit, depth, out)) return false;
      } else {
        bool present = facts.contains(lit);
        out.push_back(node(lit, present ? StepKind::FactMatch : StepKind::Failure, present,
                           present ? "fact" : "no matching fact"));
        if (!present) return false;
      }
      return solve_body(body, idx + 1, binding, depth, out);
    }

    if (!is_sat(lit.predicate)) {
      // Enumerate matching facts to bind the remaining variables.
      for (const auto& fact : facts.by_predicate(lit.predicate)) {
        lopat::Binding extended = binding;
        if (!match_fact(lit, fact, extended)) continue;
        std::vector<TraceNode> sub;
        sub.push_back(node(fact, StepKind::FactMatch, true, "fact"));
        if (solve_body(body, idx + 1, extended, depth, sub)) {
          out.insert(out.end(), sub.begin(), sub.end());
          return true;
        }
      }
      out.push_back(node(lit, StepKind::Failure, false, "no matching fact"));
      return false;
    }

    // Sat* literal with unbound variables: enumerate candidate constants of
    // the variable's sort from the universe.
    std::size_t var_pos = 0;
    while (var_pos < lit.args.size() && !lit.args[var_pos].is_variable()) ++var_pos;
    const Term& var = lit.args[var_pos];
    for (const auto& name : universe[var.sort]) {
      lopat::Binding extended = binding;
      extended.emplace(var.name, lopat::make_constant(name, var.sort));
      std::vector<TraceNode> sub;
      if (solve_body(body, idx, extended, depth, sub)) {
        out.insert(out.end(), sub.begin(), sub.end());
        return true;
      }
      if (budget_hit) {
        out.insert(out.end(), sub.begin(), sub.end());
        return false;
      }
    }
    out.push_back(node(lit, StepKind::Failure, false, "no candidate binding"));
    return false;
  }

  // Pattern literal (may contain variables) against a ground fact.
  static bool match_fact(const Literal& pattern, const Literal& fact, lopat::Binding& binding) {
    for (std::size_t i = 0; i < pattern.args.size(); ++i) {
      const Term& p = pattern.args[i];
      if (!p.is_variable()) {
        if (p.name != fact.args[i].name) return false;
        continue;
      }
      auto it = binding.find(p.name);
      if (it == binding.end()) {
        binding.emplace(p.name, fact.args[i]);
      } else if (it->second.name != fact.args[i].name) {
        return false;
      }
    }
    return true;
  }
};

}  // namespace

GoalResult resolve_goal(const Literal& goal, const FactBase& facts, const RuleBase& rules,
                        Limits limits) {
  if (!goal.ground()) throw std::invalid_argument("goal must be ground");
  if (!is_sat(goal.predicate))
    throw std::invalid_argument("goal must be a SatC or SatNS literal");
  Solver solver(facts, rules, limits);
  GoalResult result;
  result.trace = TraceNode{goal, StepKind::Header, false, "", {}};
  result.satisfied = solver.solve(goal, 0, result.trace.children);
  result.trace.satisfied = result.satisfied;
  if (solver.budget_hit) result.trace.detail = "budget";
  return result;
}

GoalResult cp_resolve(const Literal& goal, const FactBase& facts, const RuleBase& rules,
                      Limits limits) {
  if (goal.predicate != Predicate::SatC)
    throw std::invalid_argument("cp_resolve expects a SatC goal");
  return resolve_goal(goal, facts, rules, limits);
}

ResolveResult resolve(const Query& query, const FactBase& facts, const RuleBase& rules,
                      Limits limits) {
  if (limits.max_steps <= 0 || limits.max_depth <= 0)
    throw std::invalid_argument("resolution budget must be positive");
  Solver solver(facts, rules, limits);

  ResolveResult result;
  result.trace = TraceNode{query.request, StepKind::Header, false,
                           "goal list attached to Do request; permission of Do returned on "
                           "success",
                           {}};
  // Query constants outside the vocabulary are reported, not rejected.
  {
    std::vector<std::string> unknown;
    auto known = [&](const Term& t) {
      auto it = solver.universe.find(t.sort);
      return it != solver.universe.end() && it->second.count(t.name) > 0;
    };
    for (const auto& g : query.goals)
      for (const auto& t : g.args)
        if (!known(t)) unknown.push_back(t.name);
    if (!unknown.empty()) {
      result.trace.detail += "; unknown constants:";
      for (const auto& n : unknown) result.trace.detail += " " + n;
    }
  }

  bool all = true;
  for (const auto& goal : query.goals) {
    if (!solver.solve(goal, 0, result.trace.children)) all = false;
  }
  result.satisfied = all;
  result.trace.satisfied = all;
  if (all) result.permission = query.request.args[3].name;
  return result;
}

std::string export_trace(const TraceNode& root) {
  std::ostringstream os;
  auto emit = [&](auto&& self, const TraceNode& n, int depth) -> void {
    for (int i = 0; i < depth; ++i) os << "  ";
    const char* kind = nullptr;
    switch (n.kind) {
      case StepKind::Header: kind = "query"; break;
      case StepKind::FactMatch: kind = "fact-match"; break;
      case StepKind::RuleExpansion: kind = "rule-expansion"; break;
      case StepKind::PrereqCheck: kind = "prereq-check"; break;
      case StepKind::Failure: kind = "failure"; break;
    }
    os << (n.satisfied ? "+ " : "- ") << kind << ' ' << lopat::to_string(n.goal);
    if (!n.detail.empty()) os << " [" << n.detail << ']';
    os << '\n';
    for (const auto& c : n.children) self(self, c, depth + 1);
  };
  emit(emit, root, 0);
  return os.str();
}

// -- Forward-chaining fixpoint ------------------------------------------------

FactBase forward_close(const FactBase& facts, const RuleBase& rules) {
  for (const auto& r : rules.rules()) {
    auto v = lopat::validate_rule(r);
    if (!v.ok)
      throw std::invalid_argument("forward_close: invalid rule " + lopat::to_string(r) + ": " +
                                  v.reason);
  }
  Universe universe = collect_universe(facts, rules);

  FactBase closed;
  for (const auto& f : facts.all()) {
    if (is_sat(f.literal.predicate) &&
        !check_prereq(f.literal.args[0].name, f.literal.args[1].name, facts))
      continue;
    closed.insert(f.literal, f.provenance);
  }
  for (const auto& r : rules.rules())
    if (r.kind == RuleKind::Fact && is_sat(r.head.predicate))
      closed.insert(r.head, Provenance::Asserted);

  // Variables of each rule, in first-occurrence order.
  auto rule_vars = [](const Rule& r) {
    std::vector<Term> vars;
    auto add = [&](const Literal& l) {
      for (const auto& t : l.args) {
        if (!t.is_variable()) continue;
        if (std::none_of(vars.begin(), vars.end(),
                         [&](const Term& v) { return v.name == t.name; }))
          vars.push_back(t);
      }
    };
    add(r.head);
    for (const auto& l : r.body) add(l);
    return vars;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : rules.rules()) {
      if (r.kind == RuleKind::Fact) continue;
      std::vector<Term> vars = rule_vars(r);
      std::vector<std::vector<std::string>> domains;
      for (const auto& v : vars) {
        auto& dom = universe[v.sort];
        domains.emplace_back(dom.begin(), dom.end());
      }
      // Enumerate the cross product of variable domains.
      std::vector<std::size_t> idx(vars.size(), 0);
      for (;;) {
        lopat::Binding binding;
        bool empty_domain = false;
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (domains[i].empty()) {
            empty_domain = true;
            break;
          }
          binding.emplace(vars[i].name,
                          lopat::make_constant(domains[i][idx[i]], vars[i].sort));
        }
        if (empty_domain && !vars.empty()) break;

        Rule ground = lopat::substitute(r, binding);
        bool body_ok = std::all_of(ground.body.begin(), ground.body.end(),
                                   [&](const Literal& l) { return closed.contains(l); });
        if (body_ok && closed.insert(ground.head, Provenance::Asserted)) changed = true;

        if (vars.empty()) break;
        std::size_t i = 0;
        while (i < idx.size() && ++idx[i] == domains[i].size()) idx[i++] = 0;
        if (i == idx.size()) break;
      }
    }
  }
  return closed;
}

// -- Fact derivation from credentials ----------------------------------------

std::string subject_constant(const std::string& id) {
  std::string out = id;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

FactBase derive_facts_from_digest_report(const credentials::DigestReport& report) {
  credentials::validate_digest_report(report);
  FactBase delta;
  std::string slice = subject_constant(report.slice_id);
  for (const auto& e : report.entries) {
    std::string comp = subject_constant(e.component);
    if (e.parent) {
      delta.insert(lopat::make_literal(
                       Predicate::HasC,
                       {lopat::make_constant(subject_constant(*e.parent), Sort::Component),
                        lopat::make_constant(comp, Sort::Component)}),
                   Provenance::DigestReport);
    } else {
      delta.insert(
          lopat::make_literal(Predicate::HasNS,
                              {lopat::make_constant(slice, Sort::NetworkSlice),
                               lopat::make_constant(comp, Sort::Component)}),
          Provenance::DigestReport);
    }
    delta.insert(lopat::make_literal(Predicate::SatC,
                                     {lopat::make_constant(comp, Sort::Component),
                                      lopat::make_constant("hash_" + e.digest, Sort::Property)}),
                 Provenance::DigestReport);
  }
  return delta;
}

namespace {

void insert_property_facts(FactBase& facts, const std::string& subject,
                           const std::vector<credentials::DynamicProperty>& props) {
  for (const auto& p : props) {
    auto add = [&](const std::string& constant) {
      facts.insert(lopat::make_literal(Predicate::SatC,
                                       {lopat::make_constant(subject, Sort::Component),
                                        lopat::make_constant(constant, Sort::Property)}),
                   Provenance::PropertyCertificate);
    };
    add(credentials::property_string_to_constant(p.text));
    // A valued property also asserts its valued form.
    if (p.value) add(credentials::property_string_to_constant(p.text, p.value));
  }
}

}  // namespace

CertDerivation derive_facts_from_property_certs(
    const std::vector<credentials::PropertyCertificate>& certs,
    std::optional<std::int64_t> now) {
  CertDerivation out;
  for (const auto& cert : certs) {
    if (cert.vnf_id.empty()) {
      out.skipped.push_back("certificate " + cert.info.id + ": unknown subject identifier");
      continue;
    }
    if (!credentials::verify_signature(cert)) {
      out.skipped.push_back("certificate " + cert.info.id + ": signature verification failed");
      continue;
    }
    if (now && cert.info.issued_at) {
      std::int64_t expiry =
          *cert.info.issued_at + credentials::parse_validity_seconds(cert.info.validity);
      if (*now > expiry) {
        out.skipped.push_back("certificate " + cert.info.id + ": expired");
        continue;
      }
    }
    std::string vnf = subject_constant(cert.vnf_id);
    out.facts.insert(
        lopat::make_literal(Predicate::SatC,
                            {lopat::make_constant(vnf, Sort::Component),
                             lopat::make_constant("hash_" + cert.vnf_hash.value,
                                                  Sort::Property)}),
        Provenance::PropertyCertificate);
    insert_property_facts(out.facts, vnf, cert.vnf_properties);
    for (const auto& svm : cert.vnf_map) {
      if (svm.vmid.empty()) continue;
      std::string vm = subject_constant(svm.vmid);
      out.facts.insert(
          lopat::make_literal(Predicate::SatC,
                              {lopat::make_constant(vm, Sort::Component),
                               lopat::make_constant("hash_" + cert.service_vm_hash.value,
                                                    Sort::Property)}),
          Provenance::PropertyCertificate);
      insert_property_facts(out.facts, vm, cert.service_vm_properties);
    }
  }
  return out;
}

}  // namespace tmano::resolution
