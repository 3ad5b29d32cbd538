// Acceptance gate: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Each check is built on an independent oracle or on
// published figures rather than on the engine's own output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "tmano/authority.hpp"
#include "tmano/credentials.hpp"
#include "tmano/crypto.hpp"
#include "tmano/lopat.hpp"
#include "tmano/nfvsim.hpp"
#include "tmano/policyrepo.hpp"
#include "tmano/resolution.hpp"
#include "tmano/trustmgr.hpp"

using namespace tmano;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - " << detail
            << std::endl;
  if (!pass) ++failures;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// -- 1: backward resolution vs forward fixpoint over random instances --------

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(20260826);
  long instances = 0, goals_checked = 0, disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    auto universe = testgen::make_universe(rng);
    auto facts = testgen::random_facts(rng, universe);
    auto rules = testgen::random_rules(rng, universe);
    auto closure = resolution::forward_close(facts, rules);
    for (const auto& goal : testgen::all_sat_goals(universe)) {
      bool backward = resolution::resolve_goal(goal, facts, rules).satisfied;
      bool forward = closure.contains(goal);
      if (backward != forward) ++disagreements;
      ++goals_checked;
    }
    ++instances;
  }
  double elapsed = seconds_since(t0);
  std::ostringstream detail;
  detail << instances << " instances, " << goals_checked << " goals, " << disagreements
         << " disagreements, " << elapsed << "s";
  report(1, disagreements == 0 && instances >= 1000 && elapsed < 60.0, detail.str());
}

// -- 2: the documented example rules and the trust derivation ----------------

void criterion_2() {
  const std::vector<std::string> examples = {
      "SatC(c1, p1) <- SatC(c1, p2).",
      "SatC(c1, trusted_true) <- "
      "SatC(c1, hash_e2c182bbb85c2e3a5fcae1936c5900cf91dd7743) & SatC(c1, malware_false).",
      "SatC(c1, p1) <- SatC(c2, p2) & HasC(c1, c2).",
      "SatNS(ns1, p1) <- SatNS(ns1, p2).",
      "SatNS(ns1, p1) <- SatC(c2, p2) & HasNS(ns1, c2).",
      "SatNS(ns1, p1) <- SatC(c2, p2) & HasNS(ns1, c2) & SatNS(ns1, p3).",
  };
  int parsed_ok = 0;
  lopat::RuleBase rules;
  for (const auto& text : examples) {
    try {
      auto rule = lopat::parse_rule(text);
      if (lopat::validate_rule(rule).ok) {
        ++parsed_ok;
        rules.add(rule);
      }
    } catch (const std::exception&) {
    }
  }

  auto hash_fact = testgen::sat_c("c1", "hash_e2c182bbb85c2e3a5fcae1936c5900cf91dd7743");
  auto malware_fact = testgen::sat_c("c1", "malware_false");
  auto goal = testgen::sat_c("c1", "trusted_true");

  resolution::FactBase both;
  both.insert(hash_fact, resolution::Provenance::PropertyCertificate);
  both.insert(malware_fact, resolution::Provenance::PropertyCertificate);
  bool derives = resolution::resolve_goal(goal, both, rules).satisfied;

  bool fails_without_either = true;
  for (const auto& keep : {hash_fact, malware_fact}) {
    resolution::FactBase one;
    one.insert(keep, resolution::Provenance::PropertyCertificate);
    if (resolution::resolve_goal(goal, one, rules).satisfied) fails_without_either = false;
  }

  std::ostringstream detail;
  detail << parsed_ok << "/6 rules validated, derivation " << (derives ? "holds" : "missing")
         << ", drop-one " << (fails_without_either ? "fails as required" : "still derives");
  report(2, parsed_ok == 6 && derives && fails_without_either, detail.str());
}

// -- 3: credential fidelity and tamper-evidence ------------------------------

void criterion_3() {
  std::string cert_raw = read_file(fs::path(TEST_DATA_DIR) / "sample_certificate.xml");
  std::string policy_raw = read_file(fs::path(TEST_DATA_DIR) / "sample_policy.xml");

  bool fixtures_ok = false;
  try {
    auto cert = credentials::parse_certificate(cert_raw);
    auto policy = credentials::parse_policy(policy_raw);
    std::string canonical = credentials::serialize_certificate(cert);
    std::string canonical2 =
        credentials::serialize_certificate(credentials::parse_certificate(canonical));
    std::string policy_canonical = credentials::serialize_policy(policy);
    std::string policy_canonical2 =
        credentials::serialize_policy(credentials::parse_policy(policy_canonical));
    fixtures_ok = cert.vnf_id == "022RV" && policy.id == "01" && canonical == canonical2 &&
                  policy_canonical == policy_canonical2;
  } catch (const std::exception&) {
  }

  // Tamper-evidence: a freshly signed certificate, then random
  // single-character mutations; every mutant must fail parsing or signature
  // verification.
  auto key = crypto::KeyPair::generate();
  auto signed_cert =
      credentials::canonicalize_and_sign(credentials::parse_certificate(cert_raw), key);
  std::string wire = credentials::serialize_certificate(signed_cert);
  bool baseline = credentials::verify_signature(signed_cert, key.public_key_base64());

  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> position(0, wire.size() - 1);
  std::uniform_int_distribution<int> printable(32, 126);
  int mutations = 0, false_accepts = 0;
  while (mutations < 150) {
    std::string mutant = wire;
    std::size_t pos = position(rng);
    char replacement = static_cast<char>(printable(rng));
    if (replacement == mutant[pos]) continue;
    mutant[pos] = replacement;
    ++mutations;
    try {
      auto reparsed = credentials::parse_certificate(mutant);
      // Verification against the embedded issuer key: a mutation of the key
      // material is as fatal as one of the signed payload.
      if (credentials::verify_signature(reparsed)) ++false_accepts;
    } catch (const std::exception&) {
      // rejected at the schema layer: equally tamper-evident
    }
  }

  std::ostringstream detail;
  detail << "fixtures " << (fixtures_ok ? "round-trip" : "broken") << ", baseline signature "
         << (baseline ? "verifies" : "broken") << ", " << mutations << " mutations, "
         << false_accepts << " false accepts";
  report(3, fixtures_ok && baseline && false_accepts == 0, detail.str());
}

// -- 4: detect-isolate-replace scenario ---------------------------------------

struct ScenarioOutcome {
  std::vector<std::string> log;
  bool deployed = false;
  bool detected = false;
  bool suspect_is_vm2 = false;
  bool mitigated = false;
  bool recovered = false;
};

ScenarioOutcome run_scenario(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  authority::TrustedAuthority ta;
  authority::ReferenceStore refs;
  policyrepo::PolicyStore policies(root);

  credentials::TrustPolicy policy;
  policy.id = "01";
  policy.creator = "Bob";
  policy.creator_role = "admin";
  credentials::PolicyRule rule;
  rule.platform = credentials::kPlatformWildcard;
  rule.resources = "Domain 1";
  rule.vnf_static = {"Hash is Valid", "Digital Signature is Valid"};
  rule.vnf_dynamic = {"No Malware"};
  rule.vm_static = {"Hash is Valid"};
  rule.vm_dynamic = {"No Memory Leakage"};
  rule.boot_time_verdict = "Trusted";
  rule.run_time_verdict = "Trusted";
  policy.rules.push_back(rule);
  policies.add_policy(policy, {"Bob", "admin"});

  nfvsim::Simulator sim(ta, refs, policies);
  sim.register_image("img1", "image one bytes", {"router", "sshd"});

  nfvsim::SliceDescriptor descriptor;
  descriptor.slice_id = "slice1";
  descriptor.realm = "Domain 1";
  nfvsim::VnfDescriptor vnf;
  vnf.vnf_id = "vnf1";
  vnf.role = "l2router";
  vnf.vms = {{"vm1", "img1", "zone1"}, {"vm2", "img1", "zone1"}};
  descriptor.vnfs.push_back(vnf);

  ScenarioOutcome outcome;
  outcome.deployed = sim.create_and_deploy_slice(descriptor).deployed;
  sim.inject_event({3, "trigger_logic_bomb", "vm2", {}});
  sim.advance(10);  // detection due at tick 5, one interval after the bomb

  for (const auto& line : sim.event_log())
    if (line.find("trusted -> untrusted") != std::string::npos) outcome.detected = true;
  // "The correct VM flagged" and "isolate and replace" in one record: the
  // mitigation acted on vm2 specifically, not on the healthy vm1.
  for (const auto& record : sim.mitigations())
    if (record.success && record.old_vm == "vm2" && record.new_vm == "vm2_r1")
      outcome.mitigated = true;
  const auto& verdict = sim.trust_manager().last_verdict("slice1");
  outcome.recovered =
      verdict.has_value() && verdict->aggregate == trustmgr::TrustStatus::Trusted;
  outcome.suspect_is_vm2 = outcome.mitigated;
  outcome.log = sim.event_log();
  fs::remove_all(root);
  return outcome;
}

void criterion_4() {
  auto t0 = std::chrono::steady_clock::now();
  auto first = run_scenario(fs::temp_directory_path() / "acceptance_scenario_a");
  auto second = run_scenario(fs::temp_directory_path() / "acceptance_scenario_b");
  double elapsed = seconds_since(t0);

  bool deterministic = first.log == second.log;
  bool pass = first.deployed && first.detected && first.suspect_is_vm2 && first.mitigated &&
              first.recovered && deterministic && elapsed < 5.0;
  std::ostringstream detail;
  detail << "deployed=" << first.deployed << " detected=" << first.detected
         << " mitigated=" << first.mitigated << " recovered=" << first.recovered
         << " deterministic=" << deterministic << ", " << elapsed << "s";
  report(4, pass, detail.str());
}

// -- 5: termination of cyclic rule bases --------------------------------------

void criterion_5() {
  auto worker = [] {
    // Self-reference, a two-rule cycle and a slice-level cycle; none of the
    // goals has supporting facts, so all must come back unsatisfied.
    lopat::RuleBase rules;
    rules.add(lopat::parse_rule("SatC(c1, p1) <- SatC(c1, p1)."));
    rules.add(lopat::parse_rule("SatC(c2, p1) <- SatC(c2, p2)."));
    rules.add(lopat::parse_rule("SatC(c2, p2) <- SatC(c2, p1)."));
    rules.add(lopat::parse_rule("SatNS(ns1, p1) <- SatNS(ns1, p2)."));
    rules.add(lopat::parse_rule("SatNS(ns1, p2) <- SatNS(ns1, p1)."));
    resolution::FactBase facts;
    bool any_satisfied = false;
    long checked = 0;
    for (const auto& goal :
         {testgen::sat_c("c1", "p1"), testgen::sat_c("c2", "p1"), testgen::sat_c("c2", "p2"),
          testgen::sat_ns("ns1", "p1"), testgen::sat_ns("ns1", "p2")}) {
      auto result = resolution::resolve_goal(goal, facts, rules);
      if (result.satisfied) any_satisfied = true;
      ++checked;
    }
    return std::make_pair(any_satisfied, checked);
  };

  auto handle = std::async(std::launch::async, worker);
  if (handle.wait_for(std::chrono::seconds(10)) != std::future_status::ready) {
    report(5, false, "cyclic resolution did not terminate within the 10s watchdog");
    std::_Exit(1);  // the worker thread is stuck; a clean unwind is impossible
  }
  auto [any_satisfied, checked] = handle.get();
  std::ostringstream detail;
  detail << checked << " cyclic goals terminated, satisfied=" << any_satisfied;
  report(5, !any_satisfied && checked == 5, detail.str());
}

// -- 6: aggregation lattice ----------------------------------------------------

void criterion_6() {
  using trustmgr::TrustStatus;
  const TrustStatus all[] = {TrustStatus::Trusted, TrustStatus::Uncertain,
                             TrustStatus::Untrusted};
  auto severity = [](TrustStatus s) {
    if (s == TrustStatus::Untrusted) return 2;
    if (s == TrustStatus::Uncertain) return 1;
    return 0;
  };
  int cases = 0, mismatches = 0;
  for (auto a : all)
    for (auto b : all)
      for (auto c : all)
        for (auto d : all) {
          TrustStatus folded = trustmgr::combine(
              trustmgr::combine(trustmgr::combine(a, b), c), d);
          int expected = std::max({severity(a), severity(b), severity(c), severity(d)});
          if (severity(folded) != expected) ++mismatches;
          ++cases;
        }
  std::ostringstream detail;
  detail << cases << " member-status vectors, " << mismatches << " mismatches";
  report(6, cases == 81 && mismatches == 0, detail.str());
}

// -- 7: benchmark shape ---------------------------------------------------------

void criterion_7() {
  double published = nfvsim::overhead_ratio(453.64, 478.56);
  bool published_ok = std::fabs(published - 5.49) <= 0.01;

  auto reports = nfvsim::run_opd_benchmark({10, 20, 30, 40}, {100, 200, 300, 400}, 3);
  int violations = 0;
  std::map<int, double> last_trust;
  std::map<int, int> last_props;
  for (const auto& r : reports) {
    if (last_props.count(r.vm_count) != 0) {
      if (r.property_count <= last_props[r.vm_count] || r.trust_opd < last_trust[r.vm_count])
        ++violations;
    }
    last_props[r.vm_count] = r.property_count;
    last_trust[r.vm_count] = r.trust_opd;
  }

  std::ostringstream detail;
  detail.precision(4);
  detail << "published pair -> " << published << "%, " << reports.size()
         << " reports, monotonicity violations=" << violations;
  report(7, published_ok && reports.size() == 16 && violations == 0, detail.str());
}

// -- 8: policy store durability -------------------------------------------------

std::map<std::string, std::string> snapshot_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[fs::relative(entry.path(), root).string()] = read_file(entry.path());
  }
  return out;
}

std::string store_fingerprint(const policyrepo::PolicyStore& store) {
  std::ostringstream out;
  for (const auto& record : store.audit_listing()) {
    out << record.policy.id << "|" << record.revision << "|" << record.deleted << "|"
        << record.created_at << "|" << record.updated_at << "|" << record.creator << "|"
        << record.realm << "\n"
        << credentials::serialize_policy(record.policy) << "\n";
  }
  return out.str();
}

void criterion_8() {
  fs::path root = fs::temp_directory_path() / "acceptance_policystore";
  fs::remove_all(root);
  fs::create_directories(root);

  std::mt19937 rng(99);
  std::uniform_int_distribution<int> op(0, 3), id_pick(0, 9), realm_pick(1, 3);
  const policyrepo::Actor admin{"Bob", "admin"};
  const policyrepo::Actor intruder{"Mallory", "tenant"};

  auto random_policy = [&](const std::string& id) {
    credentials::TrustPolicy policy;
    policy.id = id;
    policy.creator = "Bob";
    policy.creator_role = "admin";
    credentials::PolicyRule rule;
    rule.platform = credentials::kPlatformWildcard;
    rule.resources = "Domain " + std::to_string(realm_pick(rng));
    rule.vnf_static = {"No Malware"};
    rule.boot_time_verdict = "Trusted";
    rule.run_time_verdict = "Trusted";
    policy.rules.push_back(rule);
    return policy;
  };

  int executed = 0, rejected_unchanged = 0, rejected_total = 0;
  {
    policyrepo::PolicyStore store(root);
    for (int i = 0; i < 200; ++i) {
      std::string id = "p" + std::to_string(id_pick(rng));
      int kind = op(rng);
      try {
        if (kind == 0) store.add_policy(random_policy(id), admin, i);
        else if (kind == 1) store.update_policy(id, random_policy(id), admin, i);
        else if (kind == 2) store.delete_policy(id, admin, i);
        else {
          // A non-admin mutation attempt: must throw and leave every byte
          // of the backing files alone.
          auto before = snapshot_files(root);
          ++rejected_total;
          bool threw = false;
          try {
            store.add_policy(random_policy(id), intruder, i);
          } catch (const policyrepo::AuthorizationError&) {
            threw = true;
          }
          if (threw && snapshot_files(root) == before) ++rejected_unchanged;
        }
        ++executed;
      } catch (const std::invalid_argument&) {
        // duplicate add / unknown update or delete: a legal no-op in a
        // random sequence
        ++executed;
      }
    }

    // Process restart: a second store over the same directory must agree.
    policyrepo::PolicyStore reloaded(root);
    bool identical = store_fingerprint(store) == store_fingerprint(reloaded);
    bool rejects_clean = rejected_total > 0 && rejected_unchanged == rejected_total;
    std::ostringstream detail;
    detail << executed << " operations, reload " << (identical ? "identical" : "diverged")
           << ", " << rejected_unchanged << "/" << rejected_total
           << " rejected mutations bitwise clean";
    report(8, executed == 200 && identical && rejects_clean, detail.str());
  }
  fs::remove_all(root);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (failures != 0) {
    std::cout << failures << " criteria failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
