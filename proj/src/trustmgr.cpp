#include "tmano/trustmgr.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tmano::trustmgr {

namespace {

using nlohmann::json;

bool trace_hit_budget(const resolution::TraceNode& node) {
  if (node.kind == resolution::StepKind::Failure && node.detail == "budget") return true;
  return std::any_of(node.children.begin(), node.children.end(), trace_hit_budget);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ",";
    out += item;
  }
  return out;
}

// One requirement the evaluation engine has to establish.
struct Goal {
  std::string subject_id;  // original identifier (vnf or vm)
  std::string constant;    // property constant
  bool vm_level = false;
};

}  // namespace

const char* status_name(TrustStatus s) {
  switch (s) {
    case TrustStatus::Trusted: return "trusted";
    case TrustStatus::Uncertain: return "uncertain";
    case TrustStatus::Untrusted: return "untrusted";
  }
  return "uncertain";
}

std::optional<TrustStatus> status_from_name(const std::string& name) {
  if (name == "trusted") return TrustStatus::Trusted;
  if (name == "uncertain") return TrustStatus::Uncertain;
  if (name == "untrusted") return TrustStatus::Untrusted;
  return std::nullopt;
}

TrustStatus combine(TrustStatus a, TrustStatus b) {
  return static_cast<TrustStatus>(std::max(static_cast<std::uint8_t>(a),
                                           static_cast<std::uint8_t>(b)));
}

std::string export_verdict(const SliceVerdict& verdict) {
  std::ostringstream out;
  out << "slice: " << verdict.slice_id << "\n";
  out << "aggregate: " << status_name(verdict.aggregate) << "\n";
  out << "evaluated_at: " << verdict.evaluated_at << "\n";
  for (const auto& m : verdict.members) {
    out << "member: " << m.subject << " " << status_name(m.status)
        << " failing=[" << join(m.failing) << "]"
        << " suspects=[" << join(m.suspect_vms) << "]"
        << " cert=" << (m.certificate_id.empty() ? "-" : m.certificate_id);
    if (!m.reason.empty()) out << " reason=" << m.reason;
    out << "\n";
  }
  return out.str();
}

std::string export_verdict_json(const SliceVerdict& verdict) {
  json members = json::array();
  for (const auto& m : verdict.members) {
    members.push_back({{"subject", m.subject},
                       {"status", status_name(m.status)},
                       {"failing", m.failing},
                       {"suspect_vms", m.suspect_vms},
                       {"certificate_id", m.certificate_id},
                       {"reason", m.reason}});
  }
  json doc = {{"slice_id", verdict.slice_id},
              {"aggregate", status_name(verdict.aggregate)},
              {"evaluated_at", verdict.evaluated_at},
              {"members", members}};
  return doc.dump(2);
}

SliceVerdict parse_verdict_json(const std::string& json_text) {
  json doc = json::parse(json_text);
  SliceVerdict verdict;
  verdict.slice_id = doc.at("slice_id").get<std::string>();
  auto aggregate = status_from_name(doc.at("aggregate").get<std::string>());
  if (!aggregate) throw std::invalid_argument("unknown aggregate status");
  verdict.aggregate = *aggregate;
  verdict.evaluated_at = doc.at("evaluated_at").get<std::int64_t>();
  for (const auto& m : doc.at("members")) {
    VnfVerdict member;
    member.subject = m.at("subject").get<std::string>();
    auto status = status_from_name(m.at("status").get<std::string>());
    if (!status) throw std::invalid_argument("unknown member status");
    member.status = *status;
    member.failing = m.at("failing").get<std::vector<std::string>>();
    member.suspect_vms = m.at("suspect_vms").get<std::vector<std::string>>();
    member.certificate_id = m.at("certificate_id").get<std::string>();
    member.reason = m.at("reason").get<std::string>();
    verdict.members.push_back(std::move(member));
  }
  return verdict;
}

std::string audit_line(const AuditEvent& e) {
  std::ostringstream out;
  out << "[" << e.at << "] " << e.step << " " << e.subject << ": " << e.detail;
  return out.str();
}

TrustManager::TrustManager(const InfoSource& source, const authority::TrustedAuthority& ta,
                           const authority::ReferenceStore& refs,
                           const policyrepo::PolicyStore& policies)
    : source_(source), ta_(ta), refs_(refs), policies_(policies) {}

void TrustManager::audit(std::int64_t at, const std::string& step, const std::string& subject,
                         const std::string& detail) {
  audit_.push_back({at, step, subject, detail});
}

InfoSnapshot TrustManager::collect_info(const std::string& subject, Phase phase) const {
  return source_.collect(subject, phase);
}

credentials::PropertyCertificate TrustManager::request_attestation(
    const MemberRef& member, Phase phase, const InfoSnapshot& vnf_snapshot,
    const std::vector<const InfoSnapshot*>& vm_snapshots) const {
  if (vm_snapshots.size() != member.vms.size())
    throw std::invalid_argument("one snapshot per service VM required");
  authority::AttestationRequest request;
  request.vnf_id = member.vnf_id;
  request.vnf_name = member.vnf_id;
  request.vnf_make = member.make;
  request.vnf_purpose = member.role;
  request.vnf_snapshot = &vnf_snapshot;
  for (std::size_t i = 0; i < member.vms.size(); ++i)
    request.vms.push_back({member.vms[i].vm_id, member.vms[i].vm_name,
                           member.vms[i].vim_location, vm_snapshots[i]});
  request.phase = phase;
  request.requested_at = source_.now();

  auto cert = ta_.property_attest(request);
  std::string wire = credentials::serialize_certificate(cert);
  if (transit_tamper_) wire = transit_tamper_(std::move(wire));
  credentials::PropertyCertificate received;
  try {
    received = credentials::parse_certificate(wire);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("certificate rejected in transit: ") + e.what());
  }
  if (!credentials::verify_signature(received, ta_.public_key_base64()))
    throw std::runtime_error("certificate signature verification failed");
  return received;
}

VnfVerdict TrustManager::evaluate_subject(
    const MemberRef& member, Phase phase, const std::string& slice_id,
    const credentials::PropertyCertificate& cert,
    const std::vector<credentials::TrustPolicy>& policies,
    const std::vector<const InfoSnapshot*>& vm_snapshots) const {
  VnfVerdict verdict;
  verdict.subject = member.vnf_id;
  verdict.certificate_id = cert.info.id;

  auto derivation = resolution::derive_facts_from_property_certs({cert}, source_.now());
  if (!derivation.skipped.empty()) {
    verdict.status = TrustStatus::Uncertain;
    verdict.reason = derivation.skipped.front();
    return verdict;
  }
  resolution::FactBase facts = std::move(derivation.facts);

  // Post-verification facts the engine asserts itself: reference-digest and
  // signature checks are not attested properties, they are outcomes of this
  // evaluation round.
  auto snapshot_for = [&](const std::string& vm_id) -> const InfoSnapshot* {
    for (const auto* snap : vm_snapshots)
      if (snap != nullptr && snap->subject() == vm_id) return snap;
    return nullptr;
  };
  auto assert_prop = [&](const std::string& subject_id, const std::string& constant) {
    facts.insert(lopat::make_literal(
                     lopat::Predicate::SatC,
                     {lopat::make_constant(resolution::subject_constant(subject_id),
                                           lopat::Sort::Component),
                      lopat::make_constant(constant, lopat::Sort::Property)}),
                 resolution::Provenance::Asserted);
  };
  auto hash_matches = [&](const std::string& identity, const std::string& digest) {
    auto ref = refs_.lookup(identity, "SHA2");
    return ref.has_value() && !digest.empty() && ref->digest == digest;
  };
  if (hash_matches(cert.vnf_id, cert.vnf_hash.value))
    assert_prop(cert.vnf_id, "hash_is_valid");
  assert_prop(cert.vnf_id, "digital_signature_is_valid");
  for (const auto& vm : cert.vnf_map) {
    const auto* snap = snapshot_for(vm.vmid);
    const std::string digest =
        snap != nullptr ? snap->static_state().image_digest : cert.service_vm_hash.value;
    if (hash_matches(vm.vmid, digest)) assert_prop(vm.vmid, "hash_is_valid");
    assert_prop(vm.vmid, "digital_signature_is_valid");
  }

  // Conflicting evidence (<stem>_true alongside <stem>_false) always yields
  // uncertain, before any requirement is resolved.
  auto props = facts.constants(lopat::Sort::Property);
  for (const auto& name : props) {
    constexpr std::string_view kTrue = "_true";
    if (name.size() > kTrue.size() &&
        name.compare(name.size() - kTrue.size(), kTrue.size(), kTrue) == 0) {
      std::string stem = name.substr(0, name.size() - kTrue.size());
      if (props.count(stem + "_false") != 0) {
        verdict.status = TrustStatus::Uncertain;
        verdict.reason = "conflicting properties: " + stem;
        return verdict;
      }
    }
  }

  // Requirement list from the applicable policy rules, in document order.
  const bool active = phase == Phase::Active;
  std::vector<Goal> goals;
  std::set<std::pair<std::string, std::string>> seen;
  auto add_goal = [&](const std::string& subject_id, const std::string& raw, bool vm_level) {
    std::string constant = credentials::property_string_to_constant(raw);
    if (seen.insert({subject_id, constant}).second)
      goals.push_back({subject_id, constant, vm_level});
  };
  for (const auto& policy : policies) {
    for (const auto& rule : policy.rules) {
      if (rule.platform != credentials::kPlatformWildcard && rule.platform != slice_id) continue;
      if (rule.boot_time_verdict != "Trusted") continue;
      if (active && rule.run_time_verdict != "Trusted") continue;
      for (const auto& p : rule.vnf_static) add_goal(member.vnf_id, p, false);
      if (active)
        for (const auto& p : rule.vnf_dynamic) add_goal(member.vnf_id, p, false);
      for (const auto& vm : member.vms) {
        for (const auto& p : rule.vm_static) add_goal(vm.vm_id, p, true);
        if (active)
          for (const auto& p : rule.vm_dynamic) add_goal(vm.vm_id, p, true);
      }
    }
  }
  if (goals.empty()) {
    verdict.status = TrustStatus::Uncertain;
    verdict.reason = "no applicable policy requirements";
    return verdict;
  }

  // Resolve each requirement; the first failure settles the verdict.
  for (const auto& goal : goals) {
    auto literal = lopat::make_literal(
        lopat::Predicate::SatC,
        {lopat::make_constant(resolution::subject_constant(goal.subject_id),
                              lopat::Sort::Component),
         lopat::make_constant(goal.constant, lopat::Sort::Property)});
    auto result = resolution::resolve_goal(literal, facts, rules_, limits_);
    verdict.trace_text += resolution::export_trace(result.trace);
    if (result.satisfied) continue;
    if (trace_hit_budget(result.trace)) {
      verdict.status = TrustStatus::Uncertain;
      verdict.reason = "resolution budget exhausted";
      return verdict;
    }
    verdict.status = TrustStatus::Untrusted;
    verdict.failing.push_back(goal.constant);
    if (goal.vm_level) {
      verdict.suspect_vms.push_back(goal.subject_id);
    } else if (active) {
      // Blame attribution for a vnf-level failure: a VM is suspect when its
      // own snapshot does not affirm the failing property.
      for (const auto& vm : member.vms) {
        const auto* snap = snapshot_for(vm.vm_id);
        if (snap == nullptr || !snap->has_dynamic()) continue;
        std::set<std::string> affirmed;
        for (const auto* suite : {&ta_.vnf_checkers(), &ta_.vm_checkers()})
          for (const auto& prop : ta_.evaluate_checkers(*suite, *snap)) {
            affirmed.insert(credentials::property_string_to_constant(prop.text));
            if (prop.value)
              affirmed.insert(credentials::property_string_to_constant(prop.text, prop.value));
          }
        if (hash_matches(vm.vm_id, snap->static_state().image_digest))
          affirmed.insert("hash_is_valid");
        affirmed.insert("digital_signature_is_valid");
        if (affirmed.count(goal.constant) == 0) verdict.suspect_vms.push_back(vm.vm_id);
      }
    }
    return verdict;
  }
  verdict.status = TrustStatus::Trusted;
  return verdict;
}

SliceVerdict TrustManager::evaluate_slice(const std::string& slice_id, Phase phase) {
  const SliceInfo info = source_.slice_info(slice_id);
  const std::int64_t at = source_.now();
  audit(at, "S1", slice_id,
        std::string("trust evaluation requested (") + phase_name(phase) + ")");

  SliceVerdict verdict;
  verdict.slice_id = slice_id;
  verdict.evaluated_at = at;
  verdict.aggregate = info.members.empty() ? TrustStatus::Uncertain : TrustStatus::Trusted;

  for (const auto& member : info.members) {
    audit(at, "S2", member.vnf_id, "member enumerated (" + member.role + ")");

    std::deque<InfoSnapshot> snapshots;
    snapshots.push_back(collect_info(member.vnf_id, phase));
    const InfoSnapshot& vnf_snapshot = snapshots.back();
    std::vector<const InfoSnapshot*> vm_snapshots;
    for (const auto& vm : member.vms) {
      snapshots.push_back(collect_info(vm.vm_id, phase));
      vm_snapshots.push_back(&snapshots.back());
    }
    audit(at, "S3", member.vnf_id,
          "IIL collected snapshots for " + std::to_string(1 + vm_snapshots.size()) +
              " subjects");
    audit(at, "S4", member.vnf_id, "information bundle forwarded to APIL");

    VnfVerdict member_verdict;
    audit(at, "S5", member.vnf_id, "attestation requested from TA");
    try {
      auto cert = request_attestation(member, phase, vnf_snapshot, vm_snapshots);
      audit(at, "S6", member.vnf_id, "TA issued certificate " + cert.info.id);
      audit(at, "S7", member.vnf_id, "certificate forwarded to EE");
      audit(at, "S8", member.vnf_id, "EE requested policies for realm " + info.realm);
      auto policies = policies_.fetch_policies(info.realm, policyrepo::SubjectKind::Slice);
      audit(at, "S9", member.vnf_id,
            "PIL returned " + std::to_string(policies.size()) + " policies");
      member_verdict =
          evaluate_subject(member, phase, slice_id, cert, policies, vm_snapshots);
    } catch (const std::runtime_error& e) {
      member_verdict.subject = member.vnf_id;
      member_verdict.status = TrustStatus::Uncertain;
      member_verdict.reason = e.what();
      audit(at, "S6", member.vnf_id, std::string("attestation rejected: ") + e.what());
    }
    audit(at, "S10", member.vnf_id,
          std::string("evaluation report forwarded to NSTE: ") +
              status_name(member_verdict.status));
    verdict.aggregate = combine(verdict.aggregate, member_verdict.status);
    verdict.members.push_back(std::move(member_verdict));
  }
  ++evaluation_count_;
  last_verdicts_[slice_id] = verdict;
  return verdict;
}

void TrustManager::schedule_periodic_evaluation(const std::string& slice_id,
                                                std::int64_t interval) {
  if (interval <= 0) throw std::invalid_argument("evaluation interval must be positive");
  if (subscriptions_.count(slice_id) != 0)
    throw std::invalid_argument("slice already has a periodic evaluation: " + slice_id);
  Subscription sub;
  sub.interval = interval;
  sub.next_due = source_.now() + interval;
  if (auto it = last_verdicts_.find(slice_id); it != last_verdicts_.end() && it->second)
    sub.last_status = it->second->aggregate;
  subscriptions_[slice_id] = sub;
}

void TrustManager::cancel_periodic_evaluation(const std::string& slice_id) {
  if (subscriptions_.erase(slice_id) == 0)
    throw std::invalid_argument("no periodic evaluation for slice: " + slice_id);
}

bool TrustManager::has_subscription(const std::string& slice_id) const {
  return subscriptions_.count(slice_id) != 0;
}

std::vector<Alert> TrustManager::run_due_evaluations(std::int64_t tick) {
  std::vector<Alert> alerts;
  for (auto& [slice_id, sub] : subscriptions_) {
    while (sub.next_due <= tick) {
      const std::optional<SliceVerdict> previous = last_verdicts_[slice_id];
      SliceVerdict current = evaluate_slice(slice_id);
      for (const auto& member : current.members) {
        std::optional<TrustStatus> before;
        if (previous)
          for (const auto& prev : previous->members)
            if (prev.subject == member.subject) before = prev.status;
        const bool changed =
            before ? *before != member.status : member.status != TrustStatus::Trusted;
        if (changed)
          alerts.push_back({slice_id, member.subject, member.suspect_vms,
                            before.value_or(TrustStatus::Trusted), member.status,
                            sub.next_due});
      }
      sub.last_status = current.aggregate;
      sub.next_due += sub.interval;
    }
  }
  return alerts;
}

const std::optional<SliceVerdict>& TrustManager::last_verdict(
    const std::string& slice_id) const {
  static const std::optional<SliceVerdict> none;
  auto it = last_verdicts_.find(slice_id);
  return it == last_verdicts_.end() ? none : it->second;
}

}  // namespace tmano::trustmgr
