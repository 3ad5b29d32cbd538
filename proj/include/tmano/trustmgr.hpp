// The Trust Manager: information collection (IIL), attestation requests
// (APIL), policy retrieval (PIL), per-subject evaluation (EE) and slice
// aggregation (NSTE), with an audit log of the S1-S10 timeline and periodic
// re-evaluation on simulated time.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmano/authority.hpp"
#include "tmano/credentials.hpp"
#include "tmano/lopat.hpp"
#include "tmano/policyrepo.hpp"
#include "tmano/resolution.hpp"
#include "tmano/snapshot.hpp"

namespace tmano::trustmgr {

enum class TrustStatus : std::uint8_t { Trusted, Uncertain, Untrusted };

const char* status_name(TrustStatus s);
std::optional<TrustStatus> status_from_name(const std::string& name);

// Supremum in the lattice untrusted > uncertain > trusted.
TrustStatus combine(TrustStatus a, TrustStatus b);

struct VmRef {
  std::string vm_id;
  std::string vm_name;
  std::string vim_location;
};

struct MemberRef {
  std::string vnf_id;
  std::string role;   // vnfPurpose
  std::string make;
  std::vector<VmRef> vms;
};

struct SliceInfo {
  std::string slice_id;
  std::string realm;
  std::vector<MemberRef> members;
};

// The IIL's window onto the infrastructure. Implemented by the simulator.
class InfoSource {
 public:
  virtual ~InfoSource() = default;
  // Throws std::invalid_argument for an unknown subject.
  virtual InfoSnapshot collect(const std::string& subject, Phase phase) const = 0;
  virtual SliceInfo slice_info(const std::string& slice_id) const = 0;
  virtual std::int64_t now() const = 0;
};

struct VnfVerdict {
  std::string subject;
  TrustStatus status = TrustStatus::Uncertain;
  std::vector<std::string> failing;      // requirement constants
  std::vector<std::string> suspect_vms;  // VMs implicated in the failure
  std::string certificate_id;
  std::string reason;  // set for uncertain verdicts: no policy, conflict, budget, ...
  std::string trace_text;
};

struct SliceVerdict {
  std::string slice_id;
  TrustStatus aggregate = TrustStatus::Uncertain;
  std::vector<VnfVerdict> members;
  std::int64_t evaluated_at = 0;
};

std::string export_verdict(const SliceVerdict& verdict);
std::string export_verdict_json(const SliceVerdict& verdict);
SliceVerdict parse_verdict_json(const std::string& json_text);

struct AuditEvent {
  std::int64_t at = 0;
  std::string step;  // S1..S10
  std::string subject;
  std::string detail;
};

std::string audit_line(const AuditEvent& e);

struct Alert {
  std::string slice_id;
  std::string vnf_id;
  std::vector<std::string> suspect_vms;
  TrustStatus previous = TrustStatus::Trusted;
  TrustStatus current = TrustStatus::Trusted;
  std::int64_t at = 0;
};

class TrustManager {
 public:
  TrustManager(const InfoSource& source, const authority::TrustedAuthority& ta,
               const authority::ReferenceStore& refs, const policyrepo::PolicyStore& policies);

  // CP/NSP rules consulted by the evaluation engine; empty by default, in
  // which case resolution degenerates to direct fact comparison.
  void set_rules(lopat::RuleBase rules) { rules_ = std::move(rules); }
  void set_limits(resolution::Limits limits) { limits_ = limits; }

  // Fault-injection hook applied to the serialized certificate between the
  // TA and the APIL.
  void set_transit_tamper(std::function<std::string(std::string)> hook) {
    transit_tamper_ = std::move(hook);
  }

  // IIL.
  InfoSnapshot collect_info(const std::string& subject, Phase phase) const;

  // APIL: attests the member's snapshots and verifies the returned
  // certificate before forwarding. Throws std::runtime_error when the
  // certificate fails verification.
  credentials::PropertyCertificate request_attestation(
      const MemberRef& member, Phase phase, const InfoSnapshot& vnf_snapshot,
      const std::vector<const InfoSnapshot*>& vm_snapshots) const;

  // EE: evaluates one member's certificate against the realm's policies.
  VnfVerdict evaluate_subject(const MemberRef& member, Phase phase, const std::string& slice_id,
                              const credentials::PropertyCertificate& cert,
                              const std::vector<credentials::TrustPolicy>& policies,
                              const std::vector<const InfoSnapshot*>& vm_snapshots) const;

  // NSTE: runs collect -> attest -> fetch -> evaluate per member and
  // aggregates. Throws std::invalid_argument for an unknown slice.
  SliceVerdict evaluate_slice(const std::string& slice_id, Phase phase = Phase::Active);

  // Periodic evaluation on simulated time. Throws on duplicate subscription
  // or non-positive interval.
  void schedule_periodic_evaluation(const std::string& slice_id, std::int64_t interval);
  void cancel_periodic_evaluation(const std::string& slice_id);
  bool has_subscription(const std::string& slice_id) const;

  // Runs every evaluation due at or before `tick`; returns alerts for
  // verdict transitions. Called by the simulator's clock.
  std::vector<Alert> run_due_evaluations(std::int64_t tick);

  long evaluation_count() const { return evaluation_count_; }
  const std::vector<AuditEvent>& audit_log() const { return audit_; }
  const std::optional<SliceVerdict>& last_verdict(const std::string& slice_id) const;

 private:
  struct Subscription {
    std::int64_t interval = 0;
    std::int64_t next_due = 0;
    std::optional<TrustStatus> last_status;
  };

  void audit(std::int64_t at, const std::string& step, const std::string& subject,
             const std::string& detail);

  const InfoSource& source_;
  const authority::TrustedAuthority& ta_;
  const authority::ReferenceStore& refs_;
  const policyrepo::PolicyStore& policies_;
  lopat::RuleBase rules_;
  resolution::Limits limits_;
  std::function<std::string(std::string)> transit_tamper_;
  std::vector<AuditEvent> audit_;
  std::map<std::string, Subscription> subscriptions_;
  std::map<std::string, std::optional<SliceVerdict>> last_verdicts_;
  long evaluation_count_ = 0;
};

}  // namespace tmano::trustmgr
