// Discrete-event simulated NFV infrastructure: slices, VNFs and VMs with
// mutable static/dynamic state, the pre-deployment attestation gate,
// compromise events, isolate-and-replace mitigation and the on-boarding
// delay benchmark.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tmano/authority.hpp"
#include "tmano/policyrepo.hpp"
#include "tmano/snapshot.hpp"
#include "tmano/trustmgr.hpp"

namespace tmano::nfvsim {

struct VmSpec {
  std::string vm_id;
  std::string image_id;
  std::string vim_location = "zone1";
};

struct VnfDescriptor {
  std::string vnf_id;
  std::string role;
  std::string make = "T-MANO";
  std::vector<VmSpec> vms;
};

struct SliceDescriptor {
  std::string slice_id;
  std::string realm;
  std::vector<std::string> tenants;
  std::vector<VnfDescriptor> vnfs;

  // Throws std::invalid_argument on duplicate ids, empty member lists or a
  // missing realm.
  void validate() const;
};

// Line-oriented text format:
//   slice: <id>
//   realm: <realm>
//   tenant: <name>
//   vnf: <id> role=<role> vms=<vm>:<image>[:<location>],...
SliceDescriptor parse_slice_descriptor(const std::string& text);
std::string serialize_slice_descriptor(const SliceDescriptor& descriptor);

enum class VmStatus : std::uint8_t { Staged, Deployed, Isolated, Replaced };
const char* vm_status_name(VmStatus s);

struct SimVm {
  std::string vm_id;
  std::string image_id;
  std::string vim_location;
  VmStatus status = VmStatus::Staged;
  std::string image_bytes;
  StaticState static_state;
  DynamicState live;
};

struct SimEvent {
  std::int64_t at = 0;
  std::string kind;  // trigger_logic_bomb | tamper_image | custom
  std::string target;
  std::map<std::string, std::string> payload;
};

// One event per line: <tick> <kind> <target> [key=value ...]
std::vector<SimEvent> parse_event_schedule(const std::string& text);
std::string serialize_event_schedule(const std::vector<SimEvent>& events);

struct DeploymentResult {
  bool deployed = false;
  std::vector<std::string> failures;  // failing member descriptions
};

struct MitigationRecord {
  std::string slice_id;
  std::string vnf_id;
  std::string old_vm;
  std::string new_vm;
  std::int64_t isolated_at = 0;
  std::int64_t replaced_at = 0;
  std::int64_t reevaluated_at = 0;
  bool success = false;
  std::string detail;
};

struct BenchReport {
  int vm_count = 0;
  int property_count = 0;
  std::vector<double> base_runs;   // per-repetition aggregated OPD, seconds
  std::vector<double> trust_runs;
  double base_opd = 0.0;   // mean of base_runs
  double trust_opd = 0.0;  // mean of trust_runs
  double overhead_pct = 0.0;
};

// Percentage increase (with_trust - base) / base * 100.
double overhead_ratio(double base, double with_trust);

// Tab-delimited table: vms properties base_opd trust_opd overhead_pct.
std::string bench_table(const std::vector<BenchReport>& reports);

std::vector<BenchReport> run_opd_benchmark(const std::vector<int>& vm_counts,
                                           const std::vector<int>& property_counts,
                                           int repetitions);

class Simulator : public trustmgr::InfoSource {
 public:
  Simulator(const authority::TrustedAuthority& ta, authority::ReferenceStore& refs,
            const policyrepo::PolicyStore& policies);

  trustmgr::TrustManager& trust_manager() { return *tm_; }
  const trustmgr::TrustManager& trust_manager() const { return *tm_; }

  // Image registry; registers the manufacturer reference digest.
  void register_image(const std::string& image_id, std::string bytes,
                      std::vector<std::string> manifest);
  bool has_image(const std::string& image_id) const { return images_.count(image_id) != 0; }

  void create_slice(const SliceDescriptor& descriptor);
  // Binary-attests every member VM and runs the pre-deployment property
  // evaluation; deploys and schedules periodic evaluation only when every
  // member passes.
  DeploymentResult deploy_slice(const std::string& slice_id);
  DeploymentResult create_and_deploy_slice(const SliceDescriptor& descriptor);

  std::vector<std::string> slice_ids() const;
  const SliceDescriptor& descriptor(const std::string& slice_id) const;
  int descriptor_version(const std::string& slice_id) const;
  bool is_deployed(const std::string& slice_id) const;
  const SimVm& vm(const std::string& vm_id) const;

  // Queues the event; it is applied when the clock reaches its tick.
  // Throws std::invalid_argument for an unknown target or past tick.
  void inject_event(const SimEvent& event);

  trustmgr::MemberRef member_of(const std::string& slice_id, const std::string& vnf_id) const;

  // Isolates the alert's suspect VMs, replaces them from the clean
  // registered image through the pre-deployment gate, and re-evaluates.
  MitigationRecord mitigate(const trustmgr::Alert& alert);

  void set_auto_mitigate(bool on) { auto_mitigate_ = on; }
  void set_evaluation_interval(std::int64_t interval) { evaluation_interval_ = interval; }

  // Advances simulated time tick by tick: due periodic evaluations run
  // before the tick's events; alerts trigger mitigation when enabled.
  // Returns the log lines produced.
  std::vector<std::string> advance(std::int64_t ticks);

  const std::vector<std::string>& event_log() const { return log_; }
  const std::vector<MitigationRecord>& mitigations() const { return mitigations_; }

  // InfoSource.
  InfoSnapshot collect(const std::string& subject, Phase phase) const override;
  trustmgr::SliceInfo slice_info(const std::string& slice_id) const override;
  std::int64_t now() const override { return tick_; }

 private:
  struct VmImage {
    std::string image_id;
    std::string bytes;
    std::vector<std::string> manifest;
    std::string digest;  // reference digest
  };
  struct SimSlice {
    SliceDescriptor desc;
    bool deployed = false;
    int version = 1;
  };
  struct PendingEvent {
    SimEvent event;
    long seq = 0;
  };

  void log(const std::string& line);
  SimVm stage_vm(const VmSpec& spec) const;
  std::string vnf_reference_digest(const VnfDescriptor& vnf) const;
  void apply_event(const SimEvent& event);
  const SimSlice& slice(const std::string& slice_id) const;

  const authority::TrustedAuthority& ta_;
  authority::ReferenceStore& refs_;
  std::unique_ptr<trustmgr::TrustManager> tm_;

  std::map<std::string, VmImage> images_;
  std::map<std::string, SimVm> vms_;
  std::map<std::string, SimSlice> slices_;
  std::vector<PendingEvent> pending_;
  std::vector<std::string> log_;
  std::vector<MitigationRecord> mitigations_;
  std::map<std::string, long> replacement_counters_;
  std::int64_t tick_ = 0;
  long event_seq_ = 0;
  std::int64_t evaluation_interval_ = 5;
  bool auto_mitigate_ = true;
};

}  // namespace tmano::nfvsim
