#include "tmano/nfvsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tmano/crypto.hpp"
#include "tmano/lopat.hpp"
#include "tmano/resolution.hpp"

namespace tmano::nfvsim {

namespace {

constexpr const char* kBombScript = "logicBOMB.sh";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

void add_unique(std::vector<std::string>& list, const std::string& item) {
  if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(item);
}

void remove_item(std::vector<std::string>& list, const std::string& item) {
  list.erase(std::remove(list.begin(), list.end(), item), list.end());
}

}  // namespace

void SliceDescriptor::validate() const {
  if (slice_id.empty()) throw std::invalid_argument("slice descriptor requires an id");
  if (realm.empty()) throw std::invalid_argument("slice descriptor requires a realm");
  if (vnfs.empty()) throw std::invalid_argument("slice requires at least one VNF");
  std::set<std::string> ids{slice_id};
  for (const auto& vnf : vnfs) {
    if (vnf.vnf_id.empty()) throw std::invalid_argument("vnf requires an id");
    if (!ids.insert(vnf.vnf_id).second)
      throw std::invalid_argument("duplicate id in descriptor: " + vnf.vnf_id);
    if (vnf.vms.empty())
      throw std::invalid_argument("vnf requires at least one VM: " + vnf.vnf_id);
    for (const auto& vm : vnf.vms) {
      if (vm.vm_id.empty() || vm.image_id.empty())
        throw std::invalid_argument("vm spec requires id and image: " + vnf.vnf_id);
      if (!ids.insert(vm.vm_id).second)
        throw std::invalid_argument("duplicate id in descriptor: " + vm.vm_id);
    }
  }
}

SliceDescriptor parse_slice_descriptor(const std::string& text) {
  SliceDescriptor descriptor;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("descriptor line " + std::to_string(lineno) +
                                  ": expected '<key>: <value>'");
    std::string key = trim(line.substr(0, colon));
    std::string value = trim(line.substr(colon + 1));
    if (key == "slice") {
      descriptor.slice_id = value;
    } else if (key == "realm") {
      descriptor.realm = value;
    } else if (key == "tenant") {
      descriptor.tenants.push_back(value);
    } else if (key == "vnf") {
      VnfDescriptor vnf;
      std::istringstream fields(value);
      fields >> vnf.vnf_id;
      std::string field;
      while (fields >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("descriptor line " + std::to_string(lineno) +
                                      ": expected key=value, got '" + field + "'");
        std::string fkey = field.substr(0, eq);
        std::string fval = field.substr(eq + 1);
        if (fkey == "role") {
          vnf.role = fval;
        } else if (fkey == "make") {
          vnf.make = fval;
        } else if (fkey == "vms") {
          for (const auto& spec_text : split(fval, ',')) {
            auto parts = split(spec_text, ':');
            if (parts.size() < 2 || parts.size() > 3)
              throw std::invalid_argument("descriptor line " + std::to_string(lineno) +
                                          ": vm spec is <vm>:<image>[:<location>]");
            VmSpec spec;
            spec.vm_id = parts[0];
            spec.image_id = parts[1];
            if (parts.size() == 3) spec.vim_location = parts[2];
            vnf.vms.push_back(spec);
          }
        } else {
          throw std::invalid_argument("descriptor line " + std::to_string(lineno) +
                                      ": unknown vnf field '" + fkey + "'");
        }
      }
      descriptor.vnfs.push_back(std::move(vnf));
    } else {
      throw std::invalid_argument("descriptor line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
  }
  descriptor.validate();
  return descriptor;
}

std::string serialize_slice_descriptor(const SliceDescriptor& descriptor) {
  std::ostringstream out;
  out << "slice: " << descriptor.slice_id << "\n";
  out << "realm: " << descriptor.realm << "\n";
  for (const auto& tenant : descriptor.tenants) out << "tenant: " << tenant << "\n";
  for (const auto& vnf : descriptor.vnfs) {
    out << "vnf: " << vnf.vnf_id << " role=" << vnf.role << " make=" << vnf.make << " vms=";
    for (std::size_t i = 0; i < vnf.vms.size(); ++i) {
      if (i != 0) out << ",";
      out << vnf.vms[i].vm_id << ":" << vnf.vms[i].image_id << ":" << vnf.vms[i].vim_location;
    }
    out << "\n";
  }
  return out.str();
}

const char* vm_status_name(VmStatus s) {
  switch (s) {
    case VmStatus::Staged: return "staged";
    case VmStatus::Deployed: return "deployed";
    case VmStatus::Isolated: return "isolated";
    case VmStatus::Replaced: return "replaced";
  }
  return "staged";
}

std::vector<SimEvent> parse_event_schedule(const std::string& text) {
  std::vector<SimEvent> events;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    SimEvent event;
    if (!(fields >> event.at >> event.kind >> event.target))
      throw std::invalid_argument("event line " + std::to_string(lineno) +
                                  ": expected '<tick> <kind> <target> [key=value ...]'");
    std::string field;
    while (fields >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("event line " + std::to_string(lineno) +
                                    ": payload entries are key=value");
      event.payload[field.substr(0, eq)] = field.substr(eq + 1);
    }
    events.push_back(std::move(event));
  }
  return events;
}

std::string serialize_event_schedule(const std::vector<SimEvent>& events) {
  std::ostringstream out;
  for (const auto& e : events) {
    out << e.at << " " << e.kind << " " << e.target;
    for (const auto& [k, v] : e.payload) out << " " << k << "=" << v;
    out << "\n";
  }
  return out.str();
}

// -- Simulator ----------------------------------------------------------------

Simulator::Simulator(const authority::TrustedAuthority& ta, authority::ReferenceStore& refs,
                     const policyrepo::PolicyStore& policies)
    : ta_(ta), refs_(refs) {
  tm_ = std::make_unique<trustmgr::TrustManager>(*this, ta_, refs_, policies);
}

void Simulator::log(const std::string& line) {
  log_.push_back("[" + std::to_string(tick_) + "] " + line);
}

void Simulator::register_image(const std::string& image_id, std::string bytes,
                               std::vector<std::string> manifest) {
  VmImage image;
  image.image_id = image_id;
  image.digest = crypto::digest_hex(bytes, "SHA2");
  image.bytes = std::move(bytes);
  image.manifest = std::move(manifest);
  refs_.register_reference(image_id, image.digest, "SHA2", "manufacturer");
  images_[image_id] = std::move(image);
}

SimVm Simulator::stage_vm(const VmSpec& spec) const {
  auto it = images_.find(spec.image_id);
  if (it == images_.end())
    throw std::invalid_argument("unknown image: " + spec.image_id);
  SimVm vm;
  vm.vm_id = spec.vm_id;
  vm.image_id = spec.image_id;
  vm.vim_location = spec.vim_location;
  vm.status = VmStatus::Staged;
  vm.image_bytes = it->second.bytes;
  vm.static_state.image_digest = it->second.digest;
  vm.static_state.manifest = it->second.manifest;
  vm.static_state.build_info = spec.image_id;
  vm.live.processes = it->second.manifest;  // staged live state = manifest
  vm.live.shells = {"bash"};
  return vm;
}

std::string Simulator::vnf_reference_digest(const VnfDescriptor& vnf) const {
  // The VNF-level reference is derived from its members' image reference
  // digests, so VM replacement with the same image keeps it stable.
  std::string combined;
  for (const auto& spec : vnf.vms) {
    auto it = images_.find(spec.image_id);
    if (it == images_.end())
      throw std::invalid_argument("unknown image: " + spec.image_id);
    combined += it->second.digest;
  }
  return crypto::digest_hex(combined, "SHA2");
}

void Simulator::create_slice(const SliceDescriptor& descriptor) {
  descriptor.validate();
  if (slices_.count(descriptor.slice_id) != 0)
    throw std::invalid_argument("slice already exists: " + descriptor.slice_id);
  for (const auto& vnf : descriptor.vnfs)
    for (const auto& spec : vnf.vms)
      if (vms_.count(spec.vm_id) != 0)
        throw std::invalid_argument("vm already exists: " + spec.vm_id);
  std::map<std::string, SimVm> staged;
  for (const auto& vnf : descriptor.vnfs)
    for (const auto& spec : vnf.vms) staged[spec.vm_id] = stage_vm(spec);
  for (auto& [id, vm] : staged) vms_[id] = std::move(vm);
  slices_[descriptor.slice_id] = {descriptor, false, 1};
  log("slice " + descriptor.slice_id + " created (" +
      std::to_string(descriptor.vnfs.size()) + " vnfs)");
}

DeploymentResult Simulator::deploy_slice(const std::string& slice_id) {
  auto it = slices_.find(slice_id);
  if (it == slices_.end()) throw std::invalid_argument("unknown slice: " + slice_id);
  SimSlice& slice = it->second;
  if (slice.deployed) throw std::invalid_argument("slice already deployed: " + slice_id);

  DeploymentResult result;
  // Pass 1: binary attestation of every member VM against its image
  // reference. Nothing is deployed unless every measurement matches.
  for (const auto& vnf : slice.desc.vnfs) {
    for (const auto& spec : vnf.vms) {
      const SimVm& vm = vms_.at(spec.vm_id);
      try {
        auto outcome = authority::binary_attest(vm.image_bytes, vm.image_id, "SHA2", refs_);
        if (!outcome.match)
          result.failures.push_back(vnf.vnf_id + "/" + vm.vm_id + ": digest mismatch");
      } catch (const std::invalid_argument& e) {
        result.failures.push_back(vnf.vnf_id + "/" + vm.vm_id + ": " + e.what());
      }
    }
  }
  if (!result.failures.empty()) {
    log("slice " + slice_id + " deployment gate failed (binary attestation)");
    return result;
  }

  // Pass 2: provision per-instance references and run the pre-deployment
  // property evaluation.
  for (const auto& vnf : slice.desc.vnfs) {
    refs_.register_reference(vnf.vnf_id, vnf_reference_digest(vnf), "SHA2", "VIM");
    for (const auto& spec : vnf.vms)
      refs_.register_reference(spec.vm_id, images_.at(spec.image_id).digest, "SHA2", "VIM");
  }
  auto verdict = tm_->evaluate_slice(slice_id, Phase::PreDeployment);
  for (const auto& member : verdict.members)
    if (member.status != trustmgr::TrustStatus::Trusted)
      result.failures.push_back(member.subject + ": " +
                                trustmgr::status_name(member.status) +
                                (member.reason.empty() ? "" : " (" + member.reason + ")"));
  if (!result.failures.empty()) {
    log("slice " + slice_id + " deployment gate failed (pre-deployment evaluation)");
    return result;
  }

  for (const auto& vnf : slice.desc.vnfs)
    for (const auto& spec : vnf.vms) vms_.at(spec.vm_id).status = VmStatus::Deployed;
  slice.deployed = true;
  tm_->schedule_periodic_evaluation(slice_id, evaluation_interval_);
  result.deployed = true;
  log("slice " + slice_id + " deployed, periodic evaluation every " +
      std::to_string(evaluation_interval_) + " ticks");
  return result;
}

DeploymentResult Simulator::create_and_deploy_slice(const SliceDescriptor& descriptor) {
  create_slice(descriptor);
  return deploy_slice(descriptor.slice_id);
}

std::vector<std::string> Simulator::slice_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : slices_) ids.push_back(id);
  return ids;
}

const Simulator::SimSlice& Simulator::slice(const std::string& slice_id) const {
  auto it = slices_.find(slice_id);
  if (it == slices_.end()) throw std::invalid_argument("unknown slice: " + slice_id);
  return it->second;
}

const SliceDescriptor& Simulator::descriptor(const std::string& slice_id) const {
  return slice(slice_id).desc;
}

int Simulator::descriptor_version(const std::string& slice_id) const {
  return slice(slice_id).version;
}

bool Simulator::is_deployed(const std::string& slice_id) const {
  return slice(slice_id).deployed;
}

const SimVm& Simulator::vm(const std::string& vm_id) const {
  auto it = vms_.find(vm_id);
  if (it == vms_.end()) throw std::invalid_argument("unknown vm: " + vm_id);
  return it->second;
}

void Simulator::inject_event(const SimEvent& event) {
  if (vms_.count(event.target) == 0)
    throw std::invalid_argument("unknown event target: " + event.target);
  if (event.at <= tick_)
    throw std::invalid_argument("event tick " + std::to_string(event.at) +
                                " is not in the future (now " + std::to_string(tick_) + ")");
  if (event.kind != "trigger_logic_bomb" && event.kind != "tamper_image" &&
      event.kind != "custom")
    throw std::invalid_argument("unknown event kind: " + event.kind);
  pending_.push_back({event, event_seq_++});
}

void Simulator::apply_event(const SimEvent& event) {
  SimVm& vm = vms_.at(event.target);
  if (vm.status == VmStatus::Isolated || vm.status == VmStatus::Replaced) {
    log("event " + event.kind + " on " + event.target + " dropped (" +
        vm_status_name(vm.status) + ")");
    return;
  }
  if (event.kind == "trigger_logic_bomb") {
    add_unique(vm.live.processes, kBombScript);
    add_unique(vm.live.shells, "zsh");
    vm.live.address_randomisation = false;
    log("logic bomb triggered on " + event.target);
    return;
  }
  if (event.kind == "tamper_image") {
    auto it = event.payload.find("data");
    vm.image_bytes += it != event.payload.end() ? it->second : std::string("tampered");
    vm.static_state.image_digest = crypto::digest_hex(vm.image_bytes, "SHA2");
    log("image tampered on " + event.target);
    return;
  }
  // Custom state mutation.
  for (const auto& [key, value] : event.payload) {
    if (key == "add_process") add_unique(vm.live.processes, value);
    else if (key == "remove_process") remove_item(vm.live.processes, value);
    else if (key == "add_shell") add_unique(vm.live.shells, value);
    else if (key == "remove_shell") remove_item(vm.live.shells, value);
    else if (key == "add_endpoint") add_unique(vm.live.open_endpoints, value);
    else if (key == "memory_integrity") vm.live.memory_integrity = value != "0";
    else if (key == "address_randomisation") vm.live.address_randomisation = value != "0";
    else throw std::invalid_argument("unknown custom payload key: " + key);
  }
  log("custom event applied on " + event.target);
}

trustmgr::MemberRef Simulator::member_of(const std::string& slice_id,
                                         const std::string& vnf_id) const {
  for (const auto& member : slice_info(slice_id).members)
    if (member.vnf_id == vnf_id) return member;
  throw std::invalid_argument("unknown vnf " + vnf_id + " in slice " + slice_id);
}

MitigationRecord Simulator::mitigate(const trustmgr::Alert& alert) {
  MitigationRecord record;
  record.slice_id = alert.slice_id;
  record.vnf_id = alert.vnf_id;
  record.isolated_at = tick_;

  auto slice_it = slices_.find(alert.slice_id);
  if (slice_it == slices_.end()) {
    record.detail = "unknown slice";
    mitigations_.push_back(record);
    return record;
  }
  SimSlice& slice = slice_it->second;
  VnfDescriptor* vnf = nullptr;
  for (auto& candidate : slice.desc.vnfs)
    if (candidate.vnf_id == alert.vnf_id) vnf = &candidate;
  if (vnf == nullptr) {
    record.detail = "unknown vnf";
    mitigations_.push_back(record);
    return record;
  }

  std::vector<std::string> targets = alert.suspect_vms;
  if (targets.empty())
    for (const auto& spec : vnf->vms) targets.push_back(spec.vm_id);

  bool changed = false;
  for (const auto& vm_id : targets) {
    auto vm_it = vms_.find(vm_id);
    if (vm_it == vms_.end()) continue;
    if (vm_it->second.status == VmStatus::Isolated) {
      record.detail = "already isolated";
      record.success = true;
      continue;
    }
    VmSpec* spec = nullptr;
    for (auto& candidate : vnf->vms)
      if (candidate.vm_id == vm_id) spec = &candidate;
    if (spec == nullptr) continue;

    vm_it->second.status = VmStatus::Isolated;
    log("vm " + vm_id + " isolated");

    // Replacement policy: the clean registered image with the same image
    // identity; mitigation fails when it is gone.
    auto image_it = images_.find(spec->image_id);
    if (image_it == images_.end()) {
      record.success = false;
      record.detail = "no clean replacement image for " + spec->image_id;
      mitigations_.push_back(record);
      return record;
    }
    std::string root = vm_id;
    if (auto pos = root.rfind("_r"); pos != std::string::npos &&
        root.find_first_not_of("0123456789", pos + 2) == std::string::npos)
      root = root.substr(0, pos);
    long n = ++replacement_counters_[root];
    VmSpec replacement{root + "_r" + std::to_string(n), spec->image_id, spec->vim_location};

    SimVm fresh = stage_vm(replacement);
    auto outcome = authority::binary_attest(fresh.image_bytes, fresh.image_id, "SHA2", refs_);
    if (!outcome.match) {
      record.success = false;
      record.detail = "replacement image failed attestation";
      mitigations_.push_back(record);
      return record;
    }
    refs_.register_reference(replacement.vm_id, image_it->second.digest, "SHA2", "VIM");
    fresh.status = VmStatus::Deployed;
    vms_[replacement.vm_id] = std::move(fresh);
    vm_it->second.status = VmStatus::Isolated;

    record.old_vm = vm_id;
    record.new_vm = replacement.vm_id;
    record.replaced_at = tick_;
    *spec = replacement;  // swap into the slice, membership count unchanged
    ++slice.version;
    changed = true;
    log("vm " + vm_id + " replaced by " + replacement.vm_id);
  }

  if (changed) {
    auto verdict = tm_->evaluate_slice(alert.slice_id);
    record.reevaluated_at = tick_;
    record.success = verdict.aggregate == trustmgr::TrustStatus::Trusted;
    record.detail = std::string("re-evaluation: ") + trustmgr::status_name(verdict.aggregate);
    log("slice " + alert.slice_id + " re-evaluated: " +
        trustmgr::status_name(verdict.aggregate));
  } else if (record.detail.empty()) {
    record.detail = "no replaceable vm in alert";
  }
  mitigations_.push_back(record);
  return record;
}

std::vector<std::string> Simulator::advance(std::int64_t ticks) {
  if (ticks <= 0) throw std::invalid_argument("ticks must be positive");
  std::size_t log_start = log_.size();
  for (std::int64_t step = 0; step < ticks; ++step) {
    ++tick_;
    // Periodic evaluations run before the tick's events.
    auto alerts = tm_->run_due_evaluations(tick_);
    for (const auto& alert : alerts) {
      log("alert: " + alert.slice_id + "/" + alert.vnf_id + " " +
          trustmgr::status_name(alert.previous) + " -> " +
          trustmgr::status_name(alert.current));
      if (auto_mitigate_ && alert.current == trustmgr::TrustStatus::Untrusted)
        mitigate(alert);
    }
    // Due events in deterministic (tick, insertion sequence) order.
    std::vector<PendingEvent> due;
    std::vector<PendingEvent> rest;
    for (auto& pending : pending_)
      (pending.event.at <= tick_ ? due : rest).push_back(std::move(pending));
    pending_ = std::move(rest);
    std::stable_sort(due.begin(), due.end(), [](const PendingEvent& a, const PendingEvent& b) {
      return a.event.at != b.event.at ? a.event.at < b.event.at : a.seq < b.seq;
    });
    for (const auto& pending : due) apply_event(pending.event);
  }
  return {log_.begin() + static_cast<long>(log_start), log_.end()};
}

InfoSnapshot Simulator::collect(const std::string& subject, Phase phase) const {
  auto vm_it = vms_.find(subject);
  if (vm_it != vms_.end()) {
    const SimVm& vm = vm_it->second;
    std::optional<DynamicState> dyn;
    if (phase == Phase::Active) dyn = vm.live;
    return InfoSnapshot(subject, phase, tick_, vm.static_state, std::move(dyn));
  }
  // VNF snapshots aggregate over their member VMs.
  for (const auto& [slice_id, slice] : slices_) {
    for (const auto& vnf : slice.desc.vnfs) {
      if (vnf.vnf_id != subject) continue;
      StaticState st;
      std::string combined;
      std::optional<DynamicState> dyn;
      if (phase == Phase::Active) dyn = DynamicState{};
      for (const auto& spec : vnf.vms) {
        const SimVm& vm = vms_.at(spec.vm_id);
        combined += vm.static_state.image_digest;
        for (const auto& entry : vm.static_state.manifest) add_unique(st.manifest, entry);
        if (dyn) {
          for (const auto& p : vm.live.processes) add_unique(dyn->processes, p);
          for (const auto& s : vm.live.shells) add_unique(dyn->shells, s);
          for (const auto& e : vm.live.open_endpoints) add_unique(dyn->open_endpoints, e);
          dyn->memory_integrity = dyn->memory_integrity && vm.live.memory_integrity;
          dyn->address_randomisation =
              dyn->address_randomisation && vm.live.address_randomisation;
        }
      }
      st.image_digest = crypto::digest_hex(combined, "SHA2");
      st.build_info = vnf.make;
      return InfoSnapshot(subject, phase, tick_, std::move(st), std::move(dyn));
    }
  }
  throw std::invalid_argument("unknown subject: " + subject);
}

trustmgr::SliceInfo Simulator::slice_info(const std::string& slice_id) const {
  const SimSlice& sim_slice = slice(slice_id);
  trustmgr::SliceInfo info;
  info.slice_id = slice_id;
  info.realm = sim_slice.desc.realm;
  for (const auto& vnf : sim_slice.desc.vnfs) {
    trustmgr::MemberRef member;
    member.vnf_id = vnf.vnf_id;
    member.role = vnf.role;
    member.make = vnf.make;
    for (const auto& spec : vnf.vms) {
      const SimVm& vm = vms_.at(spec.vm_id);
      if (vm.status == VmStatus::Isolated || vm.status == VmStatus::Replaced) continue;
      member.vms.push_back({spec.vm_id, spec.vm_id, spec.vim_location});
    }
    info.members.push_back(std::move(member));
  }
  return info;
}

// -- Benchmark ----------------------------------------------------------------

double overhead_ratio(double base, double with_trust) {
  if (base <= 0.0) throw std::invalid_argument("base delay must be positive");
  return (with_trust - base) / base * 100.0;
}

std::string bench_table(const std::vector<BenchReport>& reports) {
  std::ostringstream out;
  out << "vms\tproperties\tbase_opd\ttrust_opd\toverhead_pct\n";
  for (const auto& r : reports) {
    out << r.vm_count << "\t" << r.property_count << "\t" << std::fixed
        << std::setprecision(6) << r.base_opd << "\t" << r.trust_opd << "\t"
        << std::setprecision(2) << r.overhead_pct << "\n";
  }
  return out.str();
}

namespace {

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// The simulated unit of provisioning work: measuring a VM image.
void boot_work(int vm_index) {
  std::string image(4096, static_cast<char>('a' + vm_index % 26));
  volatile std::size_t sink = crypto::digest_hex(image, "SHA2").size();
  (void)sink;
}

// The per-VM trust cost paid even with zero properties: binary attestation
// of the freshly measured image against its reference digest.
void attest_work(const authority::ReferenceStore& refs, int vm_index) {
  std::string image(4096, static_cast<char>('a' + vm_index % 26));
  volatile bool sink =
      authority::binary_attest(image, "bench_image_" + std::to_string(vm_index % 26), "SHA2",
                               refs)
          .match;
  (void)sink;
}

// The per-property trust cost: attestation measurement, normalisation and a
// resolution-engine lookup.
void property_work(resolution::FactBase& facts, const std::string& subject, int property_index) {
  std::string constant = credentials::property_string_to_constant(
      "bench property " + std::to_string(property_index));
  std::string evidence = subject + constant;
  volatile std::size_t sink = crypto::digest_hex(evidence, "SHA2").size();
  (void)sink;
  auto literal = lopat::make_literal(
      lopat::Predicate::SatC, {lopat::make_constant(subject, lopat::Sort::Component),
                               lopat::make_constant(constant, lopat::Sort::Property)});
  facts.insert(literal, resolution::Provenance::PropertyCertificate);
  auto result = resolution::resolve_goal(literal, facts, lopat::RuleBase{});
  if (!result.satisfied) throw std::logic_error("benchmark fact lookup failed");
}

}  // namespace

std::vector<BenchReport> run_opd_benchmark(const std::vector<int>& vm_counts,
                                           const std::vector<int>& property_counts,
                                           int repetitions) {
  if (vm_counts.empty() || property_counts.empty() || repetitions < 1)
    throw std::invalid_argument("benchmark requires counts and repetitions >= 1");
  for (int n : vm_counts)
    if (n < 1) throw std::invalid_argument("vm counts must be positive");
  for (int n : property_counts)
    if (n < 0) throw std::invalid_argument("property counts must be non-negative");

  std::vector<int> props_sorted = property_counts;
  std::sort(props_sorted.begin(), props_sorted.end());
  const int max_props = props_sorted.back();

  // Reference digests for the attestation step, prepared outside the timed
  // sections.
  authority::ReferenceStore bench_refs;
  for (int i = 0; i < 26; ++i) {
    std::string image(4096, static_cast<char>('a' + i));
    bench_refs.register_reference("bench_image_" + std::to_string(i),
                                  crypto::digest_hex(image, "SHA2"), "SHA2", "bench");
  }

  std::vector<BenchReport> reports;
  for (int vm_count : vm_counts) {
    // Base aggregated OPD: provisioning without the trust gate.
    std::vector<double> base_runs;
    for (int rep = 0; rep < repetitions; ++rep) {
      double t0 = cpu_seconds();
      for (int vm = 0; vm < vm_count; ++vm) boot_work(vm);
      base_runs.push_back(cpu_seconds() - t0);
    }
    double base_mean = 0.0;
    for (double v : base_runs) base_mean += v;
    base_mean /= base_runs.size();

    // With-trust runs: one cumulative run per repetition, with the elapsed
    // delay recorded at every requested property-count checkpoint, so each
    // run's samples are non-decreasing in the property count by
    // construction.
    std::map<int, std::vector<double>> trust_runs;
    for (int rep = 0; rep < repetitions; ++rep) {
      resolution::FactBase facts;
      double t0 = cpu_seconds();
      for (int vm = 0; vm < vm_count; ++vm) {
        boot_work(vm);
        attest_work(bench_refs, vm);
      }
      std::size_t checkpoint = 0;
      while (checkpoint < props_sorted.size() && props_sorted[checkpoint] == 0) {
        trust_runs[0].push_back(cpu_seconds() - t0);
        ++checkpoint;
      }
      for (int prop = 1; prop <= max_props; ++prop) {
        for (int vm = 0; vm < vm_count; ++vm)
          property_work(facts, "vm" + std::to_string(vm), prop);
        while (checkpoint < props_sorted.size() && props_sorted[checkpoint] == prop) {
          trust_runs[prop].push_back(cpu_seconds() - t0);
          ++checkpoint;
        }
      }
    }

    for (int prop_count : property_counts) {
      BenchReport report;
      report.vm_count = vm_count;
      report.property_count = prop_count;
      report.base_runs = base_runs;
      report.trust_runs = trust_runs.at(prop_count);
      report.base_opd = base_mean;
      double trust_mean = 0.0;
      for (double v : report.trust_runs) trust_mean += v;
      trust_mean /= report.trust_runs.size();
      report.trust_opd = trust_mean;
      report.overhead_pct =
          report.base_opd > 0.0 ? overhead_ratio(report.base_opd, report.trust_opd) : 0.0;
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

}  // namespace tmano::nfvsim
