// The simulated Trusted Authority: binary attestation against reference
// digests and property attestation (checker predicates over information
// snapshots) producing signed property certificates.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmano/credentials.hpp"
#include "tmano/crypto.hpp"
#include "tmano/snapshot.hpp"

namespace tmano::authority {

struct Reference {
  std::string digest;  // lowercase hex
  std::string algorithm;
  std::string issuer;
};

class ReferenceStore {
 public:
  // Throws std::invalid_argument on a malformed digest or a conflicting
  // existing reference; re-registering an identical digest is a no-op.
  void register_reference(const std::string& identity, const std::string& digest,
                          const std::string& algorithm, const std::string& issuer);

  std::optional<Reference> lookup(const std::string& identity,
                                  const std::string& algorithm) const;

  // Line-oriented persistence: identity algorithm digest issuer.
  void save(const std::string& path) const;
  // Merges the file's references into this store.
  void load(const std::string& path);

  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, Reference> refs_;
};

struct AttestationOutcome {
  std::string measured_digest;
  bool match = false;
};

// Measures the artifact bytes and compares against the stored reference.
// Throws std::invalid_argument when no reference exists (distinct from a
// mismatch) and crypto::CryptoError for an unsupported algorithm.
AttestationOutcome binary_attest(std::string_view artifact, const std::string& identity,
                                 const std::string& algorithm, const ReferenceStore& refs);

// A checker affirms one property string over a subject's snapshots. The
// value hook, when set, attaches a numeric value to the attested property.
struct Checker {
  std::string property;
  std::function<bool(const StaticState&, const DynamicState&)> holds;
  std::function<std::int64_t(const StaticState&, const DynamicState&)> value;
};

// The suites the prototype ships: vnf-level {No Malware, Memory Integrity
// ok, No Extra Service Running}; service-VM-level {Trusted Processes are
// Running <n>, No Memory Leakage, No External Software Call, Address
// Randomisation Enabled}. `malicious` is the known-bad process list.
std::vector<Checker> default_vnf_checkers(std::set<std::string> malicious = {"logicBOMB.sh"});
std::vector<Checker> default_vm_checkers(std::set<std::string> malicious = {"logicBOMB.sh"});

// Keeps only checkers whose names appear in the manifest text (one enabled
// checker property string per line, '#' comments).
std::vector<Checker> filter_checkers(std::vector<Checker> suite, const std::string& manifest);

struct VmAttestationInput {
  std::string vm_id;
  std::string vm_name;
  std::string vim_location;
  const InfoSnapshot* snapshot = nullptr;
};

struct AttestationRequest {
  std::string vnf_id;
  std::string vnf_name;
  std::string vnf_make;
  std::string vnf_purpose;
  const InfoSnapshot* vnf_snapshot = nullptr;
  std::vector<VmAttestationInput> vms;  // at least one
  Phase phase = Phase::PreDeployment;
  std::int64_t requested_at = 0;
};

class TrustedAuthority {
 public:
  explicit TrustedAuthority(std::string name = "TA",
                            crypto::KeyPair key = crypto::KeyPair::generate());

  const crypto::KeyPair& key() const { return key_; }
  std::string public_key_base64() const { return key_.public_key_base64(); }

  void set_vnf_checkers(std::vector<Checker> checkers);
  void set_vm_checkers(std::vector<Checker> checkers);
  void set_validity(std::string validity) { validity_ = std::move(validity); }

  // Issues a signed certificate. Static hashes come from the snapshots'
  // image digests; dynamic sections contain exactly the properties whose
  // checkers affirm the snapshots, and stay empty for pre-deployment
  // requests. Throws std::invalid_argument on a request without VMs or
  // snapshots.
  credentials::PropertyCertificate property_attest(const AttestationRequest& request) const;

  // Property strings affirmed for one subject snapshot by the given suite;
  // the blame-attribution hook used when a slice member turns untrusted.
  std::vector<credentials::DynamicProperty> evaluate_checkers(
      const std::vector<Checker>& suite, const InfoSnapshot& snapshot) const;
  const std::vector<Checker>& vnf_checkers() const { return vnf_checkers_; }
  const std::vector<Checker>& vm_checkers() const { return vm_checkers_; }

 private:
  std::string name_;
  crypto::KeyPair key_;
  mutable std::mutex sign_mutex_;
  std::vector<Checker> vnf_checkers_;
  std::vector<Checker> vm_checkers_;
  std::string validity_ = "24hr";
  mutable std::uint64_t serial_ = 0;
};

}  // namespace tmano::authority
