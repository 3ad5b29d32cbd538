#include "tmano/authority.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace tmano::authority {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

void check_digest(const std::string& digest, const std::string& algorithm) {
  if (!crypto::is_hex(digest) || digest.size() != crypto::digest_hex_length(algorithm))
    throw std::invalid_argument("malformed " + algorithm + " digest: " + digest);
}

}  // namespace

void ReferenceStore::register_reference(const std::string& identity, const std::string& digest,
                                        const std::string& algorithm,
                                        const std::string& issuer) {
  check_digest(digest, algorithm);
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(identity, algorithm);
  auto it = refs_.find(key);
  if (it != refs_.end()) {
    if (it->second.digest == digest) return;  // idempotent
    throw std::invalid_argument("conflicting reference for " + identity + " (" + algorithm +
                                ")");
  }
  refs_.emplace(key, Reference{digest, algorithm, issuer});
}

std::optional<Reference> ReferenceStore::lookup(const std::string& identity,
                                                const std::string& algorithm) const {
  std::lock_guard lock(mutex_);
  auto it = refs_.find(std::make_pair(identity, algorithm));
  if (it == refs_.end()) return std::nullopt;
  return it->second;
}

std::size_t ReferenceStore::size() const {
  std::lock_guard lock(mutex_);
  return refs_.size();
}

void ReferenceStore::save(const std::string& path) const {
  std::lock_guard lock(mutex_);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write reference store: " + path);
  for (const auto& [key, ref] : refs_)
    out << key.first << ' ' << ref.algorithm << ' ' << ref.digest << ' ' << ref.issuer << '\n';
}

void ReferenceStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read reference store: " + path);
  ReferenceStore& store = *this;
  std::string line;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::istringstream fields(s);
    std::string identity, algorithm, digest, issuer;
    if (!(fields >> identity >> algorithm >> digest >> issuer))
      throw std::runtime_error("malformed reference store line: " + line);
    store.register_reference(identity, digest, algorithm, issuer);
  }
}

AttestationOutcome binary_attest(std::string_view artifact, const std::string& identity,
                                 const std::string& algorithm, const ReferenceStore& refs) {
  auto ref = refs.lookup(identity, algorithm);
  if (!ref) throw std::invalid_argument("no reference registered for " + identity + " (" +
                                        algorithm + ")");
  AttestationOutcome out;
  out.measured_digest = crypto::digest_hex(artifact, algorithm);
  out.match = out.measured_digest == ref->digest;
  return out;
}

std::vector<Checker> default_vnf_checkers(std::set<std::string> malicious) {
  std::vector<Checker> suite;
  suite.push_back({"No Malware",
                   [malicious](const StaticState&, const DynamicState& dyn) {
                     return std::none_of(dyn.processes.begin(), dyn.processes.end(),
                                         [&](const std::string& p) {
                                           return malicious.count(p) > 0;
                                         });
                   },
                   nullptr});
  suite.push_back({"Memory Integrity ok",
                   [](const StaticState&, const DynamicState& dyn) {
                     return dyn.memory_integrity;
                   },
                   nullptr});
  suite.push_back({"No Extra Service Running",
                   [](const StaticState& st, const DynamicState& dyn) {
                     return std::all_of(dyn.processes.begin(), dyn.processes.end(),
                                        [&](const std::string& p) {
                                          return std::find(st.manifest.begin(),
                                                           st.manifest.end(),
                                                           p) != st.manifest.end();
                                        });
                   },
                   nullptr});
  return suite;
}

std::vector<Checker> default_vm_checkers(std::set<std::string> malicious) {
  std::vector<Checker> suite;
  auto trusted_only = [](const StaticState& st, const DynamicState& dyn) {
    return std::all_of(dyn.processes.begin(), dyn.processes.end(),
                       [&](const std::string& p) {
                         return std::find(st.manifest.begin(), st.manifest.end(), p) !=
                                st.manifest.end();
                       });
  };
  suite.push_back({"Trusted Processes are Running", trusted_only,
                   [](const StaticState&, const DynamicState& dyn) {
                     return static_cast<std::int64_t>(dyn.processes.size());
                   }});
  suite.push_back({"No Memory Leakage",
                   [](const StaticState&, const DynamicState& dyn) {
                     return dyn.memory_integrity;
                   },
                   nullptr});
  suite.push_back({"No External Software Call",
                   [malicious](const StaticState&, const DynamicState& dyn) {
                     return dyn.open_endpoints.empty() &&
                            std::none_of(dyn.processes.begin(), dyn.processes.end(),
                                         [&](const std::string& p) {
                                           return malicious.count(p) > 0;
                                         });
                   },
                   nullptr});
  suite.push_back({"Address Randomisation Enabled",
                   [](const StaticState&, const DynamicState& dyn) {
                     return dyn.address_randomisation;
                   },
                   nullptr});
  return suite;
}

std::vector<Checker> filter_checkers(std::vector<Checker> suite, const std::string& manifest) {
  std::set<std::string> enabled;
  std::istringstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (!s.empty() && s[0] != '#') enabled.insert(s);
  }
  std::erase_if(suite, [&](const Checker& c) { return enabled.count(c.property) == 0; });
  return suite;
}

TrustedAuthority::TrustedAuthority(std::string name, crypto::KeyPair key)
    : name_(std::move(name)),
      key_(std::move(key)),
      vnf_checkers_(default_vnf_checkers()),
      vm_checkers_(default_vm_checkers()) {}

void TrustedAuthority::set_vnf_checkers(std::vector<Checker> checkers) {
  vnf_checkers_ = std::move(checkers);
}

void TrustedAuthority::set_vm_checkers(std::vector<Checker> checkers) {
  vm_checkers_ = std::move(checkers);
}

std::vector<credentials::DynamicProperty> TrustedAuthority::evaluate_checkers(
    const std::vector<Checker>& suite, const InfoSnapshot& snapshot) const {
  std::vector<credentials::DynamicProperty> out;
  if (!snapshot.has_dynamic()) return out;
  const DynamicState& dyn = snapshot.dynamic_state();
  for (const auto& checker : suite) {
    if (!checker.holds(snapshot.static_state(), dyn)) continue;
    credentials::DynamicProperty p;
    p.text = checker.property;
    if (checker.value) p.value = checker.value(snapshot.static_state(), dyn);
    out.push_back(std::move(p));
  }
  return out;
}

credentials::PropertyCertificate TrustedAuthority::property_attest(
    const AttestationRequest& request) const {
  if (request.vnf_id.empty()) throw std::invalid_argument("attestation request has no subject");
  if (!request.vnf_snapshot) throw std::invalid_argument("missing vnf snapshot");
  if (request.vms.empty()) throw std::invalid_argument("attestation request has no service VM");
  for (const auto& vm : request.vms)
    if (!vm.snapshot) throw std::invalid_argument("missing snapshot for VM " + vm.vm_id);

  credentials::PropertyCertificate cert;
  cert.info.issuer = name_;
  cert.info.sign_algo = "ECDSA";
  cert.info.validity = validity_;
  cert.info.issued_at = request.requested_at;

  cert.vnf_id = request.vnf_id;
  cert.vnf_name = request.vnf_name;
  cert.vnf_make = request.vnf_make;
  cert.vnf_purpose = request.vnf_purpose;
  for (const auto& vm : request.vms)
    cert.vnf_map.push_back({vm.vm_id, vm.vm_name, vm.vim_location});

  check_digest(request.vnf_snapshot->static_state().image_digest, "sha256");
  cert.vnf_hash = {request.vnf_snapshot->static_state().image_digest, name_, "SHA2"};
  check_digest(request.vms.front().snapshot->static_state().image_digest, "sha256");
  cert.service_vm_hash = {request.vms.front().snapshot->static_state().image_digest, name_,
                          "SHA2"};

  if (request.phase == Phase::Active) {
    cert.vnf_properties = evaluate_checkers(vnf_checkers_, *request.vnf_snapshot);
    // The service-VM section lists properties every mapped VM satisfies.
    cert.service_vm_properties = evaluate_checkers(vm_checkers_, *request.vms.front().snapshot);
    for (std::size_t i = 1; i < request.vms.size(); ++i) {
      auto held = evaluate_checkers(vm_checkers_, *request.vms[i].snapshot);
      std::erase_if(cert.service_vm_properties, [&](const credentials::DynamicProperty& p) {
        return std::none_of(held.begin(), held.end(),
                            [&](const credentials::DynamicProperty& q) {
                              return q.text == p.text;
                            });
      });
    }
  }

  std::lock_guard lock(sign_mutex_);
  std::ostringstream id;
  id.fill('0');
  id.width(5);
  id << ++serial_;
  cert.info.id = id.str();
  return credentials::canonicalize_and_sign(std::move(cert), key_);
}

}  // namespace tmano::authority
