// The three credential artifacts exchanged between the authorities: VNF
// property attestation certificates, trust policies and hashed digest
// reports, with strict schema parsing, a canonical serialization that the
// certificate signature covers, and the property-string normalisation that
// bridges credential text into logic constants.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmano/crypto.hpp"

namespace tmano::credentials {

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;  // element path of the offending node
};

// -- Property attestation certificate ---------------------------------------

struct ServiceVmInfo {
  std::string vmid;
  std::string vm_name;
  std::string vim_location;
};

struct HashInfo {
  std::string value;  // lowercase hex
  std::string issuer;
  std::string type;  // "SHA2"
};

struct DynamicProperty {
  std::string text;
  std::optional<std::int64_t> value;

  bool operator==(const DynamicProperty&) const = default;
};

struct CertificateInfo {
  std::string id;
  std::string issuer;
  std::string issuer_key;  // base64 SubjectPublicKeyInfo, whitespace stripped
  std::string sign_algo;
  std::string digital_sign;  // hex; empty before signing
  std::string validity;      // e.g. "24hr"
  std::optional<std::int64_t> issued_at;  // extension element, absent in the
                                          // published sample
};

struct PropertyCertificate {
  CertificateInfo info;
  std::string vnf_id;
  std::string vnf_name;
  std::string vnf_make;
  std::string vnf_purpose;
  std::vector<ServiceVmInfo> vnf_map;  // one or more entries
  HashInfo vnf_hash;
  HashInfo service_vm_hash;
  std::vector<DynamicProperty> vnf_properties;
  std::vector<DynamicProperty> service_vm_properties;
};

PropertyCertificate parse_certificate(const std::string& document);

// Canonical form: schema-ordered elements, trimmed text, no insignificant
// whitespace. parse(serialize(c)) reproduces c; serialize is the byte form
// the signature covers (with the digitalSign content blanked).
std::string serialize_certificate(const PropertyCertificate& cert);

// Fills issuer_key and digital_sign from the key over the canonical
// signature payload. Requires sign_algo "ECDSA".
PropertyCertificate canonicalize_and_sign(PropertyCertificate cert,
                                          const crypto::KeyPair& key);

// True iff the embedded signature verifies over the canonical payload under
// the given key (defaults to the certificate's own issuer_key).
bool verify_signature(const PropertyCertificate& cert);
bool verify_signature(const PropertyCertificate& cert, const std::string& public_key_base64);

// Validity string "24hr" -> seconds. Units: s, min, hr, d.
std::int64_t parse_validity_seconds(const std::string& validity);

// -- Trust policy ------------------------------------------------------------

struct PolicyRule {
  std::string platform;   // "Any Network Slice" is the wildcard
  std::string resources;  // realm key
  std::vector<std::string> vnf_static;      // sP
  std::vector<std::string> vnf_dynamic;     // dP
  std::vector<std::string> vm_static;
  std::vector<std::string> vm_dynamic;
  std::string boot_time_verdict;  // "Trusted" | "Untrusted"
  std::string run_time_verdict;

  bool has_vnf_requirements() const { return !vnf_static.empty() || !vnf_dynamic.empty(); }
  bool has_vm_requirements() const { return !vm_static.empty() || !vm_dynamic.empty(); }
};

struct TrustPolicy {
  std::string id;
  std::string creator;
  std::string creator_role;
  std::vector<PolicyRule> rules;
};

TrustPolicy parse_policy(const std::string& document);
std::string serialize_policy(const TrustPolicy& policy);

inline constexpr const char* kPlatformWildcard = "Any Network Slice";

// -- Hashed digest report ----------------------------------------------------

struct DigestEntry {
  std::string component;
  std::string digest;  // lowercase hex
  std::string algorithm;
  std::optional<std::string> parent;  // present for sub-components
};

struct DigestReport {
  std::string slice_id;
  std::string reporter;
  std::int64_t timestamp = 0;
  std::vector<DigestEntry> entries;
};

// Line-oriented text format:
//   slice: <id>
//   reporter: <identity>
//   timestamp: <integer>
//   component: <id> <algorithm> <digest> [parent=<id>]
DigestReport parse_digest_report(const std::string& document);
std::string serialize_digest_report(const DigestReport& report);

// Throws std::invalid_argument on malformed digests, duplicate component ids
// or a parent reference to an unknown component.
void validate_digest_report(const DigestReport& report);

// -- Property-string normalisation -------------------------------------------

// "No Malware" -> "no_malware"; an optional value is appended as "_<value>".
// Deterministic and idempotent. Throws std::invalid_argument when the string
// is empty after normalisation.
std::string property_string_to_constant(const std::string& s,
                                        std::optional<std::int64_t> value = std::nullopt);

// Records raw-string -> constant mappings and reports collisions: distinct
// raw strings landing on one constant.
class PropertyVocabulary {
 public:
  // Returns the constant; remembers the raw form.
  std::string intern(const std::string& raw, std::optional<std::int64_t> value = std::nullopt);

  // Pairs of (constant, colliding raw strings) with more than one raw form.
  std::vector<std::pair<std::string, std::vector<std::string>>> collisions() const;

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
};

}  // namespace tmano::credentials
