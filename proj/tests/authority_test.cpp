#include <algorithm>
#include <cstdio>
#include <set>

#include "doctest.h"
#include "tmano/authority.hpp"
#include "tmano/credentials.hpp"
#include "tmano/crypto.hpp"

using namespace tmano;
using namespace tmano::authority;

namespace {

const std::string kDigestA = crypto::digest_hex("image-a", "SHA2");
const std::string kDigestB = crypto::digest_hex("image-b", "SHA2");

InfoSnapshot clean_vm_snapshot(const std::string& subject, Phase phase = Phase::Active) {
  StaticState st;
  st.image_digest = kDigestA;
  st.manifest = {"sshd", "router"};
  std::optional<DynamicState> dyn;
  if (phase == Phase::Active) {
    dyn = DynamicState{};
    dyn->processes = {"sshd", "router"};
    dyn->shells = {"bash"};
  }
  return InfoSnapshot(subject, phase, 0, st, std::move(dyn));
}

InfoSnapshot compromised_vm_snapshot(const std::string& subject) {
  StaticState st;
  st.image_digest = kDigestA;
  st.manifest = {"sshd", "router"};
  DynamicState dyn;
  dyn.processes = {"sshd", "router", "logicBOMB.sh"};
  dyn.shells = {"bash", "zsh"};
  dyn.address_randomisation = false;
  return InfoSnapshot(subject, Phase::Active, 0, st, dyn);
}

std::set<std::string> property_names(const std::vector<credentials::DynamicProperty>& props) {
  std::set<std::string> names;
  for (const auto& p : props) names.insert(p.text);
  return names;
}

AttestationRequest basic_request(const InfoSnapshot& vnf, const InfoSnapshot& vm,
                                 Phase phase = Phase::Active) {
  AttestationRequest request;
  request.vnf_id = "022RV";
  request.vnf_name = "router";
  request.vnf_make = "OF";
  request.vnf_purpose = "l2router";
  request.vnf_snapshot = &vnf;
  request.vms.push_back({"D1X022RV", "sakura", "zone1", &vm});
  request.phase = phase;
  return request;
}

}  // namespace

TEST_CASE("reference stores register, look up and persist digests") {
  ReferenceStore refs;
  refs.register_reference("img1", kDigestA, "SHA2", "manufacturer");
  refs.register_reference("img1", kDigestA, "SHA2", "manufacturer");  // idempotent
  CHECK(refs.size() == 1);
  CHECK_THROWS_AS(refs.register_reference("img1", kDigestB, "SHA2", "manufacturer"),
                  std::invalid_argument);
  CHECK_THROWS_AS(refs.register_reference("img2", "nothex", "SHA2", "m"),
                  std::invalid_argument);

  auto found = refs.lookup("img1", "SHA2");
  REQUIRE(found.has_value());
  CHECK(found->digest == kDigestA);
  CHECK_FALSE(refs.lookup("img1", "SHA1").has_value());
  CHECK_FALSE(refs.lookup("ghost", "SHA2").has_value());

  refs.register_reference("img2", kDigestB, "SHA2", "vendor");
  std::string path = "authority_test_refs.txt";
  refs.save(path);
  ReferenceStore loaded;
  loaded.load(path);
  CHECK(loaded.size() == 2);
  CHECK(loaded.lookup("img2", "SHA2")->issuer == "vendor");
  std::remove(path.c_str());
}

TEST_CASE("binary attestation distinguishes match, mismatch and missing") {
  ReferenceStore refs;
  refs.register_reference("img1", kDigestA, "SHA2", "manufacturer");

  auto ok = binary_attest("image-a", "img1", "SHA2", refs);
  CHECK(ok.match);
  CHECK(ok.measured_digest == kDigestA);

  auto bad = binary_attest("image-a-tampered", "img1", "SHA2", refs);
  CHECK_FALSE(bad.match);
  CHECK(bad.measured_digest != kDigestA);

  CHECK_THROWS_AS(binary_attest("image-a", "unknown", "SHA2", refs), std::invalid_argument);
  CHECK_THROWS_AS(binary_attest("image-a", "img1", "md5", refs), std::invalid_argument);
}

TEST_CASE("the default checker suites judge snapshots") {
  TrustedAuthority ta;
  auto clean = clean_vm_snapshot("vm1");
  auto names = property_names(ta.evaluate_checkers(ta.vnf_checkers(), clean));
  CHECK(names == std::set<std::string>{"No Malware", "Memory Integrity ok",
                                       "No Extra Service Running"});

  auto bomb = compromised_vm_snapshot("vm2");
  auto bomb_names = property_names(ta.evaluate_checkers(ta.vnf_checkers(), bomb));
  CHECK(bomb_names.count("No Malware") == 0);              // known-bad process
  CHECK(bomb_names.count("No Extra Service Running") == 0);  // zsh not in manifest

  auto vm_names = property_names(ta.evaluate_checkers(ta.vm_checkers(), clean));
  CHECK(vm_names.count("Trusted Processes are Running") == 1);
  CHECK(vm_names.count("Address Randomisation Enabled") == 1);
  auto bomb_vm_names = property_names(ta.evaluate_checkers(ta.vm_checkers(), bomb));
  CHECK(bomb_vm_names.count("Address Randomisation Enabled") == 0);
  CHECK(bomb_vm_names.count("Trusted Processes are Running") == 0);  // rogue process

  // The process-count checker attaches a value.
  for (const auto& p : ta.evaluate_checkers(ta.vm_checkers(), clean))
    if (p.text == "Trusted Processes are Running")
      CHECK(p.value == 2);
}

TEST_CASE("checker evaluation needs dynamic state") {
  TrustedAuthority ta;
  auto pre = clean_vm_snapshot("vm1", Phase::PreDeployment);
  CHECK(ta.evaluate_checkers(ta.vnf_checkers(), pre).empty());
  CHECK(pre.dynamic_read_count() == 0);
}

TEST_CASE("checker suites can be filtered by a manifest") {
  auto suite = default_vnf_checkers();
  auto filtered = filter_checkers(suite, "# enabled checkers\nNo Malware\n");
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0].property == "No Malware");
  CHECK(filter_checkers(suite, "").empty());
}

TEST_CASE("property attestation issues verifiable certificates") {
  TrustedAuthority ta;
  auto vnf = clean_vm_snapshot("022RV");
  auto vm = clean_vm_snapshot("D1X022RV");
  auto cert = ta.property_attest(basic_request(vnf, vm));

  CHECK(cert.info.issuer == "TA");
  CHECK(cert.info.sign_algo == "ECDSA");
  CHECK(cert.info.validity == "24hr");
  CHECK(credentials::verify_signature(cert));
  CHECK(credentials::verify_signature(cert, ta.public_key_base64()));
  CHECK(cert.vnf_hash.value == kDigestA);
  CHECK(cert.service_vm_hash.value == kDigestA);
  REQUIRE(cert.vnf_map.size() == 1);
  CHECK(cert.vnf_map[0].vmid == "D1X022RV");

  auto names = property_names(cert.vnf_properties);
  CHECK(names.count("No Malware") == 1);
  auto vm_names = property_names(cert.service_vm_properties);
  CHECK(vm_names.count("No Memory Leakage") == 1);

  // Serial certificate ids increase.
  auto cert2 = ta.property_attest(basic_request(vnf, vm));
  CHECK(cert2.info.id != cert.info.id);
}

TEST_CASE("pre-deployment certificates carry no dynamic sections") {
  TrustedAuthority ta;
  auto vnf = clean_vm_snapshot("022RV", Phase::PreDeployment);
  auto vm = clean_vm_snapshot("D1X022RV", Phase::PreDeployment);
  auto cert = ta.property_attest(basic_request(vnf, vm, Phase::PreDeployment));
  CHECK(cert.vnf_properties.empty());
  CHECK(cert.service_vm_properties.empty());
  CHECK(cert.vnf_hash.value == kDigestA);
  CHECK(credentials::verify_signature(cert));
}

TEST_CASE("service VM properties are the intersection over all mapped VMs") {
  TrustedAuthority ta;
  auto vnf = clean_vm_snapshot("022RV");
  auto clean = clean_vm_snapshot("vmA");
  auto bomb = compromised_vm_snapshot("vmB");
  auto request = basic_request(vnf, clean);
  request.vms.push_back({"vmB", "vmB", "zone2", &bomb});
  auto cert = ta.property_attest(request);

  auto names = property_names(cert.service_vm_properties);
  // Held by both VMs.
  CHECK(names.count("No Memory Leakage") == 1);
  // The compromised VM breaks these for the whole set.
  CHECK(names.count("Address Randomisation Enabled") == 0);
  CHECK(names.count("Trusted Processes are Running") == 0);
}

TEST_CASE("attestation requests are validated") {
  TrustedAuthority ta;
  auto vnf = clean_vm_snapshot("022RV");
  auto vm = clean_vm_snapshot("D1X022RV");

  auto no_vms = basic_request(vnf, vm);
  no_vms.vms.clear();
  CHECK_THROWS_AS(ta.property_attest(no_vms), std::invalid_argument);

  auto no_snapshot = basic_request(vnf, vm);
  no_snapshot.vms[0].snapshot = nullptr;
  CHECK_THROWS_AS(ta.property_attest(no_snapshot), std::invalid_argument);

  auto no_vnf = basic_request(vnf, vm);
  no_vnf.vnf_snapshot = nullptr;
  CHECK_THROWS_AS(ta.property_attest(no_vnf), std::invalid_argument);
}
