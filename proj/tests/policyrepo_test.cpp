#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "tmano/credentials.hpp"
#include "tmano/policyrepo.hpp"

using namespace tmano;
using namespace tmano::policyrepo;
namespace fs = std::filesystem;

namespace {

const Actor kAdmin{"Bob", "admin"};
const Actor kViewer{"Mallory", "tenant"};

credentials::TrustPolicy make_policy(const std::string& id, const std::string& realm,
                                     std::vector<std::string> vnf_static = {"No Malware"},
                                     std::vector<std::string> vm_dynamic = {}) {
  credentials::TrustPolicy policy;
  policy.id = id;
  policy.creator = "Bob";
  policy.creator_role = "admin";
  credentials::PolicyRule rule;
  rule.platform = credentials::kPlatformWildcard;
  rule.resources = realm;
  rule.vnf_static = std::move(vnf_static);
  rule.vm_dynamic = std::move(vm_dynamic);
  rule.boot_time_verdict = "Trusted";
  rule.run_time_verdict = "Trusted";
  policy.rules.push_back(std::move(rule));
  return policy;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// A deterministic fingerprint of every regular file under the store root.
std::map<std::string, std::string> snapshot_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    out[fs::relative(entry.path(), root).string()] = body.str();
  }
  return out;
}

}  // namespace

TEST_CASE("policy CRUD tracks revisions") {
  TempDir dir("policyrepo_test_crud");
  PolicyStore store(dir.path);

  auto rec = store.add_policy(make_policy("01", "Domain 1"), kAdmin, 100);
  CHECK(rec.revision == 1);
  CHECK(rec.realm == "Domain 1");
  CHECK(rec.created_at == 100);
  CHECK(rec.creator == "Bob");

  auto updated = store.update_policy("01", make_policy("01", "Domain 1", {"Memory Integrity ok"}),
                                     kAdmin, 150);
  CHECK(updated.revision == 2);
  CHECK(updated.created_at == 100);
  CHECK(updated.updated_at == 150);
  CHECK(store.get("01")->policy.rules[0].vnf_static ==
        std::vector<std::string>{"Memory Integrity ok"});

  CHECK_THROWS_AS(store.add_policy(make_policy("01", "Domain 1"), kAdmin),
                  std::invalid_argument);
  CHECK_THROWS_AS(store.update_policy("99", make_policy("99", "Domain 1"), kAdmin),
                  std::invalid_argument);
  CHECK_THROWS_AS(store.add_policy(credentials::TrustPolicy{}, kAdmin), std::invalid_argument);

  store.delete_policy("01", kAdmin, 200);
  CHECK(store.get("01")->deleted);
  CHECK_THROWS_AS(store.delete_policy("01", kAdmin), std::invalid_argument);
}

TEST_CASE("non-admin mutations are rejected and leave the store bitwise unchanged") {
  TempDir dir("policyrepo_test_auth");
  PolicyStore store(dir.path);
  store.add_policy(make_policy("01", "Domain 1"), kAdmin, 10);
  auto before = snapshot_files(dir.path);

  CHECK_THROWS_AS(store.add_policy(make_policy("02", "Domain 2"), kViewer),
                  AuthorizationError);
  CHECK_THROWS_AS(store.update_policy("01", make_policy("01", "Domain 1"), kViewer),
                  AuthorizationError);
  CHECK_THROWS_AS(store.delete_policy("01", kViewer), AuthorizationError);

  CHECK(snapshot_files(dir.path) == before);
  CHECK(store.get("01").has_value());
  CHECK(store.audit_listing().size() == 1);

  // Reads need no privilege.
  CHECK(store.fetch_policies("Domain 1", SubjectKind::Slice).size() == 1);
}

TEST_CASE("a reloaded store matches the original") {
  TempDir dir("policyrepo_test_reload");
  {
    PolicyStore store(dir.path);
    store.add_policy(make_policy("01", "Domain 1"), kAdmin, 10);
    store.add_policy(make_policy("02", "Domain 2", {}, {"No Memory Leakage"}), kAdmin, 20);
    store.update_policy("01", make_policy("01", "Domain 1", {"No Malware", "No Extra Service Running"}),
                        kAdmin, 30);
    store.add_policy(make_policy("03", "Domain 1"), kAdmin, 40);
    store.delete_policy("03", kAdmin, 50);
  }
  PolicyStore reloaded(dir.path);
  CHECK(reloaded.listing_text() ==
        "01\tDomain 1\t2\tBob\n"
        "02\tDomain 2\t1\tBob\n");

  auto rec = reloaded.get("01");
  REQUIRE(rec.has_value());
  CHECK(rec->revision == 2);
  CHECK(rec->created_at == 10);
  CHECK(rec->updated_at == 30);
  CHECK(credentials::serialize_policy(rec->policy) ==
        credentials::serialize_policy(
            make_policy("01", "Domain 1", {"No Malware", "No Extra Service Running"})));

  CHECK(reloaded.get("03")->deleted);
  auto audit = reloaded.audit_listing();
  REQUIRE(audit.size() == 3);
  CHECK(audit[2].policy.id == "03");
  CHECK(audit[2].deleted);
  CHECK(fs::exists(dir.path / "policies" / "03.xml.tombstone"));
  CHECK_FALSE(fs::exists(dir.path / "policies" / "03.xml"));
}

TEST_CASE("fetch matches realms exactly and filters by subject kind") {
  TempDir dir("policyrepo_test_fetch");
  PolicyStore store(dir.path);
  store.add_policy(make_policy("01", "Domain 1", {"No Malware"}, {}), kAdmin);
  store.add_policy(make_policy("02", "Domain 1", {}, {"No Memory Leakage"}), kAdmin);
  store.add_policy(make_policy("03", "Domain 2"), kAdmin);

  CHECK(store.fetch_policies("Domain 1", SubjectKind::Slice).size() == 2);
  CHECK(store.fetch_policies("Domain 2", SubjectKind::Slice).size() == 1);
  CHECK(store.fetch_policies("domain 1", SubjectKind::Slice).empty());  // exact match only
  CHECK(store.fetch_policies("Domain 3", SubjectKind::Slice).empty());

  auto vnf = store.fetch_policies("Domain 1", SubjectKind::Vnf);
  REQUIRE(vnf.size() == 1);
  CHECK(vnf[0].id == "01");
  auto vm = store.fetch_policies("Domain 1", SubjectKind::ServiceVm);
  REQUIRE(vm.size() == 1);
  CHECK(vm[0].id == "02");

  store.delete_policy("01", kAdmin);
  CHECK(store.fetch_policies("Domain 1", SubjectKind::Vnf).empty());
}
