// Trust Policy Repository: a directory-backed store of trust policy
// documents with admin-gated CRUD, revision tracking through an append-only
// journal, and realm-scoped retrieval.

#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmano/credentials.hpp"

namespace tmano::policyrepo {

struct Actor {
  std::string name;
  std::string role;  // mutations require "admin"
};

class AuthorizationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PolicyRecord {
  credentials::TrustPolicy policy;
  std::string realm;  // first rule's resources
  int revision = 0;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
  std::string creator;
  std::string creator_role;
  bool deleted = false;
};

enum class SubjectKind { Vnf, ServiceVm, Slice };

// Directory layout: <root>/policies/<id>.xml plus <root>/journal.log. The
// journal is replayed on load; a delete tombstones the record (it stays in
// the audit listing) and parks the document as <id>.xml.tombstone.
class PolicyStore {
 public:
  explicit PolicyStore(std::filesystem::path root);

  PolicyRecord add_policy(const credentials::TrustPolicy& policy, const Actor& actor,
                          std::int64_t now = 0);
  PolicyRecord update_policy(const std::string& id, const credentials::TrustPolicy& policy,
                             const Actor& actor, std::int64_t now = 0);
  void delete_policy(const std::string& id, const Actor& actor, std::int64_t now = 0);

  // Non-deleted policies with a rule whose resources equal the realm,
  // filtered to rules with requirements for the subject kind (a Slice query
  // matches any rule). Ordered by (id, revision).
  std::vector<credentials::TrustPolicy> fetch_policies(const std::string& realm,
                                                       SubjectKind kind) const;

  std::optional<PolicyRecord> get(const std::string& id) const;
  // Every record, tombstones included, ordered by id.
  std::vector<PolicyRecord> audit_listing() const;

  // One record per line: id realm revision creator.
  std::string listing_text() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  void require_admin(const Actor& actor) const;
  void persist_document(const PolicyRecord& record);
  void append_journal(const std::string& op, const PolicyRecord& record, const Actor& actor);
  void load();

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, PolicyRecord> records_;
};

}  // namespace tmano::policyrepo
