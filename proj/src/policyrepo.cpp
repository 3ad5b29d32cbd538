#include "tmano/policyrepo.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tmano::policyrepo {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string policy_realm(const credentials::TrustPolicy& policy) {
  if (policy.rules.empty() || policy.rules.front().resources.empty())
    throw std::invalid_argument("policy " + policy.id + " has no realm");
  return policy.rules.front().resources;
}

}  // namespace

PolicyStore::PolicyStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "policies");
  load();
}

void PolicyStore::require_admin(const Actor& actor) const {
  if (actor.role != "admin")
    throw AuthorizationError("actor " + actor.name + " (role " + actor.role +
                             ") is not authorised to modify policies");
}

void PolicyStore::persist_document(const PolicyRecord& record) {
  write_file_atomic(root_ / "policies" / (record.policy.id + ".xml"),
                    credentials::serialize_policy(record.policy));
}

void PolicyStore::append_journal(const std::string& op, const PolicyRecord& record,
                                 const Actor& actor) {
  std::ofstream out(root_ / "journal.log", std::ios::app);
  if (!out) throw std::runtime_error("cannot append to journal");
  out << op << '\t' << record.policy.id << '\t' << record.revision << '\t' << actor.name << '\t'
      << actor.role << '\t' << record.updated_at << '\n';
}

PolicyRecord PolicyStore::add_policy(const credentials::TrustPolicy& policy, const Actor& actor,
                                     std::int64_t now) {
  require_admin(actor);
  std::lock_guard lock(mutex_);
  auto it = records_.find(policy.id);
  if (it != records_.end() && !it->second.deleted)
    throw std::invalid_argument("policy " + policy.id + " already exists");
  PolicyRecord record;
  record.policy = policy;
  record.realm = policy_realm(policy);
  record.revision = it != records_.end() ? it->second.revision + 1 : 1;
  record.created_at = now;
  record.updated_at = now;
  record.creator = actor.name;
  record.creator_role = actor.role;
  append_journal("add", record, actor);
  persist_document(record);
  records_[policy.id] = record;
  return record;
}

PolicyRecord PolicyStore::update_policy(const std::string& id,
                                        const credentials::TrustPolicy& policy,
                                        const Actor& actor, std::int64_t now) {
  require_admin(actor);
  if (policy.id != id) throw std::invalid_argument("policy id mismatch on update");
  std::lock_guard lock(mutex_);
  auto it = records_.find(id);
  if (it == records_.end() || it->second.deleted)
    throw std::invalid_argument("unknown policy id: " + id);
  PolicyRecord record = it->second;
  record.policy = policy;
  record.realm = policy_realm(policy);
  record.revision += 1;
  record.updated_at = now;
  append_journal("update", record, actor);
  persist_document(record);
  it->second = record;
  return record;
}

void PolicyStore::delete_policy(const std::string& id, const Actor& actor, std::int64_t now) {
  require_admin(actor);
  std::lock_guard lock(mutex_);
  auto it = records_.find(id);
  if (it == records_.end() || it->second.deleted)
    throw std::invalid_argument("unknown policy id: " + id);
  it->second.deleted = true;
  it->second.updated_at = now;
  append_journal("delete", it->second, actor);
  fs::path doc = root_ / "policies" / (id + ".xml");
  fs::rename(doc, root_ / "policies" / (id + ".xml.tombstone"));
}

std::vector<credentials::TrustPolicy> PolicyStore::fetch_policies(const std::string& realm,
                                                                  SubjectKind kind) const {
  std::lock_guard lock(mutex_);
  std::vector<credentials::TrustPolicy> out;
  for (const auto& [id, record] : records_) {  // map iteration: ordered by id
    if (record.deleted) continue;
    bool matches = false;
    for (const auto& rule : record.policy.rules) {
      if (rule.resources != realm) continue;
      switch (kind) {
        case SubjectKind::Vnf: matches = rule.has_vnf_requirements(); break;
        case SubjectKind::ServiceVm: matches = rule.has_vm_requirements(); break;
        case SubjectKind::Slice: matches = true; break;
      }
      if (matches) break;
    }
    if (matches) out.push_back(record.policy);
  }
  return out;
}

std::optional<PolicyRecord> PolicyStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<PolicyRecord> PolicyStore::audit_listing() const {
  std::lock_guard lock(mutex_);
  std::vector<PolicyRecord> out;
  for (const auto& [id, record] : records_) out.push_back(record);
  return out;
}

std::string PolicyStore::listing_text() const {
  std::ostringstream os;
  for (const auto& record : audit_listing()) {
    if (record.deleted) continue;
    os << record.policy.id << '\t' << record.realm << '\t' << record.revision << '\t'
       << record.creator << '\n';
  }
  return os.str();
}

void PolicyStore::load() {
  std::lock_guard lock(mutex_);
  records_.clear();
  fs::path journal = root_ / "journal.log";
  if (!fs::exists(journal)) return;
  std::ifstream in(journal);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string op, id, revision, actor, role, stamp;
    if (!(std::getline(fields, op, '\t') && std::getline(fields, id, '\t') &&
          std::getline(fields, revision, '\t') && std::getline(fields, actor, '\t') &&
          std::getline(fields, role, '\t') && std::getline(fields, stamp)))
      throw std::runtime_error("malformed journal line: " + line);
    if (op == "delete") {
      auto it = records_.find(id);
      if (it != records_.end()) {
        it->second.deleted = true;
        it->second.updated_at = std::stoll(stamp);
      }
      continue;
    }
    PolicyRecord record;
    record.revision = std::stoi(revision);
    record.creator = actor;
    record.creator_role = role;
    record.updated_at = std::stoll(stamp);
    auto existing = records_.find(id);
    record.created_at =
        (op == "add" || existing == records_.end()) ? record.updated_at
                                                    : existing->second.created_at;
    records_[id] = record;  // document read below once the final revision is known
    records_[id].policy.id = id;
  }
  for (auto& [id, record] : records_) {
    fs::path doc = root_ / "policies" /
                   (id + (record.deleted ? ".xml.tombstone" : ".xml"));
    record.policy = credentials::parse_policy(read_file(doc));
    record.realm = policy_realm(record.policy);
  }
}

}  // namespace tmano::policyrepo
