// The T-MANO App: command-line front end over the simulator, trust manager,
// policy repository and reference store. State lives in a workspace
// directory; simulator state is reconstructed deterministically by
// replaying the workspace's command journal.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmano/authority.hpp"
#include "tmano/credentials.hpp"
#include "tmano/crypto.hpp"
#include "tmano/nfvsim.hpp"
#include "tmano/policyrepo.hpp"
#include "tmano/trustmgr.hpp"

namespace fs = std::filesystem;
using namespace tmano;

namespace {

// Exit-code contract, stable for scripting.
constexpr int kExitTrusted = 0;
constexpr int kExitGeneric = 1;
constexpr int kExitUntrusted = 2;
constexpr int kExitUncertain = 3;
constexpr int kExitUnknownSlice = 4;
constexpr int kExitAuthorization = 5;

struct CliError : std::runtime_error {
  CliError(int exit_code, std::string code, const std::string& message)
      : std::runtime_error(message), exit_code(exit_code), code(std::move(code)) {}
  int exit_code;
  std::string code;  // machine-parsable error label
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitGeneric, "io", "cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kExitGeneric, "io", "cannot write " + path.string());
  out << content;
}

std::string hex_encode(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

std::string hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) throw CliError(kExitGeneric, "journal", "odd-length hex");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw CliError(kExitGeneric, "journal", "bad hex digit");
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
    out.push_back(static_cast<char>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, '\t')) fields.push_back(item);
  return fields;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_csv(s)) out.push_back(std::stoi(item));
  return out;
}

// One command per workspace at a time.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(const fs::path& root) {
    fd_ = ::open((root / "lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0)
      throw CliError(kExitGeneric, "lock", "cannot lock workspace " + root.string());
  }
  ~WorkspaceLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

class App {
 public:
  explicit App(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "descriptors");
    lock_ = std::make_unique<WorkspaceLock>(root_);
    policies_ = std::make_unique<policyrepo::PolicyStore>(root_);

    fs::path key_path = root_ / "ta_key.pem";
    if (fs::exists(key_path)) {
      ta_ = std::make_unique<authority::TrustedAuthority>("TA", crypto::KeyPair::load_pem(
                                                                    key_path.string()));
    } else {
      auto key = crypto::KeyPair::generate();
      key.save_pem(key_path.string());
      ta_ = std::make_unique<authority::TrustedAuthority>("TA", std::move(key));
    }
    sim_ = std::make_unique<nfvsim::Simulator>(*ta_, refs_, *policies_);
    replay();
  }

  nfvsim::Simulator& sim() { return *sim_; }
  policyrepo::PolicyStore& policies() { return *policies_; }
  authority::ReferenceStore& refs() { return refs_; }
  const fs::path& root() const { return root_; }

  fs::path descriptor_path(const std::string& slice_id) const {
    return root_ / "descriptors" / (slice_id + ".txt");
  }

  void journal(const std::vector<std::string>& fields) {
    std::ofstream out(root_ / "sim.journal", std::ios::app);
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "\t" : "") << fields[i];
    out << "\n";
  }

  // Every mutating command appends exactly one audit line.
  void audit(const std::string& actor, const std::string& line) {
    std::ofstream out(root_ / "audit.log", std::ios::app);
    out << std::time(nullptr) << "\t" << (actor.empty() ? "-" : actor) << "\t" << line
        << "\n";
  }

 private:
  void replay() {
    fs::path journal_path = root_ / "sim.journal";
    if (!fs::exists(journal_path)) return;
    std::ifstream in(journal_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split_tabs(line);
      const std::string& op = f.at(0);
      if (op == "image") {
        sim_->register_image(f.at(1), hex_decode(f.at(2)),
                             f.at(3) == "-" ? std::vector<std::string>{} : split_csv(f.at(3)));
      } else if (op == "ref") {
        refs_.register_reference(f.at(1), f.at(2), f.at(3), "manufacturer");
      } else if (op == "interval") {
        sim_->set_evaluation_interval(std::stoll(f.at(1)));
      } else if (op == "create") {
        sim_->create_slice(nfvsim::parse_slice_descriptor(read_file(descriptor_path(f.at(1)))));
      } else if (op == "deploy") {
        auto result = sim_->deploy_slice(f.at(1));
        if (!result.deployed)
          std::cerr << "warning: replayed deployment of " << f.at(1)
                    << " no longer passes the gate\n";
      } else if (op == "inject") {
        nfvsim::SimEvent event;
        event.at = std::stoll(f.at(1));
        event.kind = f.at(2);
        event.target = f.at(3);
        for (std::size_t i = 4; i < f.size(); ++i) {
          auto eq = f[i].find('=');
          event.payload[f[i].substr(0, eq)] = f[i].substr(eq + 1);
        }
        sim_->inject_event(event);
      } else if (op == "advance") {
        sim_->advance(std::stoll(f.at(1)));
      } else {
        throw CliError(kExitGeneric, "journal", "unknown journal op: " + op);
      }
    }
  }

  fs::path root_;
  std::unique_ptr<WorkspaceLock> lock_;
  std::unique_ptr<policyrepo::PolicyStore> policies_;
  std::unique_ptr<authority::TrustedAuthority> ta_;
  authority::ReferenceStore refs_;
  std::unique_ptr<nfvsim::Simulator> sim_;
};

int status_exit_code(trustmgr::TrustStatus status) {
  switch (status) {
    case trustmgr::TrustStatus::Trusted: return kExitTrusted;
    case trustmgr::TrustStatus::Untrusted: return kExitUntrusted;
    case trustmgr::TrustStatus::Uncertain: return kExitUncertain;
  }
  return kExitUncertain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"tmano - trust-aware NFV management front end"};
  cli.require_subcommand(1);
  // Global options (workspace, actor) may appear after the subcommand.
  cli.fallthrough();

  std::string workspace;
  if (const char* env = std::getenv("TMANO_WORKSPACE")) workspace = env;
  if (workspace.empty()) workspace = "tmano_ws";
  cli.add_option("-w,--workspace", workspace, "workspace root directory")
      ->envname("TMANO_WORKSPACE");

  std::string actor, role;
  cli.add_option("--actor", actor, "acting identity for mutations");
  cli.add_option("--role", role, "acting role (mutations require admin)");

  // slice
  auto* slice = cli.add_subcommand("slice", "slice lifecycle");
  std::string descriptor_file, slice_id;
  auto* slice_create = slice->add_subcommand("create", "register a slice descriptor");
  slice_create->add_option("descriptor", descriptor_file, "descriptor file")->required();
  auto* slice_deploy = slice->add_subcommand("deploy", "run the gate and deploy");
  slice_deploy->add_option("id", slice_id, "slice id")->required();
  auto* slice_list = slice->add_subcommand("list", "list slices");

  // trust
  auto* trust = cli.add_subcommand("trust", "trust queries");
  bool as_json = false;
  auto* trust_eval = trust->add_subcommand("eval", "evaluate a slice");
  trust_eval->add_option("id", slice_id, "slice id")->required();
  trust_eval->add_flag("--json", as_json, "emit the verdict as JSON");

  // policy
  auto* policy = cli.add_subcommand("policy", "trust policy repository");
  std::string policy_file, policy_id;
  auto* policy_add = policy->add_subcommand("add", "add a policy document");
  policy_add->add_option("file", policy_file, "policy XML file")->required();
  auto* policy_update = policy->add_subcommand("update", "replace a policy document");
  policy_update->add_option("id", policy_id, "policy id")->required();
  policy_update->add_option("file", policy_file, "policy XML file")->required();
  auto* policy_rm = policy->add_subcommand("rm", "delete a policy");
  policy_rm->add_option("id", policy_id, "policy id")->required();
  auto* policy_list = policy->add_subcommand("list", "list policies");

  // sim
  auto* sim_cmd = cli.add_subcommand("sim", "simulator control");
  std::string image_id, content_file, manifest_csv = "-", schedule_file;
  std::int64_t ticks = 0;
  auto* sim_image = sim_cmd->add_subcommand("image", "register a VM image");
  sim_image->add_option("id", image_id, "image id")->required();
  sim_image->add_option("--content-file", content_file, "image bytes (default: synthetic)");
  sim_image->add_option("--manifest", manifest_csv, "comma-separated expected processes");
  auto* sim_inject = sim_cmd->add_subcommand("inject", "queue events from a schedule file");
  sim_inject->add_option("schedule", schedule_file, "event schedule file")->required();
  auto* sim_advance = sim_cmd->add_subcommand("advance", "advance simulated time");
  sim_advance->add_option("ticks", ticks, "ticks to advance")->required();

  // bench
  auto* bench = cli.add_subcommand("bench", "benchmarks");
  std::string vms_list = "10,20,30,40", props_list = "100,200,300,400";
  int reps = 3;
  auto* bench_opd = bench->add_subcommand("opd", "on-boarding delay benchmark");
  bench_opd->add_option("--vms", vms_list, "VM counts, comma-separated");
  bench_opd->add_option("--properties", props_list, "property counts, comma-separated");
  bench_opd->add_option("--reps", reps, "repetitions per cell");

  // ta
  auto* ta_cmd = cli.add_subcommand("ta", "trusted authority administration");
  std::string identity, digest_file;
  auto* ta_register = ta_cmd->add_subcommand("register-ref", "register a reference digest");
  ta_register->add_option("identity", identity, "artifact identity")->required();
  ta_register->add_option("digest-file", digest_file, "file holding the hex digest")->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    // The benchmark needs no workspace state.
    if (bench_opd->parsed()) {
      auto reports =
          nfvsim::run_opd_benchmark(parse_int_list(vms_list), parse_int_list(props_list), reps);
      std::cout << nfvsim::bench_table(reports);
      return kExitTrusted;
    }

    App app{fs::path(workspace)};
    policyrepo::Actor acting{actor, role};

    if (slice_create->parsed()) {
      std::string text = read_file(descriptor_file);
      auto descriptor = nfvsim::parse_slice_descriptor(text);
      write_file(app.descriptor_path(descriptor.slice_id), text);
      app.sim().create_slice(descriptor);
      app.journal({"create", descriptor.slice_id});
      app.audit(actor, "slice create " + descriptor.slice_id);
      std::cout << "created " << descriptor.slice_id << "\n";
      return kExitTrusted;
    }
    if (slice_deploy->parsed()) {
      auto result = app.sim().deploy_slice(slice_id);
      if (!result.deployed) {
        for (const auto& failure : result.failures) std::cout << "gate: " << failure << "\n";
        throw CliError(kExitGeneric, "gate", "deployment gate failed for " + slice_id);
      }
      app.journal({"deploy", slice_id});
      app.audit(actor, "slice deploy " + slice_id);
      std::cout << "deployed " << slice_id << "\n";
      return kExitTrusted;
    }
    if (slice_list->parsed()) {
      for (const auto& id : app.sim().slice_ids()) {
        const auto& descriptor = app.sim().descriptor(id);
        std::cout << id << "\t" << (app.sim().is_deployed(id) ? "deployed" : "staged") << "\tv"
                  << app.sim().descriptor_version(id) << "\t" << descriptor.vnfs.size()
                  << " vnfs\trealm=" << descriptor.realm << "\n";
      }
      return kExitTrusted;
    }

    if (trust_eval->parsed()) {
      auto ids = app.sim().slice_ids();
      if (std::find(ids.begin(), ids.end(), slice_id) == ids.end())
        throw CliError(kExitUnknownSlice, "unknown_slice", "no such slice: " + slice_id);
      auto verdict = app.sim().trust_manager().evaluate_slice(slice_id);
      std::cout << (as_json ? trustmgr::export_verdict_json(verdict) + "\n"
                            : trustmgr::export_verdict(verdict));
      return status_exit_code(verdict.aggregate);
    }

    if (policy_add->parsed()) {
      auto doc = credentials::parse_policy(read_file(policy_file));
      auto record = app.policies().add_policy(doc, acting, std::time(nullptr));
      app.audit(actor, "policy add " + record.policy.id);
      std::cout << "added " << record.policy.id << " rev " << record.revision << "\n";
      return kExitTrusted;
    }
    if (policy_update->parsed()) {
      auto doc = credentials::parse_policy(read_file(policy_file));
      doc.id = policy_id;
      auto record = app.policies().update_policy(policy_id, doc, acting, std::time(nullptr));
      app.audit(actor, "policy update " + policy_id);
      std::cout << "updated " << policy_id << " rev " << record.revision << "\n";
      return kExitTrusted;
    }
    if (policy_rm->parsed()) {
      app.policies().delete_policy(policy_id, acting, std::time(nullptr));
      app.audit(actor, "policy rm " + policy_id);
      std::cout << "deleted " << policy_id << "\n";
      return kExitTrusted;
    }
    if (policy_list->parsed()) {
      std::cout << app.policies().listing_text();
      return kExitTrusted;
    }

    if (sim_image->parsed()) {
      std::string bytes = content_file.empty()
                              ? "synthetic-image:" + image_id + std::string(2048, '#')
                              : read_file(content_file);
      auto manifest = manifest_csv == "-" ? std::vector<std::string>{} : split_csv(manifest_csv);
      app.sim().register_image(image_id, bytes, manifest);
      app.journal({"image", image_id, hex_encode(bytes), manifest_csv});
      app.audit(actor, "sim image " + image_id);
      std::cout << "registered image " << image_id << "\n";
      return kExitTrusted;
    }
    if (sim_inject->parsed()) {
      auto events = nfvsim::parse_event_schedule(read_file(schedule_file));
      for (const auto& event : events) {
        app.sim().inject_event(event);
        std::vector<std::string> fields{"inject", std::to_string(event.at), event.kind,
                                        event.target};
        for (const auto& [k, v] : event.payload) fields.push_back(k + "=" + v);
        app.journal(fields);
      }
      app.audit(actor, "sim inject " + schedule_file + " (" + std::to_string(events.size()) +
                           " events)");
      std::cout << "queued " << events.size() << " events\n";
      return kExitTrusted;
    }
    if (sim_advance->parsed()) {
      auto lines = app.sim().advance(ticks);
      app.journal({"advance", std::to_string(ticks)});
      app.audit(actor, "sim advance " + std::to_string(ticks));
      for (const auto& line : lines) std::cout << line << "\n";
      std::cout << "tick " << app.sim().now() << "\n";
      return kExitTrusted;
    }

    if (ta_register->parsed()) {
      std::string digest = trim(read_file(digest_file));
      app.refs().register_reference(identity, digest, "SHA2", "manufacturer");
      app.journal({"ref", identity, digest, "SHA2"});
      app.audit(actor, "ta register-ref " + identity);
      std::cout << "registered reference for " << identity << "\n";
      return kExitTrusted;
    }

    throw CliError(kExitGeneric, "usage", "no subcommand given");
  } catch (const CliError& e) {
    std::cerr << "error:" << e.code << ": " << e.what() << "\n";
    return e.exit_code;
  } catch (const policyrepo::AuthorizationError& e) {
    std::cerr << "error:authorization: " << e.what() << "\n";
    return kExitAuthorization;
  } catch (const std::exception& e) {
    std::cerr << "error:invalid: " << e.what() << "\n";
    return kExitGeneric;
  }
}
