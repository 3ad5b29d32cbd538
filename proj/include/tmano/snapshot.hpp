// Static/dynamic information snapshots shared by the authority, the trust
// manager and the simulator: a subject's state when idle versus when
// actively participating in network activity.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmano {

enum class Phase : std::uint8_t { PreDeployment, Active };

inline const char* phase_name(Phase p) {
  return p == Phase::PreDeployment ? "pre_deployment" : "active";
}

struct StaticState {
  std::string image_digest;  // lowercase hex, sha256
  std::vector<std::string> manifest;  // configured services/processes
  std::string build_info;
};

struct DynamicState {
  std::vector<std::string> processes;
  std::vector<std::string> shells;
  std::vector<std::string> open_endpoints;
  bool memory_integrity = true;
  bool address_randomisation = true;

  bool runs(const std::string& process) const {
    return std::find(processes.begin(), processes.end(), process) != processes.end();
  }
};

class InfoSnapshot {
 public:
  InfoSnapshot(std::string subject, Phase phase, std::int64_t captured_at, StaticState st,
               std::optional<DynamicState> dyn)
      : subject_(std::move(subject)),
        phase_(phase),
        captured_at_(captured_at),
        static_(std::move(st)),
        dynamic_(std::move(dyn)) {
    if (phase_ == Phase::PreDeployment && dynamic_.has_value())
      throw std::invalid_argument("pre-deployment snapshots carry no dynamic state");
    if (phase_ == Phase::Active && !dynamic_.has_value())
      throw std::invalid_argument("active snapshots require dynamic state");
  }

  const std::string& subject() const { return subject_; }
  Phase phase() const { return phase_; }
  std::int64_t captured_at() const { return captured_at_; }
  const StaticState& static_state() const { return static_; }
  bool has_dynamic() const { return dynamic_.has_value(); }

  // Every read of the dynamic state is counted, so tests can assert that
  // pre-deployment evaluations never touch it.
  const DynamicState& dynamic_state() const {
    if (!dynamic_) throw std::logic_error("snapshot has no dynamic state (" + subject_ + ")");
    ++dynamic_reads_;
    return *dynamic_;
  }
  long dynamic_read_count() const { return dynamic_reads_; }

 private:
  std::string subject_;
  Phase phase_;
  std::int64_t captured_at_;
  StaticState static_;
  std::optional<DynamicState> dynamic_;
  mutable long dynamic_reads_ = 0;
};

}  // namespace tmano
