#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "ials/aip/dataset.hpp"
#include "ials/nn/checkpoint.hpp"
#include "ials/rl/policy.hpp"

namespace ials::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kManifestFile = "manifest.json";

inline std::string hash_hex(const json& j) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(derive_seed(0, j.dump())));
  return buf;
}

inline json versions() {
  return {{"ials", kVersion},
          {"dataset_format", aip::kDatasetVersion},
          {"checkpoint_format", nn::kCheckpointFormatVersion},
          {"policy_format", rl::kPolicyVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

/// Everything needed to rerun a command: its resolved config, the seed and the
/// code versions. Written next to the artifacts.
struct Manifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
  json extra = json::object();

  json to_json() const {
    return {{"command", command},   {"config", config},         {"config_hash", hash_hex(config)},
            {"seed", seed},         {"versions", versions()},   {"wall_clock_s", wall_clock_s},
            {"extra", extra}};
  }

  void write(const std::string& dir) const { nn::write_json_file((std::filesystem::path(dir) / kManifestFile).string(), to_json()); }
};

/// The manifest in `dir`, or null if there is none.
inline json read_manifest(const std::string& dir) {
  const auto p = std::filesystem::path(dir) / kManifestFile;
  if (!std::filesystem::exists(p)) return nullptr;
  return nn::read_json_file(p.string());
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace ials::cli
