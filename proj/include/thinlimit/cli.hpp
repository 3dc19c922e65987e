#pragma once

#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace thinlimit {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitSolver = 3, kExitVerification = 4 };

struct RunManifest {
  std::string command;
  std::string config_digest;  ///< sha256 of the effective config JSON
  std::map<std::string, std::string> parameters;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;

  nlohmann::json to_json() const;
};

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Entry point of the `thinlimit` executable. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace thinlimit
