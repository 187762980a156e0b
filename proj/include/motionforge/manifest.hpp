#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace motionforge {

// FNV-1a over file bytes, rendered as 16 hex digits.
inline std::string content_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("manifest: cannot hash '" + path + "'");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!is) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

struct RunManifest {
  std::string command;
  std::string config_path;
  std::map<std::string, std::string> resolved;  // flag/config values
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    if (!config_path.empty()) j["config"] = config_path;
    j["resolved"] = resolved;
    j["seed"] = seed;
    nlohmann::json ins = nlohmann::json::array();
    for (const auto& p : inputs)
      ins.push_back({{"path", p}, {"hash", content_hash(p)}});
    j["inputs"] = std::move(ins);
    j["outputs"] = outputs;
    const auto now = std::chrono::system_clock::now();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
            .count();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("manifest: cannot open '" + path + "'");
    os << j.dump(2) << '\n';
  }
};

}  // namespace motionforge
