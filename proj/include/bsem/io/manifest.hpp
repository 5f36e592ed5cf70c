#pragma once

// Run manifests: what was run, with which inputs, producing which files.

#include "bsem/core/types.hpp"
#include "bsem/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace bsem::io {

/// 64-bit FNV-1a of a byte string.
[[nodiscard]] inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] inline std::string file_digest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(ss.str());
  return os.str();
}

[[nodiscard]] inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv, std::uint64_t seed)
      : command_(std::move(command)), argv_(std::move(argv)), seed_(seed), started_(utc_now()) {}

  void input(const std::string& role, const std::string& path) { inputs_.push_back({role, path, file_digest(path)}); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  /// Writes manifest.json into `dir`, digesting every registered output.
  void write(const std::filesystem::path& dir, int exit_code) const {
    nlohmann::json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["seed"] = seed_;
    j["tool_version"] = kVersion;
    j["inputs"] = nlohmann::json::array();
    for (const auto& in : inputs_) j["inputs"].push_back({{"role", in.role}, {"path", in.path}, {"digest", in.digest}});
    j["outputs"] = nlohmann::json::array();
    for (const auto& out : outputs_) {
      j["outputs"].push_back({{"path", std::filesystem::path(out).filename().string()}, {"digest", file_digest(out)}});
    }
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    j["exit_code"] = exit_code;
    j["started"] = started_;
    j["finished"] = utc_now();
    std::ofstream f(dir / "manifest.json");
    if (!f) throw InputError("cannot write manifest in '" + dir.string() + "'");
    f << j.dump(2) << "\n";
  }

 private:
  struct Input {
    std::string role, path, digest;
  };
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_;
  std::string started_;
  std::vector<Input> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace bsem::io
