#include "pfsgld/manifest.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "pfsgld/errors.hpp"

namespace pfsgld {

std::string file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::map<std::string, std::string>& config,
                    std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    double duration_seconds) {
  nlohmann::json j;
  j["tool"] = "pfsgld 0.1.0";
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = nlohmann::json::array();
  for (const auto& in : inputs)
    j["inputs"].push_back({{"path", in}, {"hash", file_content_hash(in)}});
  j["outputs"] = nlohmann::json::array();
  for (const auto& out : outputs)
    j["outputs"].push_back({{"path", out}, {"hash", file_content_hash(out)}});
  const auto now = std::chrono::system_clock::now();
  j["finished_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          now.time_since_epoch())
          .count();
  j["duration_s"] = duration_seconds;

  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace pfsgld
