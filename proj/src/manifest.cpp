#include "tloc/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "tloc/common.hpp"

namespace tloc {

using nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  json j{{"command", manifest.command},
         {"argv", manifest.argv},
         {"config", manifest.config},
         {"seed", manifest.seed},
         {"artifact_hashes", manifest.artifact_hashes},
         {"started_at", manifest.started_at},
         {"finished_at", manifest.finished_at},
         {"metrics", manifest.metrics}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace tloc
