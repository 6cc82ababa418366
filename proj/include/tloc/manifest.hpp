#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace tloc {

// One record per CLI run: what was asked, what configuration it resolved to,
// and hashes of the artifacts it produced.  Identical inputs must reproduce
// identical metrics and hashes; timestamps are informational.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> artifact_hashes;
  std::string started_at;
  std::string finished_at;
  nlohmann::json metrics;
};

std::string utc_timestamp();

// FNV-1a 64-bit over the file bytes, hex encoded.
std::string file_hash_hex(const std::string& path);

void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace tloc
