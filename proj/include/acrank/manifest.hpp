#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace acrank {

// SHA-1 of "blob <size>\0<contents>", i.e. what `git hash-object` prints.
std::string git_blob_sha1(std::string_view contents);
std::string git_blob_sha1_file(const std::filesystem::path& path);

// Written next to every subcommand's outputs. Contains no timestamps so
// identical runs produce identical manifests.
struct RunManifest {
  std::string subcommand;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // role -> path as given
  std::map<std::string, std::string> outputs;  // role -> file name
  // Manifests of upstream runs (role -> blob hash), e.g. the checkpoint's.
  std::map<std::string, std::string> upstream;
};

// Hashes every input and output file; outputs are resolved relative to dir.
std::string manifest_json(const RunManifest& m, const std::filesystem::path& dir);
void write_manifest(const RunManifest& m, const std::filesystem::path& manifest_path);

// "<file>.manifest.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace acrank
