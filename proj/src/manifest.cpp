#include "acrank/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

#include "acrank/io.hpp"

namespace acrank {

std::string git_blob_sha1(std::string_view contents) {
  const std::string header = "blob " + std::to_string(contents.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), contents.data(), contents.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha1 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string git_blob_sha1_file(const std::filesystem::path& path) {
  return git_blob_sha1(read_file(path));
}

std::string manifest_json(const RunManifest& m, const std::filesystem::path& dir) {
  nlohmann::ordered_json doc;
  doc["subcommand"] = m.subcommand;
  doc["seed"] = m.seed;
  doc["config"] = m.config;
  auto inputs = nlohmann::ordered_json::object();
  for (const auto& [role, path] : m.inputs) {
    inputs[role] = {{"path", path}, {"sha1", git_blob_sha1_file(path)}};
  }
  doc["inputs"] = inputs;
  auto outputs = nlohmann::ordered_json::object();
  for (const auto& [role, name] : m.outputs) {
    outputs[role] = {{"path", name}, {"sha1", git_blob_sha1_file(dir / name)}};
  }
  doc["outputs"] = outputs;
  doc["upstream_manifests"] = m.upstream;
  return doc.dump(2) + "\n";
}

void write_manifest(const RunManifest& m, const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                   : std::filesystem::path(".");
  write_file_atomic(manifest_path, manifest_json(m, dir));
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

}  // namespace acrank
