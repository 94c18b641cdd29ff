#include "levcav/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <json.hpp>

#include "levcav/config.hpp"

namespace levcav {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

OutputSink::OutputSink(std::filesystem::path dir, bool overwrite)
    : dir_(std::move(dir)), overwrite_(overwrite) {
  std::filesystem::create_directories(dir_);
}

void OutputSink::check_available(const std::string& name) const {
  if (!overwrite_ && std::filesystem::exists(dir_ / name))
    throw ConfigError("output", "'" + (dir_ / name).string() +
                                    "' exists; pass --overwrite to replace it");
}

void OutputSink::write(const std::string& name, const std::string& content) {
  check_available(name);
  const auto path = dir_ / name;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("output", "cannot write '" + path.string() + "'");
  f << content;
  f.close();
  if (!f) throw ConfigError("output", "write failed for '" + path.string() + "'");
  files_[name] = sha256_hex(content);
}

void write_manifest(OutputSink& sink, const ManifestInfo& info) {
  nlohmann::ordered_json j;
  j["toolkit"] = "levcav";
  j["version"] = toolkit_version;
  j["command"] = info.command;
  j["config_sha256"] = info.config_hash;
  j["seeds"] = info.seeds;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& [name, hash] : sink.files())
    j["files"].push_back({{"path", name}, {"sha256", hash}});
  j["failures"] = info.failures;
  sink.write("manifest.json", j.dump(2) + "\n");
}

}  // namespace levcav
