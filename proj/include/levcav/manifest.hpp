#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace levcav {

inline constexpr const char* toolkit_version = "0.1.0";

std::string sha256_hex(std::string_view data);

/// Writes files into one output directory, refusing to replace existing files unless
/// `overwrite` is set, and records a checksum inventory.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, bool overwrite);

  /// Writes `content` to `name` (relative to the directory) and records its checksum.
  void write(const std::string& name, const std::string& content);

  /// Fails before any computation if a planned output already exists.
  void check_available(const std::string& name) const;

  const std::filesystem::path& directory() const { return dir_; }
  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  bool overwrite_;
  std::map<std::string, std::string> files_;  // name -> sha256
};

struct ManifestInfo {
  std::string command;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> failures;
};

/// Writes manifest.json listing every file the sink has written.
void write_manifest(OutputSink& sink, const ManifestInfo& info);

}  // namespace levcav
