#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rcm4::tools {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string sha256;
  std::uintmax_t size = 0;
  std::string name;  // relative to the output directory
};

/// Plain-text manifest:
///
///   # rcm4-manifest v1
///   # key: value           (provenance lines)
///   <sha256>  <size>  <relative path>
struct Manifest {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<ManifestEntry> entries;

  std::string to_string() const;
  static Manifest parse(const std::string& text);
  /// Recomputes every checksum; returns the names that differ or are missing.
  std::vector<std::string> verify(const std::filesystem::path& dir) const;
};

inline constexpr const char* kManifestName = "MANIFEST.txt";

/// Output files are written into a hidden staging directory and moved into
/// place by commit(). If the stage is destroyed without a commit (an
/// exception unwound through the run) the staging directory is removed, so
/// a failed run leaves no partial outputs behind.
class OutputStage {
 public:
  explicit OutputStage(std::filesystem::path out_dir);
  ~OutputStage();
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  const std::filesystem::path& out_dir() const { return out_; }
  /// Path for a new output file inside the stage.
  std::filesystem::path file(const std::string& name);
  void write(const std::string& name, std::string_view content);
  /// Moves the staged files into the output directory and writes the
  /// manifest over all of them.
  Manifest commit(const std::vector<std::pair<std::string, std::string>>& meta);

 private:
  std::filesystem::path out_;
  std::filesystem::path stage_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

/// Default output root: $RCM4_OUT if set, otherwise ./rcm4-out.
std::filesystem::path default_output_root();

}  // namespace rcm4::tools
