#ifndef BWF_MANIFEST_HPP
#define BWF_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace bwf {

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string fnv1a_file(const std::filesystem::path& path);

/// Record of one CLI run. Holds no timestamps or host details, so reruns
/// with the same inputs produce the same manifest.
struct Manifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> config;  // resolved key = value
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, hash

  void add_input(const std::filesystem::path& path);
  /// Hashes the file as written; `name` is recorded relative to the output dir.
  void add_output(const std::filesystem::path& path, const std::string& name);
  std::string to_json() const;
};

}  // namespace bwf

#endif  // BWF_MANIFEST_HPP
