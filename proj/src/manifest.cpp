#include "bwf/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bwf/error.hpp"

namespace bwf {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a_hex(buf.str());
}

void Manifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), fnv1a_file(path));
}

void Manifest::add_output(const std::filesystem::path& path, const std::string& name) {
  outputs.emplace_back(name, fnv1a_file(path));
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = std::move(cfg);
  auto in = nlohmann::ordered_json::array();
  for (const auto& [p, h] : inputs) in.push_back({{"path", p}, {"fnv1a", h}});
  j["inputs"] = std::move(in);
  auto out = nlohmann::ordered_json::array();
  for (const auto& [p, h] : outputs) out.push_back({{"file", p}, {"fnv1a", h}});
  j["outputs"] = std::move(out);
  return j.dump(2) + "\n";
}

}  // namespace bwf
