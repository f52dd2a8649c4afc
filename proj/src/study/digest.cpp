#include <array>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "navscale/study.hpp"

namespace navscale::study {
namespace {

std::string to_hex(const unsigned char* bytes, unsigned int n) {
  std::string out;
  out.reserve(2 * n);
  for (unsigned int i = 0; i < n; ++i) out += fmt::format("{:02x}", bytes[i]);
  return out;
}

std::string section_digest(const ExperimentConfig& config, std::initializer_list<const char*> sections,
                           const std::string& extra) {
  const auto all = nlohmann::json::parse(config_to_json(config));
  nlohmann::json picked = nlohmann::json::object();
  for (const char* s : sections) picked[s] = all.at(s);
  return sha256_hex(std::string(kCodeVersion) + "\n" + picked.dump() + "\n" + extra);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return to_hex(md.data(), len);
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string config_digest(const ExperimentConfig& config) {
  return sha256_hex(std::string(kCodeVersion) + "\n" + config_to_json(config));
}

std::string data_digest(const ExperimentConfig& config) { return section_digest(config, {"data"}, ""); }

std::string job_digest(const ExperimentConfig& config, const std::string& job_name, std::uint64_t seed) {
  return section_digest(config, {"data", "policy", "train", "eval"}, fmt::format("{}:{}", job_name, seed));
}

std::string provenance(const std::string& digest, std::uint64_t seed) {
  return fmt::format("config_digest={} seed={}", digest, seed);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

}  // namespace navscale::study
