#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/policy.hpp"

namespace navscale::policy {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'N', 'V', 'S', 'C', 'P', 'O', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const MlpPolicy& policy, const std::string& metadata) {
  const PolicyShape& s = policy.shape();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.history));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.rays));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.horizon));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden.size()));
  for (std::size_t h : s.hidden) put<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  put<std::uint64_t>(out, metadata.size());
  out.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  for (const auto& layer : policy.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put<double>(out, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put<double>(out, layer.bias(r));
  }
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

MlpPolicy load_checkpoint(std::istream& in, std::string* metadata) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a policy checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error(fmt::format("unsupported checkpoint version {}", version));
  PolicyShape shape;
  shape.history = get<std::uint32_t>(in);
  shape.rays = get<std::uint32_t>(in);
  shape.horizon = get<std::uint32_t>(in);
  const auto n_hidden = get<std::uint32_t>(in);
  if (n_hidden > 64) throw std::runtime_error("checkpoint declares too many layers");
  shape.hidden.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) shape.hidden.push_back(get<std::uint32_t>(in));
  const auto meta_len = get<std::uint64_t>(in);
  if (meta_len > (1u << 20)) throw std::runtime_error("checkpoint metadata too long");
  std::string meta(meta_len, '\0');
  if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len))) throw std::runtime_error("checkpoint truncated");
  MlpPolicy policy(shape);
  for (auto& layer : policy.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = get<double>(in);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = get<double>(in);
  }
  if (metadata != nullptr) *metadata = std::move(meta);
  return policy;
}

void save_checkpoint_file(const std::string& path, const MlpPolicy& policy, const std::string& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path));
  save_checkpoint(out, policy, metadata);
}

MlpPolicy load_checkpoint_file(const std::string& path, std::string* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path));
  return load_checkpoint(in, metadata);
}

}  // namespace navscale::policy
