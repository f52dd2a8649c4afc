#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "navscale/study.hpp"

namespace navscale::study {

std::size_t workers_from_env() {
  const char* v = std::getenv("NAVSCALE_WORKERS");
  if (v == nullptr) return 1;
  try {
    const long n = std::stol(v);
    return n >= 1 ? static_cast<std::size_t>(n) : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

std::map<std::size_t, std::string> parallel_for(std::size_t n, std::size_t workers,
                                                const std::function<void(std::size_t)>& fn) {
  std::map<std::size_t, std::string> errors;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        const std::lock_guard lock(mutex);
        errors[i] = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    run();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return errors;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out) throw std::runtime_error(fmt::format("failed writing {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace navscale::study

namespace navscale::study {

void write_file_once(const std::filesystem::path& path, const std::string& content) {
  if (std::filesystem::exists(path)) {
    if (read_file(path) == content) return;
    throw std::runtime_error(fmt::format("refusing to overwrite {} with different content", path.string()));
  }
  write_file_atomic(path, content);
}

}  // namespace navscale::study
