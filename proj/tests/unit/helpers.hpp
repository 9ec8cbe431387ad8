#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "dcpfl/nn.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dcpfl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline dcpfl::ModelParams random_model(std::vector<std::size_t> dims, std::mt19937_64& rng,
                                       double scale = 1.0) {
  dcpfl::ModelParams m(std::move(dims));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t k = 0; k < m.num_layers(); ++k) {
    for (double& w : m.layer(k).weights) w = u(rng);
    for (double& b : m.layer(k).biases) b = u(rng);
  }
  return m;
}

}  // namespace testutil
