#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdd/rdd.hpp"

namespace rdd::testing {

inline std::vector<float> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = g(rng);
  normalize_in_place(v);
  return v;
}

inline Demonstration random_demo(const std::string& id, std::size_t length, std::size_t dim,
                                 std::mt19937_64& rng,
                                 std::optional<std::vector<std::size_t>> bounds = std::nullopt) {
  std::vector<float> frames;
  for (std::size_t k = 0; k < length; ++k) {
    const auto v = random_unit(dim, rng);
    frames.insert(frames.end(), v.begin(), v.end());
  }
  return Demonstration(id, dim, std::move(frames), std::move(bounds));
}

inline std::vector<IntervalFeature> random_features(std::size_t count, std::size_t dim,
                                                    std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dur(2, 40);
  std::vector<IntervalFeature> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({Embedding(random_unit(dim, rng)), dur(rng),
                   Interval{"db", i, i + 2}, FeatureMode::full});
  }
  return out;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rdd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace rdd::testing
