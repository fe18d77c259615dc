#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "climgen/climdata.hpp"
#include "climgen/random.hpp"

namespace climgen::testing {

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("climgen_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Timestamp at(const char* iso) { return *parse_iso8601(iso); }

inline ClimateSeries make_series(Variable v, Cadence c, Timestamp start, const std::vector<double>& values) {
  ClimateSeries s{v, c, {}, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.times.push_back(start + static_cast<Timestamp>(i) * step_seconds(c));
    s.values.emplace_back(values[i]);
  }
  return s;
}

inline std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = rng.normal();
  return out;
}

inline std::vector<double> ar_process(const std::vector<double>& phi, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t burn = 500;
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double v = rng.normal();
    for (std::size_t k = 0; k < phi.size() && k < t; ++k) v += phi[k] * x[t - k - 1];
    x[t] = v;
  }
  return {x.begin() + burn, x.end()};
}

}  // namespace climgen::testing
