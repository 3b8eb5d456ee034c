#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

// Test-local randomness, intentionally separate from the library's NoiseGen
// so oracles do not share its code path.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }
  double normal() {
    // Marsaglia polar method; independent of the library's Box-Muller.
    for (;;) {
      const double a = uniform(-1.0, 1.0);
      const double b = uniform(-1.0, 1.0);
      const double s = a * a + b * b;
      if (s > 0.0 && s < 1.0) return a * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
  std::uint64_t integer(std::uint64_t n) { return rng_() % n; }

 private:
  std::mt19937_64 rng_;
};

inline std::vector<double> random_vector(TestRng& rng, std::size_t n,
                                         double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-12});
  return std::fabs(a - b) / denom;
}

// Unique scratch directory under the build tree's temp space.
inline std::filesystem::path test_tmp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("anc_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}
