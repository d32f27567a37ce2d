#pragma once

#include "lscs/model.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline lscs::Grid random_grid(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  lscs::Grid g(n);
  for (double& v : g.values()) v = u(rng);
  return g;
}

// Random values inside the disc inscribed in the grid, zero outside.
inline lscs::Grid random_disc_grid(std::size_t n, std::mt19937_64& rng, double margin = 1.0) {
  lscs::Grid g = random_grid(n, rng);
  const double c = 0.5 * (n - 1.0), rad = 0.5 * n - margin;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k)
      if ((r - c) * (r - c) + (k - c) * (k - c) > rad * rad) g(r, k) = 0.0;
  return g;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lscs_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace testing
