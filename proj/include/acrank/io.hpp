#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acrank {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target, so readers
// never see a half-written output.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

// Seeded generator shared by every stochastic component. The helpers below
// avoid std:: distributions, whose output is implementation-defined, so
// seeded runs are portable across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) %
         n;
}

double standard_normal(Rng& rng);

template <typename It>
void shuffle(It first, It last, Rng& rng) {
  auto n = last - first;
  for (decltype(n) i = n - 1; i > 0; --i) {
    auto j = static_cast<decltype(n)>(
        uniform_index(rng, static_cast<std::uint64_t>(i + 1)));
    std::iter_swap(first + i, first + j);
  }
}

}  // namespace acrank
