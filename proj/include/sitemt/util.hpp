#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sitemt {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

// FNV-1a; stable across platforms, used for provenance hashes.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset);
std::string hex64(std::uint64_t v);
std::string hash_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_lines(std::string_view text);

// Writes to a sibling temp file, then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split_ws(std::string_view text);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
std::string trim(std::string_view s);

// printf("%.*g"); shortest decimal text with `digits` significant digits.
std::string format_g(double v, int digits);
std::string format_fixed(double v, int decimals);

// Seeded generator whose output sequence is identical on every platform
// (std::uniform_int_distribution and std::shuffle are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool coin() { return (next() >> 63) != 0; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sitemt
