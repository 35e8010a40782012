#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace taskdecomp {

// SHA-256 of an arbitrary byte string, lowercase hex.
std::string sha256_hex(std::string_view data);

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::string base64_encode(std::string_view data);
std::vector<std::uint8_t> base64_decode(std::string_view encoded);

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based RNG: every draw is splitmix64(seed, counter++), so streams are
// reproducible across platforms and independent of call-site ordering quirks.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(splitmix64(seed ^ (stream * 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() { return splitmix64(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
// Writes to a temp file in the same directory, then renames over the target.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// snprintf-backed fixed-precision formatting; locale-independent.
std::string format_fixed(double value, int precision);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

}  // namespace taskdecomp
