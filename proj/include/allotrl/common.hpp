#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace allotrl {

inline constexpr int kNumAssets = 3;
inline constexpr int kNumIndexes = 3;
inline constexpr int kObsDim = 19;

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Error hierarchy. Every module throws one of these; the CLI maps
// ValidationError/ArgumentError-family to exit code 1, the rest to 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ArgumentError : Error {
  using Error::Error;
};
struct InsufficientDataError : Error {
  using Error::Error;
};
struct RangeError : Error {
  using Error::Error;
};
struct StateError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double l1_distance(const Vec3& a, const Vec3& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

inline double quadratic_form(const Vec3& w, const Mat3& m) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += w[i] * m[i][j] * w[j];
  return s;
}

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

// Calendar date as days since 1970-01-01, civil-calendar arithmetic
// (Hinnant's days-from-civil), no timezone handling.
struct Date {
  std::int64_t days = 0;

  static Date from_ymd(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return Date{era * 146097 + static_cast<std::int64_t>(doe) - 719468};
  }

  std::array<int, 3> to_ymd() const {
    std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m),
            static_cast<int>(d)};
  }

  static Date parse_iso(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    if (std::sscanf(s.c_str(), "%d%c%u%c%u", &y, &dash1, &m, &dash2, &d) != 5 ||
        dash1 != '-' || dash2 != '-' || m < 1 || m > 12 || d < 1 || d > 31) {
      throw ParseError("invalid ISO-8601 date: '" + s + "'");
    }
    return from_ymd(y, m, d);
  }

  std::string to_iso() const {
    auto [y, m, d] = to_ymd();
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
  }

  auto operator<=>(const Date&) const = default;
};

// Deterministic RNG: mt19937_64 plus hand-rolled distributions so that
// streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  std::uint64_t uniform_int(std::uint64_t n) {  // [0, n)
    if (n == 0) throw ArgumentError("uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  // xorshift-multiply over a splitmix-initialized state; period is ample for
  // training runs and the stream is fully specified here.
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for provenance hashes in output files.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) {
  return fnv1a(s.data(), s.size());
}

}  // namespace allotrl
