#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ndnreuse {

// Error kinds surfaced by the library. The CLI maps ConfigError to exit
// code 1 and DomainError/RuntimeError to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// SplitMix64 finalizer; used to derive child seeds from (seed, stream).
constexpr std::uint64_t
mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t
derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Explicitly seeded random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All variates are derived from raw 64-bit outputs here rather than
/// through <random> distributions, whose algorithms are implementation-defined,
/// so sequences are reproducible across standard libraries.
class Rng {
public:
  static constexpr std::string_view algorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed = 0) : m_seed(seed), m_engine(seed) {}

  std::uint64_t seed() const noexcept { return m_seed; }

  std::uint64_t next() { return m_engine(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Uniform integer in [0, n); unbiased by rejection.
  std::uint64_t below(std::uint64_t n)
  {
    if (n == 0)
      throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  /// Independent generator for a named sub-stream.
  Rng fork(std::uint64_t stream) const { return Rng(derive_seed(m_seed, stream)); }

private:
  std::uint64_t m_seed;
  std::mt19937_64 m_engine;
};

/// Fixed 9-significant-digit rendering used in every CSV this project writes.
inline std::string
fmt_num(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

} // namespace ndnreuse
