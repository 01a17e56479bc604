#pragma once

// Reproducible random streams and an exact binomial sampler whose output
// depends only on the 64-bit engine sequence (std::mt19937_64 is specified
// bit-exactly by the standard), never on a library's distribution internals.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace surrogate {

// Identifies one simulated trial within one repetition of an experiment.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
  std::uint64_t repetition_index = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

// Distinguishes the independent sub-streams derived from one SeedSpec.
enum class StreamTag : std::uint64_t {
  Control = 1,
  Screen = 2,
  ScenarioDraw = 3,
  Parameters = 4,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Order-sensitive mix of the stream coordinates.
inline constexpr std::uint64_t derive_seed(const SeedSpec& spec, StreamTag tag,
                                           std::uint64_t attempt = 0) {
  std::uint64_t h = splitmix64(spec.master_seed);
  for (std::uint64_t part : {spec.trial_index, spec.repetition_index,
                             static_cast<std::uint64_t>(tag), attempt})
    h = splitmix64(h ^ splitmix64(part + 0x632BE59BD9B4E019ULL));
  return h;
}

// Folds a label (e.g. a design name) into a master seed.
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(splitmix64(seed) ^ (salt * 0xD1342543DE82EF95ULL + 1));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(const SeedSpec& spec, StreamTag tag, std::uint64_t attempt = 0)
      : engine_(derive_seed(spec, tag, attempt)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, k) by rejection; k > 0.
  std::uint64_t below(std::uint64_t k) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % k);
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % k;
  }

private:
  std::mt19937_64 engine_;
};

namespace detail {

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(2 pi)/2]
inline double stirling_tail(double k) {
  static const std::array<double, 10> table = [] {
    std::array<double, 10> t{};
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (int i = 0; i < 10; ++i) {
      const double x = i;
      t[i] = std::lgamma(x + 1.0) - ((x + 0.5) * std::log(x + 1.0) - (x + 1.0) + half_log_2pi);
    }
    return t;
  }();
  if (k < 10.0) return table[static_cast<int>(k)];
  const double kp1sq = (k + 1.0) * (k + 1.0);
  return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / (k + 1.0);
}

// Sum of geometric waiting times; exact, O(n p) expected work.
inline std::int64_t binomial_inversion(std::int64_t n, double p, Rng& rng) {
  const double log_q = std::log1p(-p);
  std::int64_t successes = 0;
  double position = 0.0;
  for (;;) {
    position += std::ceil(std::log(rng.uniform()) / log_q);
    if (position > static_cast<double>(n)) return successes;
    ++successes;
  }
}

// Hoermann (1993) transformed rejection with squeeze; requires n p >= 10, p <= 1/2.
inline std::int64_t binomial_btrs(std::int64_t n, double p, Rng& rng) {
  const double count = static_cast<double>(n);
  const double stddev = std::sqrt(count * p * (1.0 - p));
  const double b = 1.15 + 2.53 * stddev;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = count * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * stddev;
  const double mode = std::floor((count + 1.0) * p);

  for (;;) {
    const double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > count) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);

    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = (mode + 0.5) * std::log((mode + 1.0) / (r * (count - mode + 1.0))) +
                         (count + 1.0) * std::log((count - mode + 1.0) / (count - k + 1.0)) +
                         (k + 0.5) * std::log(r * (count - k + 1.0) / (k + 1.0)) +
                         stirling_tail(mode) + stirling_tail(count - mode) - stirling_tail(k) -
                         stirling_tail(count - k);
    if (v <= bound) return static_cast<std::int64_t>(k);
  }
}

}  // namespace detail

// Exact Binomial(n, p) draw.
inline std::int64_t sample_binomial(std::int64_t n, double p, Rng& rng) {
  if (n <= 0 || !(p > 0.0)) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - sample_binomial(n, 1.0 - p, rng);
  if (static_cast<double>(n) * p < 10.0) return detail::binomial_inversion(n, p, rng);
  return detail::binomial_btrs(n, p, rng);
}

}  // namespace surrogate
