#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace piccolo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy. Structural errors are caller bugs (wrong dimensions,
// invalid arguments), numeric errors are non-finite data at runtime,
// domain errors are points outside a generator's domain, config errors
// come from user-supplied experiment files.
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_finite(const Vec& x, const char* what) {
  if (!x.allFinite()) throw NumericError(std::string(what) + ": non-finite value");
}

inline void require_dim(const Vec& x, Eigen::Index d, const char* what) {
  if (x.size() != d)
    throw StructuralError(std::string(what) + ": dimension mismatch (" +
                          std::to_string(x.size()) + " vs " + std::to_string(d) + ")");
}

// splitmix64, used both as a stream mixer and to seed per-component RNGs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic RNG with explicit distributions so output does not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate nearby seeds
    for (int i = 0; i < 4; ++i) splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one value per call keeps the stream layout simple.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive range
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  Vec gaussian_vector(Eigen::Index d) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  // Uniform sample from the centered L2 ball of given radius.
  Vec ball(Eigen::Index d, double radius) {
    Vec v = gaussian_vector(d);
    double n = v.norm();
    if (n == 0.0) return Vec::Zero(d);
    double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(d));
    return (r / n) * v;
  }

  // Sample an index with probability proportional to weights[i] (inverse CDF).
  Eigen::Index categorical(const Vec& weights) {
    double total = weights.sum();
    double u = uniform() * total;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

// Per-component stream derivation: hash (base seed, component tag, index) so
// adding a consumer never perturbs the draws of existing ones.
inline Rng derive_rng(std::uint64_t base_seed, const std::string& tag, std::uint64_t index) {
  std::uint64_t s = base_seed;
  splitmix64(s);
  s ^= fnv1a(tag);
  splitmix64(s);
  s ^= 0x5851f42d4c957f2dULL * (index + 1);
  return Rng(s);
}

// Full-precision decimal formatting (17 significant digits) so CSV output
// round-trips to the same double.
std::string format_double(double x);

}  // namespace piccolo
