#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rglr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline const char* version() {
#ifdef RGLR_VERSION
  return RGLR_VERSION;
#else
  return "dev";
#endif
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyCloud : public Error {
 public:
  EmptyCloud() : Error("point cloud is empty") {}
};

class DegenerateCloud : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class SingularPrecision : public Error {
 public:
  using Error::Error;
};

class TooFewBlueNeighbors : public Error {
 public:
  using Error::Error;
};

class CollinearPoints : public Error {
 public:
  using Error::Error;
};

class NoFlatPatches : public Error {
 public:
  NoFlatPatches() : Error("no flat patch of the required size was found") {}
};

class DegenerateModels : public Error {
 public:
  using Error::Error;
};

class ZeroMatrix : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// All randomness flows through this wrapper around std::mt19937_64. The
// mt19937_64 output sequence is pinned by the standard, and the variate
// transforms below are plain arithmetic, so results are identical across
// platforms and toolchains for a given seed. std::normal_distribution is
// deliberately avoided: its algorithm is implementation-defined.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double uniform() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (uniform() - 0x1.0p-53) * (hi - lo);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  // Standard normal via Box-Muller; the cosine and sine variates are both
  // consumed, in order.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Zero-mean Laplace with scale b (variance 2*b^2), by inverse CDF.
  double laplace(double scale) {
    const double u = uniform() - 0.5;  // (-0.5, 0.5]
    const double s = (u < 0.0) ? -1.0 : 1.0;
    return -scale * s * std::log1p(-2.0 * std::abs(u));
  }

  Vec3 unit_vector() {
    while (true) {
      Vec3 v(gaussian(), gaussian(), gaussian());
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Worker pool cap
// ---------------------------------------------------------------------------

namespace detail {
inline int& thread_cap() {
  static int cap = [] {
    if (const char* env = std::getenv("RGLR_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }();
  return cap;
}
}  // namespace detail

inline void set_max_threads(int n) {
  if (n > 0) detail::thread_cap() = n;
}

inline int max_threads() { return detail::thread_cap(); }

// Static partition of [0, n) over the worker pool. Each invocation of fn
// owns a disjoint index range, so results never depend on the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const int workers = std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
  if (workers <= 1 || n < 1024) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace rglr
