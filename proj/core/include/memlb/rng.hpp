#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace memlb {

// Deterministic utility generator for property suites and drivers. Not the
// semantic randomness of the model (that is RandomTape); this one just has to
// be reproducible across platforms, which rules out std::normal_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Marsaglia polar method.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  Eigen::VectorXd gaussian_vector(int d) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = gaussian();
    return x;
  }

  Eigen::VectorXd unit_sphere(int d) {
    Eigen::VectorXd x = gaussian_vector(d);
    double n = x.norm();
    while (n == 0.0) {
      x = gaussian_vector(d);
      n = x.norm();
    }
    return x / n;
  }

  // Uniform in the unit ball.
  Eigen::VectorXd unit_ball(int d) {
    return unit_sphere(d) * std::pow(uniform(), 1.0 / d);
  }

  Eigen::VectorXd sign_vector(int d) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = (next_u64() & 1u) ? 1.0 : -1.0;
    return x;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace memlb
