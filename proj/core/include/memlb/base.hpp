#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "memlb/tape.hpp"

namespace memlb {

// A hypercube vector: d signs in {-1,+1} plus a positive scale (1 for matrix
// rows, 1/sqrt(d) for Nemirovski vectors). The sign data is kept exact so the
// Euclidean norm is scale*sqrt(d) by construction.
class BaseVector {
 public:
  BaseVector(std::vector<std::int8_t> signs, double scale);

  int dim() const { return static_cast<int>(signs_.size()); }
  double scale() const { return scale_; }
  const std::vector<std::int8_t>& signs() const { return signs_; }
  int sign(int i) const { return signs_[static_cast<std::size_t>(i)]; }

  // Exact: sum of squared signs is d in integer arithmetic.
  double norm() const;

  Eigen::VectorXd dense() const;

  bool operator==(const BaseVector& other) const {
    return scale_ == other.scale_ && signs_ == other.signs_;
  }

 private:
  std::vector<std::int8_t> signs_;
  double scale_;
};

// n hypercube rows of dimension d with scale 1. The instance and game
// samplers always use n = floor(d/2); diagnostic callers may pick any
// 0 <= n <= d.
class SignMatrix {
 public:
  SignMatrix(int d, std::vector<BaseVector> rows);

  int d() const { return d_; }
  int n() const { return static_cast<int>(rows_.size()); }
  const BaseVector& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<BaseVector>& rows() const { return rows_; }

  // Dense copy (n x d), entries exactly +-1.
  const Eigen::MatrixXd& dense() const { return dense_; }

  bool operator==(const SignMatrix& other) const {
    return d_ == other.d_ && rows_ == other.rows_;
  }

 private:
  int d_;
  std::vector<BaseVector> rows_;
  Eigen::MatrixXd dense_;
};

// One sign per tape bit (bit 0 -> -1, bit 1 -> +1); consumes exactly d bits.
BaseVector sample_base_vector(int d, double scale, RandomTape& tape);

// n independent rows; consumes n*d bits.
SignMatrix sample_sign_matrix(int d, int n, RandomTape& tape);

struct ConcentrationEstimate {
  double p_hat = 0.0;        // fraction with ||Z^T h||_inf <= t
  double fitted_exponent = 0.0;  // -log2(p_hat)/k; +inf when p_hat == 0
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;  // 2^d in exhaustive mode
  bool exhaustive = false;
  int k = 0;
};

// Exact count over all 2^d sign vectors h of ||Z^T h||_inf <= t. Z must have
// orthonormal-ish columns (the caller owns that); d is capped at 24.
ConcentrationEstimate concentration_exhaustive(const Eigen::MatrixXd& Z,
                                               double t);

// Monte-Carlo estimate with `trials` hypercube samples drawn from the tape.
ConcentrationEstimate concentration_monte_carlo(const Eigen::MatrixXd& Z,
                                                double t, std::uint64_t trials,
                                                RandomTape& tape);

// Builds a d x k orthonormal test matrix from tape-generated fixed-point
// uniforms (QR of a random matrix) and runs the estimator. `trials` empty
// selects exhaustive mode.
ConcentrationEstimate estimate_base_concentration(
    int d, int k, double t, std::optional<std::uint64_t> trials,
    RandomTape& tape);

// The orthonormal test matrix used by estimate_base_concentration, exposed so
// suites can grow Z column by column and check monotonicity.
Eigen::MatrixXd random_orthonormal(int d, int k, RandomTape& tape);

}  // namespace memlb
