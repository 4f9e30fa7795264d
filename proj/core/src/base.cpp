#include "memlb/base.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

#include "memlb/errors.hpp"

namespace memlb {

BaseVector::BaseVector(std::vector<std::int8_t> signs, double scale)
    : signs_(std::move(signs)), scale_(scale) {
  if (signs_.empty()) throw std::invalid_argument("BaseVector: d must be >= 1");
  if (scale_ <= 0.0) throw std::invalid_argument("BaseVector: scale must be > 0");
  for (std::int8_t s : signs_) {
    if (s != 1 && s != -1) {
      throw std::invalid_argument("BaseVector: entries must be +-1");
    }
  }
}

double BaseVector::norm() const {
  std::int64_t sumsq = 0;
  for (std::int8_t s : signs_) sumsq += static_cast<std::int64_t>(s) * s;
  return scale_ * std::sqrt(static_cast<double>(sumsq));
}

Eigen::VectorXd BaseVector::dense() const {
  Eigen::VectorXd v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = scale_ * static_cast<double>(signs_[i]);
  return v;
}

SignMatrix::SignMatrix(int d, std::vector<BaseVector> rows)
    : d_(d), rows_(std::move(rows)) {
  if (d_ < 1) throw std::invalid_argument("SignMatrix: d must be >= 1");
  for (const BaseVector& r : rows_) {
    if (r.dim() != d_) throw std::invalid_argument("SignMatrix: row dimension mismatch");
    if (r.scale() != 1.0) throw std::invalid_argument("SignMatrix: rows must have scale 1");
  }
  dense_.resize(static_cast<long>(rows_.size()), d_);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (int j = 0; j < d_; ++j) {
      dense_(static_cast<long>(i), j) = static_cast<double>(rows_[i].sign(j));
    }
  }
}

BaseVector sample_base_vector(int d, double scale, RandomTape& tape) {
  if (d < 1) throw std::invalid_argument("sample_base_vector: d must be >= 1");
  if (tape.remaining() < static_cast<std::uint64_t>(d)) {
    throw TapeUnderflow("sample_base_vector: tape has " +
                        std::to_string(tape.remaining()) + " bits, needs " +
                        std::to_string(d));
  }
  std::vector<std::int8_t> signs(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) signs[static_cast<std::size_t>(i)] = tape.next_bit() ? 1 : -1;
  return BaseVector(std::move(signs), scale);
}

SignMatrix sample_sign_matrix(int d, int n, RandomTape& tape) {
  if (n < 0 || n > d) throw std::invalid_argument("sample_sign_matrix: need 0 <= n <= d");
  std::vector<BaseVector> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows.push_back(sample_base_vector(d, 1.0, tape));
  return SignMatrix(d, std::move(rows));
}

namespace {

constexpr int kExhaustiveCap = 24;

ConcentrationEstimate finish(std::uint64_t hits, std::uint64_t trials, int k,
                             bool exhaustive) {
  ConcentrationEstimate est;
  est.hits = hits;
  est.trials = trials;
  est.k = k;
  est.exhaustive = exhaustive;
  est.p_hat = trials == 0 ? 0.0
                          : static_cast<double>(hits) / static_cast<double>(trials);
  est.fitted_exponent = est.p_hat > 0.0
                            ? -std::log2(est.p_hat) / static_cast<double>(k)
                            : std::numeric_limits<double>::infinity();
  return est;
}

bool within_threshold(const Eigen::MatrixXd& Z, const Eigen::VectorXd& h,
                      double t) {
  return (Z.transpose() * h).cwiseAbs().maxCoeff() <= t;
}

}  // namespace

ConcentrationEstimate concentration_exhaustive(const Eigen::MatrixXd& Z,
                                               double t) {
  const int d = static_cast<int>(Z.rows());
  const int k = static_cast<int>(Z.cols());
  if (d > kExhaustiveCap) {
    throw SizeError("exhaustive concentration capped at d = " +
                    std::to_string(kExhaustiveCap) + ", got d = " +
                    std::to_string(d));
  }
  const std::uint64_t total = std::uint64_t{1} << d;
  std::uint64_t hits = 0;
  Eigen::VectorXd h(d);
  for (std::uint64_t code = 0; code < total; ++code) {
    for (int i = 0; i < d; ++i) h[i] = (code >> i) & 1u ? 1.0 : -1.0;
    if (within_threshold(Z, h, t)) ++hits;
  }
  return finish(hits, total, k, /*exhaustive=*/true);
}

ConcentrationEstimate concentration_monte_carlo(const Eigen::MatrixXd& Z,
                                                double t, std::uint64_t trials,
                                                RandomTape& tape) {
  const int d = static_cast<int>(Z.rows());
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < trials; ++s) {
    const Eigen::VectorXd h = sample_base_vector(d, 1.0, tape).dense();
    if (within_threshold(Z, h, t)) ++hits;
  }
  return finish(hits, trials, static_cast<int>(Z.cols()), /*exhaustive=*/false);
}

Eigen::MatrixXd random_orthonormal(int d, int k, RandomTape& tape) {
  if (k < 1 || k > d) throw std::invalid_argument("random_orthonormal: need 1 <= k <= d");
  Eigen::MatrixXd G(d, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < d; ++i) G(i, j) = 2.0 * tape.next_uniform() - 1.0;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  return Q;
}

ConcentrationEstimate estimate_base_concentration(
    int d, int k, double t, std::optional<std::uint64_t> trials,
    RandomTape& tape) {
  if (t <= 0.0 || t > 0.5) {
    throw std::invalid_argument("estimate_base_concentration: t must be in (0, 1/2]");
  }
  const Eigen::MatrixXd Z = random_orthonormal(d, k, tape);
  if (trials.has_value()) {
    return concentration_monte_carlo(Z, t, *trials, tape);
  }
  return concentration_exhaustive(Z, t);
}

}  // namespace memlb
