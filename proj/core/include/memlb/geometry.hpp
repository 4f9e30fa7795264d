#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace memlb {

// Orthonormal basis grown one vector at a time (Householder-based through
// Eigen). Used for incremental projections with exact order dependence.
class IncrementalSpan {
 public:
  explicit IncrementalSpan(int dim) : basis_(dim, 0) {}

  int dim() const { return static_cast<int>(basis_.rows()); }
  int rank() const { return static_cast<int>(basis_.cols()); }

  // ||proj_S(x)||_2 for the current span S.
  double projection_norm(const Eigen::VectorXd& x) const;

  // Adds x to the span (no-op if x is numerically inside it already).
  void add(const Eigen::VectorXd& x);

  const Eigen::MatrixXd& basis() const { return basis_; }

 private:
  Eigen::MatrixXd basis_;
};

struct RobustSetReport {
  bool valid = false;
  std::vector<double> ratios;  // ||proj_{S_{i-1}}(y_i)|| per index, unit-normalized
};

// Checks the robust-independence premise ||proj_{S_{i-1}}(y_i)||_2 <= 1-delta
// with vectors unit-normalized internally.
RobustSetReport validate_robust_set(const std::vector<Eigen::VectorXd>& vectors,
                                    double delta);

// q <= d unit vectors with the validated premise.
class RobustSet {
 public:
  RobustSet(std::vector<Eigen::VectorXd> vectors, double delta);

  int q() const { return static_cast<int>(Y_.cols()); }
  int dim() const { return static_cast<int>(Y_.rows()); }
  double delta() const { return delta_; }
  const Eigen::MatrixXd& Y() const { return Y_; }
  const std::vector<double>& ratios() const { return ratios_; }

 private:
  Eigen::MatrixXd Y_;
  double delta_;
  std::vector<double> ratios_;
};

struct ConstructMResult {
  Eigen::MatrixXd M;                  // d x floor(q/2), orthonormal columns
  std::vector<double> kept_sigmas;    // singular values of the kept triples
  std::vector<double> row_factors;    // ||v_i||_1 / sigma_i per kept triple
  bool flagged_small = false;         // q < 2 gave an empty output
};

// The partial orthonormal basis of the robust-independence lemma: Gram-
// Schmidt basis B with coefficient matrix C = B^T Y, SVD of C, keep the
// floor(q/2) largest singular triples (each has sigma >= delta/sqrt(d)), and
// return m_i = (1/sigma_i) * Y * v_i. Guarantees, for every vector a,
// ||M^T a||_inf <= (d/delta) * ||Y^T a||_inf.
ConstructMResult construct_M(const RobustSet& set);

// A ball-constrained convex function extended to all of R^d: agrees with f
// on the r-ball, grows linearly outside.
class LiftedFunction {
 public:
  using InnerOracle =
      std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

  LiftedFunction(InnerOracle inner, int dim, double r, double lipschitz);

  double r() const { return r_; }
  double lipschitz() const { return L_; }
  double lifted_lipschitz() const { return L_ * (1.0 + r_) / (1.0 - r_); }
  double f_zero() const { return f0_; }

  // Cone term h(x) = f(0) + (L/(1-r)) * ((1+r)*||x|| - 2r).
  double cone_value(double norm) const;

  struct Eval {
    double value = 0.0;
    Eigen::VectorXd subgradient;
    bool cone_branch = false;
  };
  Eval eval(const Eigen::VectorXd& x) const;

  // Inner-oracle call count (the reduction pays exactly 2 per outer query).
  long inner_calls() const { return inner_calls_; }

  // Oracle with the paper's accounting: every outer evaluation makes exactly
  // two inner queries (f(0) alongside the point query).
  Eval eval_accounted(const Eigen::VectorXd& x);

 private:
  InnerOracle inner_;
  int dim_;
  double r_;
  double L_;
  double f0_;
  mutable long inner_calls_ = 0;
};

Eigen::VectorXd clamp_to_ball(const Eigen::VectorXd& x);

}  // namespace memlb
