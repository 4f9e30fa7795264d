#include "memlb/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "memlb/errors.hpp"

namespace memlb {

double IncrementalSpan::projection_norm(const Eigen::VectorXd& x) const {
  if (basis_.cols() == 0) return 0.0;
  return (basis_.transpose() * x).norm();
}

void IncrementalSpan::add(const Eigen::VectorXd& x) {
  Eigen::VectorXd resid = x;
  if (basis_.cols() > 0) {
    resid -= basis_ * (basis_.transpose() * x);
    // One re-orthogonalization pass keeps the basis clean at delta ~ 1/d^2.
    resid -= basis_ * (basis_.transpose() * resid);
  }
  const double norm = resid.norm();
  if (norm <= 1e-13 * std::max(1.0, x.norm())) return;  // already in the span
  basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
  basis_.col(basis_.cols() - 1) = resid / norm;
}

RobustSetReport validate_robust_set(const std::vector<Eigen::VectorXd>& vectors,
                                    double delta) {
  RobustSetReport report;
  if (vectors.empty()) return report;
  IncrementalSpan span(static_cast<int>(vectors[0].size()));
  report.valid = true;
  for (const Eigen::VectorXd& raw : vectors) {
    const double norm = raw.norm();
    if (norm == 0.0) {
      report.valid = false;
      report.ratios.push_back(1.0);
      continue;
    }
    const Eigen::VectorXd y = raw / norm;
    const double ratio = span.projection_norm(y);
    report.ratios.push_back(ratio);
    if (ratio > 1.0 - delta + 1e-12) report.valid = false;
    span.add(y);
  }
  return report;
}

RobustSet::RobustSet(std::vector<Eigen::VectorXd> vectors, double delta)
    : delta_(delta) {
  if (vectors.empty()) throw std::invalid_argument("RobustSet: empty vector set");
  if (delta <= 0.0 || delta > 1.0) throw std::invalid_argument("RobustSet: delta must be in (0, 1]");
  const long d = vectors[0].size();
  if (static_cast<long>(vectors.size()) > d) {
    throw std::invalid_argument("RobustSet: need q <= d");
  }
  RobustSetReport report = validate_robust_set(vectors, delta);
  if (!report.valid) {
    std::ostringstream msg;
    msg << "RobustSet: premise ||proj_{S_{i-1}}(y_i)|| <= 1 - delta violated"
        << " (delta = " << delta << ")";
    throw std::invalid_argument(msg.str());
  }
  ratios_ = std::move(report.ratios);
  Y_.resize(d, static_cast<long>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    Y_.col(static_cast<long>(i)) = vectors[i] / vectors[i].norm();
  }
}

ConstructMResult construct_M(const RobustSet& set) {
  ConstructMResult result;
  const int q = set.q();
  const int d = set.dim();
  const int keep = q / 2;
  if (keep == 0) {
    result.M.resize(d, 0);
    result.flagged_small = true;
    return result;
  }

  // Gram-Schmidt coefficient matrix recovered as the R factor of a
  // Householder QR (row signs are immaterial: they rotate U in the SVD and
  // leave the singular values and right vectors unchanged).
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(set.Y());
  Eigen::MatrixXd C =
      qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();

  const double diag_bound = std::sqrt(set.delta());
  for (int i = 0; i < q; ++i) {
    if (std::abs(C(i, i)) < diag_bound * (1.0 - 1e-9)) {
      std::ostringstream msg;
      msg << "construct_M: numerical rank collapse, |C_" << i << i
          << "| = " << std::abs(C(i, i)) << " violates the bound sqrt(delta) = "
          << diag_bound;
      throw std::runtime_error(msg.str());
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_floor = set.delta() / std::sqrt(static_cast<double>(d));

  result.M.resize(d, keep);
  for (int i = 0; i < keep; ++i) {
    const double s = sigma[i];
    if (s < sigma_floor * (1.0 - 1e-9)) {
      std::ostringstream msg;
      msg << "construct_M: kept singular value sigma_" << i << " = " << s
          << " below the guaranteed floor delta/sqrt(d) = " << sigma_floor;
      throw std::runtime_error(msg.str());
    }
    const Eigen::VectorXd v = svd.matrixV().col(i);
    result.M.col(i) = set.Y() * v / s;
    result.kept_sigmas.push_back(s);
    result.row_factors.push_back(v.lpNorm<1>() / s);
  }
  return result;
}

LiftedFunction::LiftedFunction(InnerOracle inner, int dim, double r,
                               double lipschitz)
    : inner_(std::move(inner)), dim_(dim), r_(r), L_(lipschitz) {
  if (r_ <= 0.0 || r_ >= 1.0) throw std::invalid_argument("LiftedFunction: r must be in (0, 1)");
  if (L_ <= 0.0) throw std::invalid_argument("LiftedFunction: L must be > 0");
  f0_ = inner_(Eigen::VectorXd::Zero(dim_)).first;
  ++inner_calls_;
}

double LiftedFunction::cone_value(double norm) const {
  return f0_ + (L_ / (1.0 - r_)) * ((1.0 + r_) * norm - 2.0 * r_);
}

LiftedFunction::Eval LiftedFunction::eval(const Eigen::VectorXd& x) const {
  Eval out;
  const double norm = x.norm();
  const double h = cone_value(norm);
  const double slope = L_ * (1.0 + r_) / (1.0 - r_);
  if (norm >= 1.0) {
    out.value = h;
    out.cone_branch = true;
    out.subgradient = slope * x / norm;
    return out;
  }
  auto [fv, fg] = inner_(x);
  ++inner_calls_;
  if (h >= fv) {
    // Tie resolves to the cone branch. At x = 0 the cone value is strictly
    // below f(0) for r > 0, so the vertex is never active here.
    out.value = h;
    out.cone_branch = true;
    if (norm == 0.0) throw std::logic_error("lift_eval: cone branch at the origin");
    out.subgradient = slope * x / norm;
  } else {
    out.value = fv;
    out.cone_branch = false;
    out.subgradient = std::move(fg);
  }
  return out;
}

LiftedFunction::Eval LiftedFunction::eval_accounted(const Eigen::VectorXd& x) {
  // f(0) is re-queried alongside every point query: exactly 2 inner calls.
  inner_(Eigen::VectorXd::Zero(dim_));
  ++inner_calls_;
  const double norm = x.norm();
  if (norm >= 1.0) {
    inner_(Eigen::VectorXd::Zero(dim_));  // f is only valid on the ball
    ++inner_calls_;
    Eval out;
    out.value = cone_value(norm);
    out.cone_branch = true;
    out.subgradient = (L_ * (1.0 + r_) / (1.0 - r_)) * x / norm;
    return out;
  }
  return eval(x);
}

Eigen::VectorXd clamp_to_ball(const Eigen::VectorXd& x) {
  const double norm = x.norm();
  if (norm <= 1.0) return x;
  return x / norm;
}

}  // namespace memlb
