#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "memlb/geometry.hpp"
#include "memlb/rng.hpp"

using namespace memlb;

namespace {

// Naive per-index least-squares projector (normal equations), used as the
// independent route for validate_robust_set.
std::vector<double> naive_ratios(const std::vector<Eigen::VectorXd>& vectors) {
  std::vector<double> out;
  const long d = vectors[0].size();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const Eigen::VectorXd y = vectors[i].normalized();
    if (i == 0) {
      out.push_back(0.0);
      continue;
    }
    Eigen::MatrixXd W(d, static_cast<long>(i));
    for (std::size_t j = 0; j < i; ++j) W.col(static_cast<long>(j)) = vectors[j].normalized();
    const Eigen::VectorXd coef =
        (W.transpose() * W).ldlt().solve(W.transpose() * y);
    out.push_back((W * coef).norm());
  }
  return out;
}

std::vector<Eigen::VectorXd> perturbed_frame(int d, int q, double radius,
                                             std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd G(d, q);
  for (int j = 0; j < q; ++j) G.col(j) = rng.gaussian_vector(d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd frame = qr.householderQ() * Eigen::MatrixXd::Identity(d, q);
  std::vector<Eigen::VectorXd> vectors;
  for (int j = 0; j < q; ++j) {
    vectors.push_back((frame.col(j) + radius * rng.unit_sphere(d)).normalized());
  }
  return vectors;
}

}  // namespace

TEST_CASE("validate_robust_set: orthonormal zeros, repeats hit ratio 1") {
  std::vector<Eigen::VectorXd> ortho = {Eigen::Vector3d(1, 0, 0),
                                        Eigen::Vector3d(0, 2, 0)};
  const RobustSetReport ok = validate_robust_set(ortho, 0.5);
  CHECK(ok.valid);
  CHECK(ok.ratios[0] == 0.0);
  CHECK(ok.ratios[1] == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<Eigen::VectorXd> repeat = {Eigen::Vector3d(1, 0, 0),
                                         Eigen::Vector3d(2, 0, 0)};
  const RobustSetReport bad = validate_robust_set(repeat, 0.01);
  CHECK(!bad.valid);
  CHECK(bad.ratios[1] == doctest::Approx(1.0));
}

TEST_CASE("validate_robust_set agrees with the naive projector at d=30") {
  const auto vectors = perturbed_frame(30, 10, 0.4, 7);
  const RobustSetReport fast = validate_robust_set(vectors, 1e-4);
  const std::vector<double> slow = naive_ratios(vectors);
  REQUIRE(fast.ratios.size() == slow.size());
  for (std::size_t i = 0; i < slow.size(); ++i) {
    CHECK(fast.ratios[i] == doctest::Approx(slow[i]).epsilon(1e-9));
  }
}

TEST_CASE("construct_M on two standard basis vectors (delta = 1)") {
  std::vector<Eigen::VectorXd> vectors = {Eigen::Vector4d(1, 0, 0, 0),
                                          Eigen::Vector4d(0, 1, 0, 0)};
  const RobustSet set(vectors, 1.0);
  const ConstructMResult res = construct_M(set);
  REQUIRE(res.M.cols() == 1);
  CHECK(res.M.col(0).norm() == doctest::Approx(1.0));
  // The single column lies in span(e1, e2).
  CHECK(std::abs(res.M(2, 0)) < 1e-12);
  CHECK(std::abs(res.M(3, 0)) < 1e-12);
  CHECK(res.kept_sigmas[0] == doctest::Approx(1.0));
  // Amplification against the standard basis with factor d/delta = 4.
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
    a[i] = 1.0;
    const double lhs = (res.M.transpose() * a).cwiseAbs().maxCoeff();
    const double rhs = 4.0 * (set.Y().transpose() * a).cwiseAbs().maxCoeff();
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("construct_M on an orthonormal set: unit singular values") {
  Rng rng(11);
  Eigen::MatrixXd G(12, 6);
  for (int j = 0; j < 6; ++j) G.col(j) = rng.gaussian_vector(12);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(12, 6);
  std::vector<Eigen::VectorXd> vectors;
  for (int j = 0; j < 6; ++j) vectors.push_back(Q.col(j));
  const RobustSet set(vectors, 1.0);
  const ConstructMResult res = construct_M(set);
  REQUIRE(res.M.cols() == 3);
  for (double s : res.kept_sigmas) CHECK(s == doctest::Approx(1.0));
  for (double f : res.row_factors) CHECK(f <= std::sqrt(6.0) + 1e-9);
}

TEST_CASE("construct_M amplification inequality, d=40 q=8 delta=1/d^2") {
  const int d = 40, q = 8;
  const double delta = 1.0 / (40.0 * 40.0);
  const double factor = d / delta;
  Rng rng(23);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto vectors = perturbed_frame(d, q, 0.3, s * 100);
    const RobustSet set(vectors, delta);
    const ConstructMResult res = construct_M(set);
    REQUIRE(res.M.cols() == 4);
    const Eigen::MatrixXd gram =
        res.M.transpose() * res.M - Eigen::MatrixXd::Identity(4, 4);
    CHECK(gram.cwiseAbs().maxCoeff() < 1e-9);
    for (double sig : res.kept_sigmas) CHECK(sig >= delta / std::sqrt(40.0));
    for (int t = 0; t < 2000; ++t) {
      const Eigen::VectorXd a = t % 2 ? rng.sign_vector(d) : rng.unit_sphere(d);
      const double lhs = (res.M.transpose() * a).cwiseAbs().maxCoeff();
      const double rhs = factor * (set.Y().transpose() * a).cwiseAbs().maxCoeff();
      CHECK(lhs <= rhs + 1e-12);
    }
  }
}

TEST_CASE("construct_M flags q < 2 with empty output") {
  std::vector<Eigen::VectorXd> one = {Eigen::Vector3d(0, 0, 1)};
  const RobustSet set(one, 0.5);
  const ConstructMResult res = construct_M(set);
  CHECK(res.flagged_small);
  CHECK(res.M.cols() == 0);
}

TEST_CASE("robust set premise violations are refused") {
  std::vector<Eigen::VectorXd> repeat = {Eigen::Vector3d(1, 0, 0),
                                         Eigen::Vector3d(1, 1e-9, 0)};
  CHECK_THROWS_AS(RobustSet(repeat, 0.5), std::invalid_argument);
}

TEST_CASE("lifted function: exact agreement on the r-ball, cone outside") {
  const int d = 6;
  // Inner f(x) = ||x||_2, L = 1, with subgradient x/||x|| (0 at the origin).
  auto inner = [](const Eigen::VectorXd& x) {
    const double n = x.norm();
    Eigen::VectorXd g = n == 0.0 ? Eigen::VectorXd::Zero(x.size())
                                 : Eigen::VectorXd(x / n);
    return std::make_pair(n, g);
  };
  LiftedFunction lifted(inner, d, 0.5, 1.0);
  Rng rng(3);

  for (int t = 0; t < 500; ++t) {
    const Eigen::VectorXd x = rng.unit_ball(d) * 0.5;
    CHECK(lifted.eval(x).value == x.norm());
  }
  // ||x|| = 1 exactly: h(x) = f(0) + L >= f(x), so the lift takes the cone.
  for (int j = 0; j < d; ++j) {
    const auto ev = lifted.eval(Eigen::VectorXd::Unit(d, j));
    CHECK(ev.cone_branch);
    CHECK(ev.value == doctest::Approx(1.0));
  }
  // Direct substitution at ||x|| = 2: g = f(0) + 2*((3/2)*2 - 1) = 4.
  const Eigen::VectorXd far = 2.0 * Eigen::VectorXd::Unit(d, 0);
  CHECK(lifted.eval(far).value == doctest::Approx(4.0));

  // At the origin the f branch is always active for r > 0.
  CHECK(!lifted.eval(Eigen::VectorXd::Zero(d)).cone_branch);
}

TEST_CASE("lifted function is convex and L(1+r)/(1-r)-Lipschitz") {
  const int d = 8;
  auto inner = [](const Eigen::VectorXd& x) {
    // max(<u,x>, <w,x>) for two fixed unit directions: 1-Lipschitz convex.
    Eigen::VectorXd u = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(x.size());
    u[0] = 1.0;
    w[1] = -1.0;
    const double a = u.dot(x), b = w.dot(x);
    return a >= b ? std::make_pair(a, u) : std::make_pair(b, w);
  };
  LiftedFunction lifted(inner, d, 0.25, 1.0);
  const double slope = lifted.lifted_lipschitz();
  CHECK(slope == doctest::Approx(1.0 * 1.25 / 0.75));
  Rng rng(4);
  for (int t = 0; t < 3000; ++t) {
    const Eigen::VectorXd x = rng.unit_sphere(d) * rng.uniform(0.0, 2.0);
    const Eigen::VectorXd y = rng.unit_sphere(d) * rng.uniform(0.0, 2.0);
    const double fx = lifted.eval(x).value;
    const double fy = lifted.eval(y).value;
    CHECK(std::abs(fx - fy) <= slope * (x - y).norm() * (1 + 1e-9) + 1e-12);
    CHECK(lifted.eval(0.5 * (x + y)).value <= 0.5 * (fx + fy) + 1e-9);
    // Plane inequality for the returned subgradients.
    const auto ex = lifted.eval(x);
    CHECK(fy >= fx + ex.subgradient.dot(y - x) - 1e-9);
  }
}

TEST_CASE("clamp to ball and its monotonicity along the lift") {
  Eigen::VectorXd inside(3), outside(3);
  inside << 0.1, 0.2, 0.3;
  outside << 2, 0, 0;
  CHECK(clamp_to_ball(inside) == inside);
  CHECK(clamp_to_ball(outside) == Eigen::Vector3d(1, 0, 0));

  auto inner = [](const Eigen::VectorXd& x) {
    const double n = x.norm();
    Eigen::VectorXd g = n == 0.0 ? Eigen::VectorXd::Zero(x.size())
                                 : Eigen::VectorXd(x / n);
    return std::make_pair(n, g);
  };
  LiftedFunction lifted(inner, 3, 0.5, 1.0);
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd x = rng.unit_sphere(3) * rng.uniform(1.0, 4.0);
    CHECK(lifted.eval(clamp_to_ball(x)).value <= lifted.eval(x).value + 1e-12);
  }
}

TEST_CASE("reduction accounting: exactly two inner queries per outer query") {
  auto inner = [](const Eigen::VectorXd& x) {
    return std::make_pair(x.norm(), Eigen::VectorXd(x.size()).setZero());
  };
  LiftedFunction lifted(inner, 4, 0.5, 1.0);
  Rng rng(6);
  const long before = lifted.inner_calls();
  for (int t = 0; t < 64; ++t) {
    lifted.eval_accounted(rng.unit_sphere(4) * rng.uniform(0.0, 2.0));
  }
  CHECK(lifted.inner_calls() - before == 128);
}
