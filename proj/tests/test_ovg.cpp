#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "memlb/errors.hpp"
#include "memlb/ovg.hpp"
#include "memlb/rng.hpp"

using namespace memlb;

namespace {

// Independent success checker: full QR projectors per index.
std::vector<bool> qr_check(const SignMatrix& A,
                           const std::vector<Eigen::VectorXd>& Y, double theta,
                           double slack) {
  std::vector<bool> out;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const Eigen::VectorXd& y = Y[i];
    const double norm = y.norm();
    if (norm == 0.0) {
      out.push_back(false);
      continue;
    }
    const double cond1 = (A.dense() * y).cwiseAbs().maxCoeff() / norm;
    double proj = 0.0;
    if (i > 0) {
      Eigen::MatrixXd W(A.d(), static_cast<long>(i));
      for (std::size_t j = 0; j < i; ++j) W.col(static_cast<long>(j)) = Y[j];
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
      const long r = qr.rank();
      if (r > 0) {
        const Eigen::MatrixXd Q =
            qr.householderQ() * Eigen::MatrixXd::Identity(A.d(), r);
        proj = (Q.transpose() * y).norm();
      }
    }
    out.push_back(cond1 <= theta && proj / norm <= 1.0 - slack);
  }
  return out;
}

SignMatrix sample_A(int d, std::uint64_t seed) {
  RandomTape tape = RandomTape(seed).segment(TapeSegment::kInstanceMatrix);
  return sample_sign_matrix(d, d / 2, tape);
}

}  // namespace

TEST_CASE("round length helper") {
  CHECK(round_length_for_budget(1024, 32, 1.0) ==
        static_cast<int>(std::ceil(60.0 * 1024 / 32.0)));
  CHECK(round_length_for_budget(1024, 32, 0.5, 20.0) ==
        static_cast<int>(std::ceil(20.0 * 1024 / (0.5 * 32.0))));
  CHECK_THROWS_AS(round_length_for_budget(1, 1, 0.0), std::invalid_argument);
}

TEST_CASE("subgradient response: signed min-index row, exact identity") {
  const SignMatrix A = sample_A(24, 3);
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const Eigen::VectorXd x = rng.unit_ball(24);
    const Eigen::VectorXd g = subgradient_response(A, x);
    // |g^T x| = ||Ax||_inf exactly (the float negation is exact and the
    // accumulation order is shared).
    CHECK(std::abs(sequential_dot(g, x)) == ainf_scan(A, x).value);
    // g is +- a row of A.
    bool is_row = false;
    for (int i = 0; i < A.n(); ++i) {
      const Eigen::VectorXd row = A.dense().row(i).transpose();
      if (g == row || g == Eigen::VectorXd(-row)) is_row = true;
    }
    CHECK(is_row);
  }
}

TEST_CASE("check_success: orthonormal null vectors pass, duplicates fail (2)") {
  const SignMatrix A = sample_A(16, 5);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.dense().transpose());
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(16, 16);
  std::vector<Eigen::VectorXd> Y;
  for (int j = 0; j < 3; ++j) Y.push_back(Q.col(8 + j));  // null(A) basis
  auto verdicts = check_success(A, Y, 1.0 / std::pow(16.0, 4), 1.0 / 256.0);
  for (const auto& v : verdicts) CHECK(v.pass);

  Y.push_back(Y[0]);  // duplicate: projection ratio 1
  verdicts = check_success(A, Y, 1.0 / std::pow(16.0, 4), 1.0 / 256.0);
  CHECK(!verdicts[3].pass);
  CHECK(verdicts[3].cond1);
  CHECK(!verdicts[3].cond2);
  CHECK(verdicts[3].proj_ratio == doctest::Approx(1.0));
}

TEST_CASE("check_success: zero vectors fail and are flagged") {
  const SignMatrix A = sample_A(8, 6);
  std::vector<Eigen::VectorXd> Y = {Eigen::VectorXd::Zero(8)};
  const auto verdicts = check_success(A, Y, 0.1, 0.1);
  CHECK(!verdicts[0].pass);
  CHECK(verdicts[0].zero);
}

TEST_CASE("check_success is invariant to positive rescaling") {
  const SignMatrix A = sample_A(20, 7);
  Rng rng(8);
  std::vector<Eigen::VectorXd> Y1, Y2;
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd y = rng.unit_sphere(20);
    Y1.push_back(y);
    Y2.push_back(rng.uniform(0.1, 9.0) * y);
  }
  const auto v1 = check_success(A, Y1, 0.3, 0.01);
  const auto v2 = check_success(A, Y2, 0.3, 0.01);
  for (std::size_t i = 0; i < v1.size(); ++i) {
    CHECK(v1[i].pass == v2[i].pass);
    CHECK(v1[i].ainf_ratio == doctest::Approx(v2[i].ainf_ratio));
    CHECK(v1[i].proj_ratio == doctest::Approx(v2[i].proj_ratio).epsilon(1e-9));
  }
}

TEST_CASE("check_success agrees with the QR-projector reimplementation") {
  const SignMatrix A = sample_A(40, 9);
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::VectorXd> Y;
    const int count = 1 + static_cast<int>(rng.below(5));
    for (int j = 0; j < count; ++j) {
      if (rng.uniform() < 0.3 && !Y.empty()) {
        // Near-duplicates stress the order dependence.
        Y.push_back(Y.back() + 1e-3 * rng.unit_sphere(40));
      } else {
        Y.push_back(rng.unit_sphere(40));
      }
    }
    const double theta = 0.25, slack = 1.0 / 1600.0;
    const auto fast = check_success(A, Y, theta, slack);
    const auto slow = qr_check(A, Y, theta, slack);
    for (std::size_t i = 0; i < Y.size(); ++i) CHECK(fast[i].pass == slow[i]);
  }
}

TEST_CASE("trivial strategies: store-null wins with m=0, query-rows with M=0") {
  GameParams store{32, 4, 0, static_cast<std::size_t>(4 * 32 * 64),
                   OracleVariant::kSubgradient};
  GameParams rows{32, 4, 16, 0, OracleVariant::kIndex};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s1 = strategy_store_null_vectors();
    const GameTranscript t1 = play(store, *s1, seed);
    CHECK(t1.win);
    CHECK(t1.queries.empty());

    auto s2 = strategy_query_all_rows();
    const GameTranscript t2 = play(rows, *s2, seed);
    CHECK(t2.win);
    CHECK(t2.message.bit_length() == 0);
    CHECK(t2.queries.size() == 16);
  }
}

TEST_CASE("returning rows of A fails condition (1)") {
  GameParams params{32, 4, 0, static_cast<std::size_t>(4 * 32 * 64),
                    OracleVariant::kSubgradient};
  auto bad = strategy_return_rows();
  const GameTranscript t = play(params, *bad, 77);
  CHECK(!t.win);
  REQUIRE(t.verdicts.size() == 4);
  for (const auto& v : t.verdicts) {
    CHECK(!v.cond1);
    CHECK(v.ainf_ratio >= std::sqrt(32.0) - 1e-9);
  }
}

TEST_CASE("message over budget is an immediate recorded loss") {
  GameParams params{16, 2, 0, 8, OracleVariant::kSubgradient};
  auto s = strategy_store_null_vectors();  // needs 2*16*64 bits >> 8
  const GameTranscript t = play(params, *s, 1);
  CHECK(!t.win);
  CHECK(!t.violation.empty());
}

TEST_CASE("query budget enforcement and variant mismatch are violations") {
  struct Greedy final : PlayerStrategy {
    std::string name() const override { return "greedy"; }
    MemoryState observe(const GameParams&, const SignMatrix&, RandomTape&) override {
      return MemoryState{};
    }
    void interact(GameOracleHandle& oracle, const MemoryState&, RandomTape&) override {
      for (int i = 0; i < 100; ++i) {
        oracle.query_vector(Eigen::VectorXd::Ones(8));
      }
    }
    std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd&,
                                         const Eigen::MatrixXd&,
                                         const MemoryState&, RandomTape&) override {
      return {};
    }
  };
  GameParams params{8, 1, 3, 64, OracleVariant::kSubgradient};
  Greedy g;
  const GameTranscript t = play(params, g, 4);
  CHECK(!t.win);
  CHECK(t.violation.find("budget") != std::string::npos);
  CHECK(t.queries.size() == 3);

  struct WrongCall final : PlayerStrategy {
    std::string name() const override { return "wrong-call"; }
    MemoryState observe(const GameParams&, const SignMatrix&, RandomTape&) override {
      return MemoryState{};
    }
    void interact(GameOracleHandle& oracle, const MemoryState&, RandomTape&) override {
      oracle.query_row(1);  // not allowed in the subgradient variant
    }
    std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd&,
                                         const Eigen::MatrixXd&,
                                         const MemoryState&, RandomTape&) override {
      return {};
    }
  };
  WrongCall w;
  const GameTranscript t2 = play(params, w, 4);
  CHECK(!t2.win);
  CHECK(!t2.violation.empty());
}

TEST_CASE("reduction adapter: m < 1 exercises the failure path") {
  ReductionOptions opt;
  opt.instance = InstanceParams::make(16, 6, 2, /*scaled=*/false);
  opt.make_optimizer = [](std::shared_ptr<const HardInstance> inst) {
    NullspaceOptions nopt;
    nopt.ladder = true;
    nopt.ladder_patience = 20;
    return baseline_nullspace(std::move(inst), nopt);
  };
  auto player = reduction_adapter(opt);
  GameParams game{16, 2, 0, 2048, OracleVariant::kSubgradient};
  const GameTranscript t = play(game, *player, 5);
  CHECK(!t.win);
  CHECK(t.status.find("part1-failure") != std::string::npos);
  CHECK(t.returned.empty());
}

TEST_CASE("reduction adapter part 3 greedy fallback over the subset cap") {
  ReductionOptions opt;
  opt.instance = InstanceParams::make(16, 6, 2, /*scaled=*/false);
  opt.subset_cap = 1;  // force the greedy path
  opt.greedy_fallback = true;
  opt.make_optimizer = [](std::shared_ptr<const HardInstance> inst) {
    NullspaceOptions nopt;
    nopt.ladder = true;
    nopt.ladder_patience = 20;
    return baseline_nullspace(std::move(inst), nopt);
  };
  auto player = reduction_adapter(opt);
  GameParams game{16, 2, 48, 2048, OracleVariant::kSubgradient};
  const GameTranscript t = play(game, *player, 2);
  CHECK(t.win);

  // Without the fallback the capped search refuses.
  ReductionOptions strict = opt;
  strict.greedy_fallback = false;
  strict.make_optimizer = opt.make_optimizer;
  auto refuser = reduction_adapter(strict);
  const GameTranscript t2 = play(game, *refuser, 2);
  CHECK(!t2.win);
  CHECK(t2.status.find("part3-over-cap") != std::string::npos);
}

TEST_CASE("reduction adapter wins small end-to-end games") {
  const InstanceParams inst_params = InstanceParams::make(16, 6, 2, false);
  GameParams game{16, 2, 48, 2048, OracleVariant::kSubgradient};
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ReductionOptions opt;
    opt.instance = inst_params;
    opt.make_optimizer = [](std::shared_ptr<const HardInstance> inst) {
      NullspaceOptions nopt;
      nopt.ladder = true;
      nopt.ladder_patience = 20;
      return baseline_nullspace(std::move(inst), nopt);
    };
    auto player = reduction_adapter(opt);
    const GameTranscript t = play(game, *player, seed);
    if (t.win) ++wins;

    // Part-2 simulation identity: simulated values match the true oracle.
    if (!t.queries.empty()) {
      RandomTape root(t.seed);
      RandomTape a_tape = root.segment(TapeSegment::kInstanceMatrix);
      const SignMatrix A = sample_sign_matrix(16, 8, a_tape);
      RandomTape r1 = RandomTape(t.seed).segment(TapeSegment::kPlayerR1);
      std::vector<BaseVector> vs;
      for (int j = 0; j < inst_params.N; ++j) {
        vs.push_back(sample_base_vector(16, 1.0 / 4.0, r1));
      }
      const HardInstance truth = HardInstance::from_parts(inst_params, 0, A, vs);
      for (std::size_t i = 0; i < t.queries.size(); ++i) {
        const double sim =
            inst_params.global_scale *
            std::max(inst_params.eta *
                             std::abs(sequential_dot(t.responses[i], t.queries[i])) -
                         inst_params.rho,
                     truth.eval_f(t.queries[i]).first);
        CHECK(sim == truth.query_static(t.queries[i]).value);
      }
    }
  }
  CHECK(wins >= 4);
}
