#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "memlb/errors.hpp"
#include "memlb/harness.hpp"
#include "memlb/instance.hpp"
#include "memlb/rng.hpp"

using namespace memlb;

namespace {

class ZeroAlgorithm final : public MemAlgorithm {
 public:
  explicit ZeroAlgorithm(int d) : d_(d) {}
  std::string name() const override { return "zero"; }
  Eigen::VectorXd propose(const MemoryState&, RandomTape&) const override {
    return Eigen::VectorXd::Zero(d_);
  }
  MemoryState absorb(const MemoryState&, const Eigen::VectorXd&, double,
                     const Eigen::VectorXd&, RandomTape&) const override {
    return MemoryState{};
  }

 private:
  int d_;
};

class OversizeAlgorithm final : public MemAlgorithm {
 public:
  OversizeAlgorithm(int d, std::size_t bits) : d_(d), bits_(bits) {}
  std::string name() const override { return "oversize"; }
  Eigen::VectorXd propose(const MemoryState&, RandomTape&) const override {
    return Eigen::VectorXd::Zero(d_);
  }
  MemoryState absorb(const MemoryState&, const Eigen::VectorXd&, double,
                     const Eigen::VectorXd&, RandomTape&) const override {
    MemoryState s;
    for (std::size_t i = 0; i < bits_; ++i) s.append_bit(true);
    return s;
  }

 private:
  int d_;
  std::size_t bits_;
};

// Pure-f instance: n = 0 rows, so F = f, 1-Lipschitz at scale 1.
std::shared_ptr<HardInstance> pure_f_instance(int d, int N, std::uint64_t seed) {
  InstanceParams p = InstanceParams::make(d, N, 2, /*scaled=*/false);
  p.n = 0;
  const HardInstance sampled =
      HardInstance::make_static(InstanceParams::make(d, N, 2, false), seed);
  return std::make_shared<HardInstance>(HardInstance::from_parts(
      p, seed, SignMatrix(d, {}), sampled.nem_vectors()));
}

}  // namespace

TEST_CASE("zero-state algorithm: identical queries, all f-branch") {
  auto inst = std::make_shared<HardInstance>(
      HardInstance::make_static(InstanceParams::make(16, 2, 2, false), 1));
  ZeroAlgorithm alg(16);
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 20;
  const RunRecord rec = run(alg, make_static_oracle(inst), 0, tape, ro);
  CHECK(rec.total_queries() == 20);
  for (const RunStep& s : rec.steps) {
    CHECK(s.x == Eigen::VectorXd::Zero(16));
    CHECK(s.response.branch == Branch::kNemirovski);
    CHECK(s.state_bits == 0);
  }
}

TEST_CASE("budget violation at checkpoint 1 names the checkpoint") {
  auto inst = std::make_shared<HardInstance>(
      HardInstance::make_static(InstanceParams::make(16, 2, 2, false), 2));
  OversizeAlgorithm alg(16, 65);
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 5;
  try {
    run(alg, make_static_oracle(inst), 64, tape, ro);
    FAIL("expected BudgetViolation");
  } catch (const BudgetViolation& v) {
    CHECK(v.checkpoint() == 1);
    CHECK(v.bits() == 65);
    CHECK(v.budget() == 64);
  }
}

TEST_CASE("out-of-ball queries are clamped and flagged") {
  class FarAlgorithm final : public MemAlgorithm {
   public:
    std::string name() const override { return "far"; }
    Eigen::VectorXd propose(const MemoryState&, RandomTape&) const override {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(16);
      x[0] = 3.0;
      return x;
    }
    MemoryState absorb(const MemoryState&, const Eigen::VectorXd&, double,
                       const Eigen::VectorXd&, RandomTape&) const override {
      return MemoryState{};
    }
  };
  auto inst = std::make_shared<HardInstance>(
      HardInstance::make_static(InstanceParams::make(16, 2, 2, false), 3));
  FarAlgorithm alg;
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 1;
  const RunRecord rec = run(alg, make_static_oracle(inst), 0, tape, ro);
  CHECK(rec.steps[0].clamped);
  CHECK(rec.steps[0].x.norm() == doctest::Approx(1.0));
}

TEST_CASE("projected subgradient descent reaches eps within 1/eps^2 + 1") {
  // Scale-1, 1-Lipschitz pure-f instance at d=32; classic bound with the
  // fixed schedule R/(G*sqrt(T)).
  const double eps = 0.05;
  const long T = static_cast<long>(std::ceil(1.0 / (eps * eps))) + 1;  // 401
  auto inst = pure_f_instance(32, 4, 7);
  const double reference = inst->optimal_witness().value;
  auto sgd = baseline_subgradient_descent(
      32, StepSchedule::constant(1.0 / std::sqrt(static_cast<double>(T))), 32);
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = T;
  const RunRecord rec = run(*sgd, make_static_oracle(inst), 32 * 32 + 32, tape, ro);
  const auto hit = rec.queries_to_gap(reference, eps);
  REQUIRE(hit.has_value());
  CHECK(*hit <= T);
}

TEST_CASE("snapshot lookup fails for missing checkpoints") {
  auto inst = pure_f_instance(8, 1, 2);
  ZeroAlgorithm alg(8);
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 4;
  const RunRecord rec = run(alg, make_static_oracle(inst), 0, tape, ro);
  CHECK_NOTHROW(rec.snapshot_at(0));
  CHECK_THROWS_AS(rec.snapshot_at(3), std::out_of_range);
}

TEST_CASE("quantization width below 8 bits is refused") {
  CHECK_THROWS_AS(
      baseline_subgradient_descent(8, StepSchedule::constant(0.1), 4),
      std::invalid_argument);
}

TEST_CASE("sgd state is exactly d*b + 32 bits at every checkpoint") {
  auto inst = pure_f_instance(16, 2, 4);
  auto sgd = baseline_subgradient_descent(16, StepSchedule::inverse_sqrt(0.1), 24);
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 10;
  const RunRecord rec = run(*sgd, make_static_oracle(inst), 16 * 24 + 32, tape, ro);
  for (const RunStep& s : rec.steps) CHECK(s.state_bits == 16 * 24 + 32);
  // First move from the origin goes along -v_1.
  const Eigen::VectorXd expected = -0.1 * inst->nem_vector(0);
  CHECK((rec.steps[1].x - expected).norm() < 1e-4);
}

TEST_CASE("quantization keeps the descent within the classic slack") {
  // d=32, N=4 scale-1 pure-f: final gap <= 1/sqrt(T) + quantization slack.
  auto inst = pure_f_instance(32, 4, 9);
  const double reference = inst->optimal_witness().value;
  const long T = 10000;
  auto sgd = baseline_subgradient_descent(
      32, StepSchedule::constant(1.0 / std::sqrt(static_cast<double>(T))), 32);
  RandomTape tape(2);
  RunOptions ro;
  ro.max_queries = T;
  const RunRecord rec = run(*sgd, make_static_oracle(inst), 32 * 32 + 32, tape, ro);
  CHECK(rec.best_value() - reference <= 1.0 / std::sqrt(static_cast<double>(T)) + 1e-3);
}

TEST_CASE("snapshot and replay: full, suffix, and divergence under new seed") {
  auto inst = pure_f_instance(16, 3, 11);
  auto sgd = baseline_subgradient_descent(16, StepSchedule::inverse_sqrt(0.2), 32);
  RandomTape tape = RandomTape(42).segment(TapeSegment::kPlayerR2);
  RunOptions ro;
  ro.max_queries = 40;
  ro.snapshot_stride = 10;
  const RunRecord rec =
      run(*sgd, make_static_oracle(inst), 16 * 32 + 32, tape, ro);

  // Full replay from checkpoint 0.
  {
    RandomTape tape2 = RandomTape(42).segment(TapeSegment::kPlayerR2);
    const RunRecord again = replay_from(*sgd, make_static_oracle(inst),
                                        rec.snapshot_at(0), 16 * 32 + 32, tape2, ro);
    REQUIRE(again.steps.size() == rec.steps.size());
    for (std::size_t i = 0; i < rec.steps.size(); ++i) {
      CHECK(again.steps[i].x == rec.steps[i].x);
      CHECK(again.steps[i].response.identical(rec.steps[i].response));
    }
  }
  // Suffix replay from checkpoint 20.
  {
    RandomTape tape2 = RandomTape(42).segment(TapeSegment::kPlayerR2);
    RunOptions tail;
    tail.max_queries = 20;
    const RunRecord suffix = replay_from(*sgd, make_static_oracle(inst),
                                         rec.snapshot_at(20), 16 * 32 + 32,
                                         tape2, tail);
    REQUIRE(suffix.steps.size() == 20);
    for (std::size_t i = 0; i < suffix.steps.size(); ++i) {
      CHECK(suffix.steps[i].x == rec.steps[20 + i].x);
      CHECK(suffix.steps[i].response.identical(rec.steps[20 + i].response));
    }
  }
  // A different tape seed diverges (sanity check of the determinism test).
  {
    class TapeReader final : public MemAlgorithm {
     public:
      std::string name() const override { return "tape-reader"; }
      Eigen::VectorXd propose(const MemoryState&, RandomTape& t) const override {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
        x[0] = t.next_uniform() - 0.5;
        return x;
      }
      MemoryState absorb(const MemoryState&, const Eigen::VectorXd&, double,
                         const Eigen::VectorXd&, RandomTape&) const override {
        return MemoryState{};
      }
    };
    auto tiny = pure_f_instance(4, 1, 1);
    TapeReader reader;
    RunOptions two;
    two.max_queries = 5;
    RandomTape t1(100), t2(101);
    const RunRecord r1 = run(reader, make_static_oracle(tiny), 0, t1, two);
    const RunRecord r2 = run(reader, make_static_oracle(tiny), 0, t2, two);
    bool same = true;
    for (int i = 0; i < 5; ++i) same = same && r1.steps[i].x == r2.steps[i].x;
    CHECK(!same);
  }
}

TEST_CASE("ellipsoid converges on a 1-d piecewise-linear function") {
  // f(x) = |x - 0.3| on [-1, 1].
  Oracle oracle = [](const Eigen::VectorXd& x) {
    FirstOrderResponse r;
    r.value = std::abs(x[0] - 0.3);
    r.subgradient = Eigen::VectorXd::Constant(1, x[0] >= 0.3 ? 1.0 : -1.0);
    r.branch = Branch::kNemirovski;
    return r;
  };
  auto ell = baseline_ellipsoid(1);
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 60;
  const RunRecord rec = run(*ell, oracle, ellipsoid_state_bits(1), tape, ro);
  CHECK(rec.best_value() <= 1e-3);
}

TEST_CASE("ellipsoid state size arithmetic and budget rejection") {
  for (int d = 33; d <= 64; ++d) {
    CHECK(static_cast<double>(ellipsoid_state_bits(d)) >
          std::pow(static_cast<double>(d), 1.25));
  }
  CHECK(ellipsoid_state_bits(16) == 64 * (16 * 17 / 2 + 16) + 32);
  CHECK(ellipsoid_state_bits(16) <= 64 * 16 * 16);  // fits the 64*d^2 budget

  auto inst = std::make_shared<HardInstance>(
      HardInstance::make_static(InstanceParams::make(33, 2, 2, false), 5));
  auto ell = baseline_ellipsoid(33);
  RandomTape tape(5);
  RunOptions ro;
  ro.max_queries = 2;
  const std::size_t budget =
      static_cast<std::size_t>(std::ceil(std::pow(33.0, 1.25)));
  CHECK_THROWS_AS(run(*ell, make_static_oracle(inst), budget, tape, ro),
                  BudgetViolation);
}

TEST_CASE("ellipsoid reaches eps on the d=16 hard instance") {
  const InstanceParams p = InstanceParams::make(16, 3, 2, /*scaled=*/false);
  auto inst = std::make_shared<HardInstance>(HardInstance::make_static(p, 8));
  const double eps = p.epsilon();
  const long cap = static_cast<long>(
      5.0 * 16.0 * 16.0 * std::log(1.0 / eps));  // 5 d^2 ln(1/eps)
  auto ell = baseline_ellipsoid(16);
  RandomTape tape(8);
  RunOptions ro;
  ro.max_queries = cap;
  const RunRecord rec =
      run(*ell, make_static_oracle(inst), ellipsoid_state_bits(16), tape, ro);
  // Measure against the best known value, not just the (loose at d=16)
  // witness, so the count is a real one.
  const double reference =
      std::min(inst->optimal_witness().value, rec.best_value());
  const auto hit = rec.queries_to_gap(reference, eps);
  REQUIRE(hit.has_value());
  CHECK(*hit <= cap);
  MESSAGE("ellipsoid queries to eps at d=16: ", *hit, " (cap ", cap, ")");
}

TEST_CASE("null-space driver: queries in null(A), f-branch, fast descent") {
  const InstanceParams p = InstanceParams::make(32, 3, 2, /*scaled=*/false);
  auto inst = std::make_shared<HardInstance>(HardInstance::make_static(p, 12));
  const HardInstance::Witness w = inst->optimal_witness();
  NullspaceOptions opt;
  opt.polyak_target = w.value - 0.005;
  auto driver = baseline_nullspace(inst, opt);
  RandomTape tape(12);
  RunOptions ro;
  ro.max_queries = p.N * p.d;  // the Nd query allowance
  const RunRecord rec =
      run(*driver, make_static_oracle(inst), 32 * 32 + 80, tape, ro);

  for (const RunStep& s : rec.steps) {
    CHECK(inst->eval_ainf(s.x).value <= 1e-9);
    CHECK(s.response.branch == Branch::kNemirovski);
  }
  const auto hit = rec.queries_to_gap(w.value, p.epsilon());
  REQUIRE(hit.has_value());
  CHECK(*hit <= p.N * p.d);
  MESSAGE("nullspace queries to eps at d=32,N=3: ", *hit);
}

TEST_CASE("run stops on algorithm-declared completion") {
  class OneShot final : public MemAlgorithm {
   public:
    std::string name() const override { return "one-shot"; }
    Eigen::VectorXd propose(const MemoryState&, RandomTape&) const override {
      return Eigen::VectorXd::Zero(8);
    }
    MemoryState absorb(const MemoryState&, const Eigen::VectorXd&, double,
                       const Eigen::VectorXd&, RandomTape&) const override {
      MemoryState s;
      s.append_bit(true);
      return s;
    }
    bool finished(const MemoryState& s) const override { return !s.empty(); }
  };
  auto inst = pure_f_instance(8, 1, 2);
  OneShot alg;
  RandomTape tape(1);
  RunOptions ro;
  ro.max_queries = 50;
  const RunRecord rec = run(alg, make_static_oracle(inst), 8, tape, ro);
  CHECK(rec.total_queries() == 1);
  CHECK(rec.finished_early);
}
