#include <benchmark/benchmark.h>

#include <Eigen/QR>

#include "memlb/geometry.hpp"
#include "memlb/harness.hpp"
#include "memlb/ovg.hpp"
#include "memlb/rng.hpp"

using namespace memlb;

namespace {

void BM_SampleSignMatrix(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    RandomTape tape(seed++);
    benchmark::DoNotOptimize(sample_sign_matrix(d, d / 2, tape));
  }
}
BENCHMARK(BM_SampleSignMatrix)->Arg(32)->Arg(64)->Arg(128);

void BM_StaticOracle(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const InstanceParams p = InstanceParams::make(d, 3, 2, /*scaled=*/false);
  const HardInstance inst = HardInstance::make_static(p, 7);
  Rng rng(3);
  const Eigen::VectorXd x = rng.unit_ball(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(inst.query_static(x));
  }
}
BENCHMARK(BM_StaticOracle)->Arg(32)->Arg(64)->Arg(128);

void BM_AdaptivePhaseWalk(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const InstanceParams p = InstanceParams::make(d, 3, 2, /*scaled=*/false);
  for (auto _ : state) {
    auto twin = std::make_shared<HardInstance>(HardInstance::make_static(p, 5));
    auto inst = std::make_shared<HardInstance>(HardInstance::make_adaptive(p, 5));
    NullspaceOptions opt;
    opt.ladder = true;
    auto driver = baseline_nullspace(twin, opt);
    RandomTape tape(5);
    RunOptions ro;
    ro.max_queries = 50;
    benchmark::DoNotOptimize(
        run(*driver, make_adaptive_oracle(inst), 1u << 20, tape, ro));
  }
}
BENCHMARK(BM_AdaptivePhaseWalk)->Arg(32)->Arg(64);

void BM_EllipsoidStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const InstanceParams p = InstanceParams::make(d, 3, 2, /*scaled=*/false);
  auto inst = std::make_shared<HardInstance>(HardInstance::make_static(p, 9));
  auto ell = baseline_ellipsoid(d);
  for (auto _ : state) {
    RandomTape tape(9);
    RunOptions ro;
    ro.max_queries = 8;
    benchmark::DoNotOptimize(
        run(*ell, make_static_oracle(inst), ellipsoid_state_bits(d), tape, ro));
  }
}
BENCHMARK(BM_EllipsoidStep)->Arg(16)->Arg(32)->Arg(64);

void BM_CheckSuccess(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RandomTape tape = RandomTape(11).segment(TapeSegment::kInstanceMatrix);
  const SignMatrix A = sample_sign_matrix(d, d / 2, tape);
  Rng rng(4);
  std::vector<Eigen::VectorXd> Y;
  for (int j = 0; j < 8; ++j) Y.push_back(rng.unit_sphere(d));
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_success(A, Y, 0.25, 1e-4));
  }
}
BENCHMARK(BM_CheckSuccess)->Arg(40)->Arg(64);

void BM_ConstructM(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(6);
  Eigen::MatrixXd G(d, 8);
  for (int j = 0; j < 8; ++j) G.col(j) = rng.gaussian_vector(d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd frame = qr.householderQ() * Eigen::MatrixXd::Identity(d, 8);
  std::vector<Eigen::VectorXd> vectors;
  for (int j = 0; j < 8; ++j) {
    vectors.push_back((frame.col(j) + 0.3 * rng.unit_sphere(d)).normalized());
  }
  const RobustSet set(vectors, 1.0 / (static_cast<double>(d) * d));
  for (auto _ : state) {
    benchmark::DoNotOptimize(construct_M(set));
  }
}
BENCHMARK(BM_ConstructM)->Arg(40)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
