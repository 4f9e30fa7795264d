#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memlb/base.hpp"
#include "memlb/bits.hpp"
#include "memlb/harness.hpp"
#include "memlb/instance.hpp"
#include "memlb/tape.hpp"

namespace memlb {

enum class OracleVariant { kSubgradient, kIndex };

struct GameParams {
  int d = 0;
  int k = 0;            // vectors to return
  long m = 0;           // query budget
  std::size_t message_bits = 0;  // message budget M
  OracleVariant variant = OracleVariant::kSubgradient;

  int n() const { return d / 2; }
  double theta() const {
    const double dd = static_cast<double>(d);
    return 1.0 / (dd * dd * dd * dd);
  }
  double independence_slack() const {
    const double dd = static_cast<double>(d);
    return 1.0 / (dd * dd);
  }
};

// k = ceil(multiplier * M / (c_B * d)) with c_B the base constant (user
// supplied or the fitted exponent from the concentration estimator).
int round_length_for_budget(std::size_t message_bits, int d, double c_base,
                            double multiplier = 60.0);

struct VectorVerdict {
  bool pass = false;
  bool cond1 = false;      // ||A y||_inf / ||y|| <= theta
  bool cond2 = false;      // projection ratio <= 1 - slack
  bool zero = false;       // zero vector (automatic fail)
  double ainf_ratio = 0.0;
  double proj_ratio = 0.0;
};

// Both success conditions with exact order dependence (the span S_{i-1} is
// built from all previous returned vectors).
std::vector<VectorVerdict> check_success(const SignMatrix& A,
                                         const std::vector<Eigen::VectorXd>& Y,
                                         double theta, double slack);

// The signed min-index row: sign(a_i^T x) * a_i for the least i attaining
// |a_i^T x| = ||Ax||_inf (a subgradient of ||Ax||_inf).
Eigen::VectorXd subgradient_response(const SignMatrix& A,
                                     const Eigen::VectorXd& x);

// Stage-2 oracle access. The variant decides which call is legal.
class GameOracleHandle {
 public:
  GameOracleHandle(const SignMatrix& A, const GameParams& params);

  Eigen::VectorXd query_vector(const Eigen::VectorXd& x);
  Eigen::VectorXd query_row(int index);  // 1-based

  long queries_used() const { return static_cast<long>(responses_.size()); }
  const std::vector<Eigen::VectorXd>& queries() const { return queries_; }
  const std::vector<Eigen::VectorXd>& responses() const { return responses_; }

 private:
  void check_budget();
  const SignMatrix& A_;
  GameParams params_;
  std::vector<Eigen::VectorXd> queries_;
  std::vector<Eigen::VectorXd> responses_;
};

// A player: three deterministic stages. A is visible only in stage 1; the
// interface does not pass it to the later stages.
class PlayerStrategy {
 public:
  virtual ~PlayerStrategy() = default;
  virtual std::string name() const = 0;
  virtual MemoryState observe(const GameParams& params, const SignMatrix& A,
                              RandomTape& r) = 0;
  virtual void interact(GameOracleHandle& oracle, const MemoryState& message,
                        RandomTape& r) = 0;
  virtual std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd& X,
                                               const Eigen::MatrixXd& G,
                                               const MemoryState& message,
                                               RandomTape& r) = 0;
  virtual std::string status() const { return ""; }
};

struct GameTranscript {
  GameParams params;
  std::uint64_t seed = 0;
  std::string strategy;
  MemoryState message;
  std::vector<Eigen::VectorXd> queries;
  std::vector<Eigen::VectorXd> responses;
  std::vector<Eigen::VectorXd> returned;
  std::vector<VectorVerdict> verdicts;
  bool win = false;
  std::string violation;  // nonempty when the protocol was broken
  std::string status;
};

// Runs one game: sample A, stage 1 with budget enforcement, stage 2 behind
// the oracle handle, stage 3, verdicts.
GameTranscript play(const GameParams& params, PlayerStrategy& strategy,
                    std::uint64_t seed);

// Trivial upper-bound strategies.
std::unique_ptr<PlayerStrategy> strategy_store_null_vectors();
std::unique_ptr<PlayerStrategy> strategy_query_all_rows();
// Negative control: returns the first k rows of A (stored in the message).
std::unique_ptr<PlayerStrategy> strategy_return_rows();

// The optimization -> game reduction (Algorithm-2 player).
struct ReductionOptions {
  InstanceParams instance;  // d and n must match the game
  std::function<std::unique_ptr<MemAlgorithm>(std::shared_ptr<const HardInstance>)>
      make_optimizer;
  long part1_max_queries = 20000;
  std::uint64_t subset_cap = 1000000;
  bool greedy_fallback = true;
};
std::unique_ptr<PlayerStrategy> reduction_adapter(ReductionOptions options);

}  // namespace memlb
