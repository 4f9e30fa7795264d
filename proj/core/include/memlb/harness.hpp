#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memlb/bits.hpp"
#include "memlb/instance.hpp"
#include "memlb/tape.hpp"

namespace memlb {

// A memory-constrained first-order algorithm: a deterministic behavior pair
// over an opaque bit-string state, with randomness only through the tape.
// Runs start from the empty state.
class MemAlgorithm {
 public:
  virtual ~MemAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual Eigen::VectorXd propose(const MemoryState& state,
                                  RandomTape& tape) const = 0;
  virtual MemoryState absorb(const MemoryState& state,
                             const Eigen::VectorXd& query, double value,
                             const Eigen::VectorXd& subgradient,
                             RandomTape& tape) const = 0;
  // Algorithm-declared completion, checked before each propose.
  virtual bool finished(const MemoryState& state) const { return false; }
};

using Oracle = std::function<FirstOrderResponse(const Eigen::VectorXd&)>;

struct RunStep {
  long step = 0;  // 1-based
  Eigen::VectorXd x;
  FirstOrderResponse response;
  std::size_t state_bits = 0;  // after absorb
  bool clamped = false;        // query was outside the ball and got clamped
};

struct Snapshot {
  std::size_t checkpoint = 0;  // number of completed steps
  MemoryState state;
  std::uint64_t tape_cursor = 0;
};

// Full record of one memory-accounted run per the query-sequence definition.
struct RunRecord {
  std::string algorithm;
  std::size_t budget_bits = 0;
  std::vector<RunStep> steps;
  std::vector<Snapshot> snapshots;  // checkpoint 0 and every stride-th one
  MemoryState final_state;
  std::uint64_t final_tape_cursor = 0;
  bool finished_early = false;

  long total_queries() const { return static_cast<long>(steps.size()); }
  double best_value() const;
  long informative_count() const;
  // First 1-based step with value - reference <= eps; nullopt if never.
  std::optional<long> queries_to_gap(double reference, double eps) const;
  std::vector<QueryTrace> trace() const;

  const Snapshot& snapshot_at(std::size_t checkpoint) const;
};

struct RunOptions {
  long max_queries = 1000;
  std::size_t snapshot_stride = 0;  // 0: only checkpoint 0
  // Optional early-stop probe, checked after each absorb.
  std::function<bool(const RunRecord&)> stop_when;
};

// Alternates propose/absorb against the oracle, asserting the state stays
// within `budget_bits` after every absorb. Queries outside the unit ball are
// clamped to the sphere and flagged. Throws BudgetViolation on overflow.
RunRecord run(const MemAlgorithm& alg, const Oracle& oracle,
              std::size_t budget_bits, RandomTape& tape,
              const RunOptions& options);

// Re-runs from a snapshot: the algorithm restarts from the stored state and
// tape cursor; the oracle must be positioned as it was at that checkpoint
// (stateless oracles need nothing; adaptive ones can be warmed by replaying
// the prefix queries from the original record, see warm_oracle_prefix).
RunRecord replay_from(const MemAlgorithm& alg, const Oracle& oracle,
                      const Snapshot& snapshot, std::size_t budget_bits,
                      RandomTape& tape, const RunOptions& options);

// Feeds the first `checkpoint` recorded queries to the oracle, discarding
// responses. Positions a stateful oracle for replay_from.
void warm_oracle_prefix(const Oracle& oracle, const RunRecord& record,
                        std::size_t checkpoint);

// Projected subgradient descent whose state is the iterate quantized to
// `quantization_bits` fixed-point bits per coordinate plus a 32-bit step
// counter (exactly d*b + 32 bits).
struct StepSchedule {
  std::function<double(long)> step;  // step size at 0-based iteration t
  static StepSchedule constant(double c);
  static StepSchedule inverse_sqrt(double c);  // c / sqrt(t+1)
};

std::unique_ptr<MemAlgorithm> baseline_subgradient_descent(
    int d, StepSchedule schedule, int quantization_bits);

// Central-cut ellipsoid method; state holds the center and the full shape
// matrix at 64 bits per float (64*(d^2+d) + 32 bits).
std::unique_ptr<MemAlgorithm> baseline_ellipsoid(int d);
std::size_t ellipsoid_state_bits(int d);

// Diagnostic driver that receives the instance out of band and runs projected
// subgradient steps inside null(A), with an optional Polyak step rule against
// a target value. Exhibits the query-optimal regime.
//
// Ladder mode re-targets the Polyak step at -(seen + 1.8)*gamma where seen is
// the highest Nemirovski index revealed so far: the driver walks the phases
// one at a time and its queried values never drop below the current rung
// (-(r + 0.8)*gamma while in phase r). With a nonzero patience the rung
// deepens by 0.5*gamma whenever that many queries pass without a new reveal;
// the value floor is then traded for guaranteed progress.
struct NullspaceOptions {
  int quantization_bits = 32;
  std::optional<double> polyak_target;  // scaled target value
  bool ladder = false;                  // overrides polyak_target
  int ladder_patience = 0;              // 0: never deepen
  double fallback_step = 0.05;          // used when no target is set
};
std::unique_ptr<MemAlgorithm> baseline_nullspace(
    std::shared_ptr<const HardInstance> instance, NullspaceOptions options);

// Oracle adapters.
Oracle make_static_oracle(std::shared_ptr<const HardInstance> instance);
Oracle make_adaptive_oracle(std::shared_ptr<HardInstance> instance);

}  // namespace memlb
