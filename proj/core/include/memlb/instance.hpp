#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memlb/base.hpp"
#include "memlb/tape.hpp"

namespace memlb {

// Relative tie band for branch and argmin decisions on floating point.
inline constexpr double kTieTolerance = 1e-12;

// Parameters of the hard function F = scale * max(eta*||Ax||_inf - rho, f).
//
// The default wiring sets gamma = min(sqrt(400*k*ln(d)/d), 1/(32*N^{3/2})):
// the first term is the asymptotic schedule, the second is the largest step
// compatible with the depth cap N <= (1/(32*gamma))^{2/3}, which binds at
// desk-scale d. An explicitly supplied gamma is validated against the cap and
// refused when the cap is violated.
struct InstanceParams {
  int d = 0;
  int n = 0;       // floor(d/2) under default wiring
  int N = 0;       // Nemirovski depth
  int k = 0;       // round length
  double gamma = 0.0;
  double eta = 0.0;    // d^5 by default
  double rho = 1.0;
  double global_scale = 1.0;  // 1/d^6 for the 1-Lipschitz setting

  // Derived targets.
  double epsilon() const;              // 1/(20*sqrt(N))
  double theta() const;                // 1/d^4
  double independence_slack() const;   // 1/d^2
  double depth_cap() const;            // (1/(32*gamma))^{2/3}

  static double default_gamma(int d, int k, int N);

  // Default wiring. scaled=true selects global_scale = 1/d^6, otherwise 1.
  // Throws std::invalid_argument when N violates the depth cap for the
  // (possibly overridden) gamma.
  static InstanceParams make(int d, int N, int k, bool scaled = true,
                             std::optional<double> gamma_override = std::nullopt);

  void validate() const;
};

enum class Branch { kMatrix, kNemirovski };

inline const char* branch_name(Branch b) {
  return b == Branch::kMatrix ? "A" : "f";
}

// One first-order oracle response.
struct FirstOrderResponse {
  double value = 0.0;
  Eigen::VectorXd subgradient;
  Branch branch = Branch::kMatrix;
  int attained_index = 0;  // 1-based row or Nemirovski index; 0 if n = 0
  bool informative = false;
  int phase = 0;  // phase at query time (adaptive mode; 0 in static mode)

  bool identical(const FirstOrderResponse& other) const {
    return value == other.value && branch == other.branch &&
           subgradient.size() == other.subgradient.size() &&
           subgradient == other.subgradient;
  }
};

struct AinfResult {
  double value = 0.0;
  int index = 0;  // least 1-based row index attaining |a_i^T x|; 0 if n = 0
  int sign = 1;   // sign of a_i^T x at that index, +1 on exact zero
};

// Fixed-order accumulation. Every path that must reproduce a row product
// bit-exactly (the oracle, the game response, the reduction's simulated
// oracle) goes through this one helper.
double sequential_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ||Ax||_inf with the least attaining row and its sign, over sequential dots.
AinfResult ainf_scan(const SignMatrix& A, const Eigen::VectorXd& x);

// The hard instance. Static mode holds all N Nemirovski vectors from
// construction; adaptive mode materializes them phase by phase (Player B),
// reading vector j from the dedicated tape segment at offset (j-1)*d so the
// vector stream is a pure function of (seed, j).
class HardInstance {
 public:
  enum class Mode { kStatic, kAdaptive };

  static HardInstance make_static(const InstanceParams& params,
                                  std::uint64_t seed);
  static HardInstance make_adaptive(const InstanceParams& params,
                                    std::uint64_t seed);
  // Static instance over explicit data (file loads, tests).
  static HardInstance from_parts(const InstanceParams& params,
                                 std::uint64_t seed, SignMatrix A,
                                 std::vector<BaseVector> nem_vectors);

  const InstanceParams& params() const { return params_; }
  Mode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  const SignMatrix& A() const { return A_; }
  int phase() const { return phase_; }
  bool exhausted() const { return exhausted_; }

  int materialized() const { return static_cast<int>(nem_count_); }
  const std::vector<BaseVector>& nem_vectors() const { return nem_raw_; }
  // Row j (0-based) of the cached (unit-norm) Nemirovski matrix.
  Eigen::VectorXd nem_vector(int j) const { return nem_.row(j).transpose(); }

  // f(x) = max over materialized i of v_i^T x - i*gamma, with the least
  // attaining index under the tie band. Unscaled.
  std::pair<double, int> eval_f(const Eigen::VectorXd& x) const;

  // ||Ax||_inf with attaining row and sign.
  AinfResult eval_ainf(const Eigen::VectorXd& x) const;

  // Full unscaled function value (max of both terms).
  double value(const Eigen::VectorXd& x) const;

  // Static first-order oracle; requires static mode (or a completed adaptive
  // instance), never mutates.
  FirstOrderResponse query_static(const Eigen::VectorXd& x) const;

  // Adaptive first-order oracle (Player B). Answers against the materialized
  // prefix; advances the phase and samples the next vector when the newest
  // vector's subgradient is revealed. Sets `informative` on first reveals.
  FirstOrderResponse query_adaptive(const Eigen::VectorXd& x);

  // Oracle entry point dispatching on mode.
  FirstOrderResponse query(const Eigen::VectorXd& x);

  // Samples every remaining vector (end of an adaptive run).
  void materialize_all();

  // Null-space projector of A applied to w (I - Q_r Q_r^T with Q_r an
  // orthonormal row-space basis).
  Eigen::VectorXd project_null(const Eigen::VectorXd& w) const;
  int row_space_rank() const;

  // The explicit near-minimizer and its exact value.
  struct Witness {
    Eigen::VectorXd x;
    double value = 0.0;        // scaled F(x)
    bool in_ball = true;       // ||x|| <= 1 (norm overflow otherwise)
    bool rank_deficient = false;
    double ainf = 0.0;         // ||A x||_inf, ~0 by construction
  };
  Witness optimal_witness() const;

 private:
  HardInstance(const InstanceParams& params, std::uint64_t seed, Mode mode);

  void push_vector(const BaseVector& v);
  void sample_next_vector();
  FirstOrderResponse respond(const Eigen::VectorXd& x, int horizon) const;
  void ensure_null_basis() const;

  InstanceParams params_;
  std::uint64_t seed_ = 0;
  Mode mode_ = Mode::kStatic;
  SignMatrix A_;
  std::vector<BaseVector> nem_raw_;
  Eigen::MatrixXd nem_;  // N x d, rows unit norm (scale 1/sqrt(d) applied)
  long nem_count_ = 0;
  int phase_ = 1;
  bool exhausted_ = false;
  std::vector<bool> revealed_;  // vector j returned on the f-branch before?

  mutable Eigen::MatrixXd row_basis_;  // d x rank, orthonormal
  mutable int rank_ = -1;
};

// Ordered log of informative (query, subgradient) pairs per Definition of
// informative subgradients, with the rolling spans S_j used by the robust
// independence condition: S_j = span{x_{t_i} : max(1, j-k) <= i <= j}.
class InformativeLog {
 public:
  explicit InformativeLog(int k) : k_(k) {}

  struct Entry {
    Eigen::VectorXd query;
    Eigen::VectorXd subgradient;
    long step = 0;  // t_j: 1-based position in the query sequence
  };

  int k() const { return k_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  // Appends iff the response is an f-branch one whose subgradient has not
  // been logged. Returns true when appended.
  bool track(const FirstOrderResponse& response, const Eigen::VectorXd& query,
             long step);

  // Orthonormal basis of S_j (1-based j; j = 0 gives the empty span).
  Eigen::MatrixXd span_basis(int j) const;

  // ||proj_{S_{j-1}}(x_{t_j})||_2 / ||x_{t_j}||_2 for 1-based j.
  double projection_ratio(int j) const;

 private:
  int k_;
  std::vector<Entry> entries_;
};

// Event E: for every materialized phase j, (1) every query submitted in
// phases 1..j has |x^T v_j| <= sqrt(10*ln(d)/d), and (2) the projection of
// v_j onto S_j is at most sqrt(30*k*ln(d)/d).
struct EventEReport {
  bool holds = true;
  int phase = 0;      // first violating phase (1-based)
  int condition = 0;  // 1 or 2
  long step = 0;      // violating query step for condition 1
  double observed = 0.0;
  double threshold = 0.0;
  std::string describe() const;
};

struct QueryTrace {
  Eigen::VectorXd x;
  FirstOrderResponse response;
};

// Evaluates event E over an adaptive run trace. The instance supplies the
// materialized vectors; the trace must carry the phase at query time.
EventEReport check_event_E(const HardInstance& inst,
                           const std::vector<QueryTrace>& trace);

// Informative log reconstructed from a trace (queries processed in order).
InformativeLog informative_log_from_trace(const std::vector<QueryTrace>& trace,
                                          int k);

}  // namespace memlb
