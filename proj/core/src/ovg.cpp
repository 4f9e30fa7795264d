#include "memlb/ovg.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/QR>

#include "memlb/errors.hpp"
#include "memlb/geometry.hpp"

namespace memlb {

int round_length_for_budget(std::size_t message_bits, int d, double c_base,
                            double multiplier) {
  if (c_base <= 0.0) throw std::invalid_argument("round_length_for_budget: c_base must be > 0");
  const double raw = multiplier * static_cast<double>(message_bits) /
                     (c_base * static_cast<double>(d));
  return static_cast<int>(std::ceil(raw));
}

std::vector<VectorVerdict> check_success(const SignMatrix& A,
                                         const std::vector<Eigen::VectorXd>& Y,
                                         double theta, double slack) {
  std::vector<VectorVerdict> verdicts;
  verdicts.reserve(Y.size());
  IncrementalSpan span(A.d());
  for (const Eigen::VectorXd& y : Y) {
    VectorVerdict v;
    const double norm = y.norm();
    if (norm == 0.0) {
      v.zero = true;
      verdicts.push_back(v);
      continue;  // the zero vector still extends nothing
    }
    v.ainf_ratio = A.n() == 0 ? 0.0 : (A.dense() * y).cwiseAbs().maxCoeff() / norm;
    v.cond1 = v.ainf_ratio <= theta;
    v.proj_ratio = span.projection_norm(y) / norm;
    v.cond2 = v.proj_ratio <= 1.0 - slack;
    v.pass = v.cond1 && v.cond2;
    span.add(y);
    verdicts.push_back(v);
  }
  return verdicts;
}

Eigen::VectorXd subgradient_response(const SignMatrix& A,
                                     const Eigen::VectorXd& x) {
  if (A.n() == 0) throw std::logic_error("subgradient_response: empty matrix");
  const AinfResult r = ainf_scan(A, x);
  return static_cast<double>(r.sign) * A.dense().row(r.index - 1).transpose();
}

GameOracleHandle::GameOracleHandle(const SignMatrix& A, const GameParams& params)
    : A_(A), params_(params) {}

void GameOracleHandle::check_budget() {
  if (queries_used() >= params_.m) {
    throw ProtocolViolation("query budget m = " + std::to_string(params_.m) +
                            " exhausted");
  }
}

Eigen::VectorXd GameOracleHandle::query_vector(const Eigen::VectorXd& x) {
  if (params_.variant != OracleVariant::kSubgradient) {
    throw ProtocolViolation("vector queries are not allowed in the index variant");
  }
  check_budget();
  queries_.push_back(x);
  responses_.push_back(subgradient_response(A_, x));
  return responses_.back();
}

Eigen::VectorXd GameOracleHandle::query_row(int index) {
  if (params_.variant != OracleVariant::kIndex) {
    throw ProtocolViolation("row queries are not allowed in the subgradient variant");
  }
  if (index < 1 || index > A_.n()) {
    throw ProtocolViolation("row index " + std::to_string(index) + " out of range");
  }
  check_budget();
  Eigen::VectorXd marker = Eigen::VectorXd::Zero(A_.d());
  marker[index - 1] = 1.0;  // recorded in X as the basis vector of the index
  queries_.push_back(marker);
  responses_.push_back(A_.dense().row(index - 1).transpose());
  return responses_.back();
}

GameTranscript play(const GameParams& params, PlayerStrategy& strategy,
                    std::uint64_t seed) {
  GameTranscript t;
  t.params = params;
  t.seed = seed;
  t.strategy = strategy.name();

  RandomTape root(seed);
  RandomTape a_tape = root.segment(TapeSegment::kInstanceMatrix);
  const SignMatrix A = sample_sign_matrix(params.d, params.n(), a_tape);

  RandomTape player_tape(seed);  // players derive R1/R2/R3 segments from this

  t.message = strategy.observe(params, A, player_tape);
  if (t.message.bit_length() > params.message_bits) {
    t.violation = "message over budget: " + std::to_string(t.message.bit_length()) +
                  " > " + std::to_string(params.message_bits) + " bits";
    t.win = false;
    t.status = strategy.status();
    return t;
  }

  GameOracleHandle handle(A, params);
  try {
    strategy.interact(handle, t.message, player_tape);
  } catch (const ProtocolViolation& violation) {
    t.violation = violation.what();
    t.queries = handle.queries();
    t.responses = handle.responses();
    t.win = false;
    t.status = strategy.status();
    return t;
  }
  t.queries = handle.queries();
  t.responses = handle.responses();

  const long m_used = handle.queries_used();
  Eigen::MatrixXd X(m_used, params.d);
  Eigen::MatrixXd G(m_used, params.d);
  for (long i = 0; i < m_used; ++i) {
    X.row(i) = t.queries[static_cast<std::size_t>(i)].transpose();
    G.row(i) = t.responses[static_cast<std::size_t>(i)].transpose();
  }
  t.returned = strategy.produce(X, G, t.message, player_tape);

  t.verdicts = check_success(A, t.returned, params.theta(),
                             params.independence_slack());
  t.win = static_cast<int>(t.returned.size()) == params.k;
  for (const VectorVerdict& v : t.verdicts) t.win = t.win && v.pass;
  t.status = strategy.status();
  return t;
}

namespace {

Eigen::MatrixXd null_basis(const Eigen::MatrixXd& rows, int d, int k) {
  // Columns r..r+k-1 of the Q factor of rows^T span null(rows).
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
  const int rank = static_cast<int>(qr.rank());
  if (rank + k > d) {
    throw std::runtime_error("null_basis: null space smaller than k");
  }
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, rank + k);
  return Q.rightCols(k);
}

class StoreNullVectors final : public PlayerStrategy {
 public:
  std::string name() const override { return "store-null-vectors"; }

  MemoryState observe(const GameParams& params, const SignMatrix& A,
                      RandomTape&) override {
    k_ = params.k;
    d_ = A.d();
    const Eigen::MatrixXd Z = null_basis(A.dense(), A.d(), k_);
    MemoryState msg;
    for (int j = 0; j < k_; ++j) {
      for (int i = 0; i < d_; ++i) append_double(msg, Z(i, j));
    }
    return msg;
  }

  void interact(GameOracleHandle&, const MemoryState&, RandomTape&) override {}

  std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd&,
                                       const Eigen::MatrixXd&,
                                       const MemoryState& message,
                                       RandomTape&) override {
    BitReader reader(message);
    std::vector<Eigen::VectorXd> Y;
    for (int j = 0; j < k_; ++j) {
      Eigen::VectorXd y(d_);
      for (int i = 0; i < d_; ++i) y[i] = reader.read_double();
      Y.push_back(std::move(y));
    }
    return Y;
  }

 private:
  int k_ = 0;
  int d_ = 0;
};

class QueryAllRows final : public PlayerStrategy {
 public:
  std::string name() const override { return "query-all-rows"; }

  MemoryState observe(const GameParams& params, const SignMatrix& A,
                      RandomTape&) override {
    k_ = params.k;
    d_ = A.d();
    n_ = A.n();
    return MemoryState{};  // zero message bits
  }

  void interact(GameOracleHandle& oracle, const MemoryState&, RandomTape&) override {
    for (int i = 1; i <= n_; ++i) oracle.query_row(i);
  }

  std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd&,
                                       const Eigen::MatrixXd& G,
                                       const MemoryState&, RandomTape&) override {
    const Eigen::MatrixXd Z = null_basis(G, d_, k_);
    std::vector<Eigen::VectorXd> Y;
    for (int j = 0; j < k_; ++j) Y.push_back(Z.col(j));
    return Y;
  }

 private:
  int k_ = 0;
  int d_ = 0;
  int n_ = 0;
};

class ReturnRows final : public PlayerStrategy {
 public:
  std::string name() const override { return "return-rows"; }

  MemoryState observe(const GameParams& params, const SignMatrix& A,
                      RandomTape&) override {
    k_ = params.k;
    d_ = A.d();
    MemoryState msg;
    for (int j = 0; j < k_; ++j) {
      for (int i = 0; i < d_; ++i) {
        append_double(msg, static_cast<double>(A.row(j % A.n()).sign(i)));
      }
    }
    return msg;
  }

  void interact(GameOracleHandle&, const MemoryState&, RandomTape&) override {}

  std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd&,
                                       const Eigen::MatrixXd&,
                                       const MemoryState& message,
                                       RandomTape&) override {
    BitReader reader(message);
    std::vector<Eigen::VectorXd> Y;
    for (int j = 0; j < k_; ++j) {
      Eigen::VectorXd y(d_);
      for (int i = 0; i < d_; ++i) y[i] = reader.read_double();
      Y.push_back(std::move(y));
    }
    return Y;
  }

 private:
  int k_;
  int d_ = 0;
};

class ReductionPlayer final : public PlayerStrategy {
 public:
  explicit ReductionPlayer(ReductionOptions options) : opt_(std::move(options)) {}

  std::string name() const override { return "algorithm2-reduction"; }
  std::string status() const override { return status_; }

  MemoryState observe(const GameParams& params, const SignMatrix& A,
                      RandomTape& r) override {
    if (A.d() != opt_.instance.d || A.n() != opt_.instance.n) {
      throw std::invalid_argument("reduction: instance shape mismatch");
    }
    game_k_ = params.k;
    m_ = params.m;
    // Part 1: sample (f, g_f) from R1 and find the first block whose k+1
    // informative subgradients fit in m queries.
    sample_function(r);
    instance_ = std::make_shared<HardInstance>(HardInstance::from_parts(
        opt_.instance, /*seed=*/0, A, nem_vectors_));
    optimizer_ = opt_.make_optimizer(instance_);

    // Blocks partition the first N informative subgradients into groups of
    // k+1; the message is the state at the boundary of the first block that
    // fits in m queries (block 0: the initial, empty state).
    const int block = game_k_ + 1;
    const int blocks = opt_.instance.N / block;
    for (int i = 0; i < blocks; ++i) {
      RandomTape r2 = r.segment(TapeSegment::kPlayerR2);
      MemoryState state;
      InformativeLog log(game_k_);
      long queries = 0;

      // Run on R2 until i*(k+1) informative subgradients are observed.
      while (log.size() < i * block && queries < opt_.part1_max_queries) {
        step(state, r2, log, queries);
      }
      if (log.size() < i * block) break;  // later blocks cannot be reached
      const MemoryState boundary_state = state;

      // Continue on R3 until k+1 more informative subgradients; count queries.
      RandomTape r3 = r.segment(TapeSegment::kPlayerR3);
      long t = 0;
      while (log.size() < (i + 1) * block && t < opt_.part1_max_queries) {
        step(state, r3, log, t);
      }
      if (log.size() >= (i + 1) * block && t <= m_) {
        status_ = "part1-block-" + std::to_string(i);
        return boundary_state;
      }
    }
    status_ = "part1-failure";
    failed_ = true;
    return MemoryState{};
  }

  void interact(GameOracleHandle& oracle, const MemoryState& message,
                RandomTape& r) override {
    if (failed_) return;
    // Part 2: resume from the message, answering first-order queries through
    // the game oracle: F(x) = max(eta*|g^T x| - rho, f(x)).
    RandomTape r3 = r.segment(TapeSegment::kPlayerR3);
    MemoryState state = message;
    for (long i = 0; i < m_; ++i) {
      Eigen::VectorXd x = optimizer_->propose(state, r3);
      const double norm = x.norm();
      if (norm > 1.0) x /= norm;
      const Eigen::VectorXd g = oracle.query_vector(x);
      const FirstOrderResponse resp = simulate(x, g);
      state = optimizer_->absorb(state, x, resp.value, resp.subgradient, r3);
    }
  }

  std::vector<Eigen::VectorXd> produce(const Eigen::MatrixXd& X,
                                       const Eigen::MatrixXd& G,
                                       const MemoryState&, RandomTape&) override {
    if (failed_) return {};
    // Part 3: search the queries for k vectors passing both conditions,
    // using only the game responses (never A).
    const double theta = opt_.instance.theta();
    const double slack = opt_.instance.independence_slack();
    std::vector<long> candidates;
    for (long i = 0; i < X.rows(); ++i) {
      const double norm = X.row(i).norm();
      if (norm == 0.0) continue;
      if (std::abs(G.row(i).dot(X.row(i))) / norm <= theta) candidates.push_back(i);
    }
    const int k = game_k_;
    if (static_cast<int>(candidates.size()) < k) {
      status_ += " part3-too-few-candidates";
      return {};
    }

    std::uint64_t combinations = 1;
    bool over_cap = false;
    for (int i = 0; i < k; ++i) {
      combinations = combinations * (candidates.size() - static_cast<std::size_t>(i)) /
                     static_cast<std::uint64_t>(i + 1);
      if (combinations > opt_.subset_cap) {
        over_cap = true;
        break;
      }
    }

    if (!over_cap) {
      std::vector<int> choose(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) choose[static_cast<std::size_t>(i)] = i;
      while (true) {
        std::vector<Eigen::VectorXd> subset;
        for (int idx : choose) {
          subset.push_back(X.row(candidates[static_cast<std::size_t>(idx)]).transpose());
        }
        if (validate_robust_set(subset, slack).valid) return subset;
        // next combination
        int pos = k - 1;
        while (pos >= 0 &&
               choose[static_cast<std::size_t>(pos)] ==
                   static_cast<int>(candidates.size()) - k + pos) {
          --pos;
        }
        if (pos < 0) break;
        ++choose[static_cast<std::size_t>(pos)];
        for (int j = pos + 1; j < k; ++j) {
          choose[static_cast<std::size_t>(j)] = choose[static_cast<std::size_t>(j - 1)] + 1;
        }
      }
      status_ += " part3-exhausted";
      return {};
    }

    if (!opt_.greedy_fallback) {
      status_ += " part3-over-cap";
      return {};
    }
    // Greedy: grow the set by the first query passing both conditions
    // against the current span.
    std::vector<Eigen::VectorXd> Y;
    IncrementalSpan span(static_cast<int>(X.cols()));
    for (long idx : candidates) {
      const Eigen::VectorXd y = X.row(idx).transpose();
      if (span.projection_norm(y) / y.norm() <= 1.0 - slack) {
        Y.push_back(y);
        span.add(y);
        if (static_cast<int>(Y.size()) == k) return Y;
      }
    }
    status_ += " part3-greedy-short";
    return {};
  }

 private:
  void sample_function(RandomTape& r) {
    RandomTape r1 = r.segment(TapeSegment::kPlayerR1);
    nem_vectors_.clear();
    const double scale = 1.0 / std::sqrt(static_cast<double>(opt_.instance.d));
    for (int j = 0; j < opt_.instance.N; ++j) {
      nem_vectors_.push_back(sample_base_vector(opt_.instance.d, scale, r1));
    }
    InstanceParams pure_f = opt_.instance;
    pure_f.n = 0;
    f_only_ = std::make_shared<HardInstance>(HardInstance::from_parts(
        pure_f, /*seed=*/0, SignMatrix(pure_f.d, {}), nem_vectors_));
  }

  // One propose/respond/absorb step against the true static oracle (Part 1).
  void step(MemoryState& state, RandomTape& tape, InformativeLog& log,
            long& queries) {
    Eigen::VectorXd x = optimizer_->propose(state, tape);
    const double norm = x.norm();
    if (norm > 1.0) x /= norm;
    const FirstOrderResponse resp = instance_->query_static(x);
    ++queries;
    log.track(resp, x, queries);
    state = optimizer_->absorb(state, x, resp.value, resp.subgradient, tape);
  }

  // Part-2 first-order simulation from the game response. |g^T x| equals
  // ||Ax||_inf bit-exactly through the shared sequential dot.
  FirstOrderResponse simulate(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& g) const {
    const InstanceParams& p = opt_.instance;
    const double a_term = p.eta * std::abs(sequential_dot(g, x)) - p.rho;
    const auto [f_term, k_min] = f_only_->eval_f(x);
    FirstOrderResponse resp;
    resp.value = p.global_scale * std::max(a_term, f_term);
    const double span = std::max({std::abs(a_term), std::abs(f_term), 1.0});
    if (a_term >= f_term - kTieTolerance * span) {
      resp.branch = Branch::kMatrix;
      resp.subgradient = p.global_scale * p.eta * g;
    } else {
      resp.branch = Branch::kNemirovski;
      resp.attained_index = k_min;
      resp.subgradient =
          p.global_scale * f_only_->nem_vector(k_min - 1);
    }
    return resp;
  }

  ReductionOptions opt_;
  std::shared_ptr<HardInstance> instance_;
  std::shared_ptr<HardInstance> f_only_;
  std::vector<BaseVector> nem_vectors_;
  std::unique_ptr<MemAlgorithm> optimizer_;
  int game_k_ = 0;
  long m_ = 0;
  bool failed_ = false;
  std::string status_;
};

}  // namespace

std::unique_ptr<PlayerStrategy> strategy_store_null_vectors() {
  return std::make_unique<StoreNullVectors>();
}

std::unique_ptr<PlayerStrategy> strategy_query_all_rows() {
  return std::make_unique<QueryAllRows>();
}

std::unique_ptr<PlayerStrategy> strategy_return_rows() {
  return std::make_unique<ReturnRows>();
}

std::unique_ptr<PlayerStrategy> reduction_adapter(ReductionOptions options) {
  return std::make_unique<ReductionPlayer>(std::move(options));
}

}  // namespace memlb
