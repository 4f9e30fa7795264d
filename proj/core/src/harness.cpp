#include "memlb/harness.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "memlb/errors.hpp"

namespace memlb {

double RunRecord::best_value() const {
  double best = std::numeric_limits<double>::infinity();
  for (const RunStep& s : steps) best = std::min(best, s.response.value);
  return best;
}

long RunRecord::informative_count() const {
  long count = 0;
  for (const RunStep& s : steps) count += s.response.informative ? 1 : 0;
  return count;
}

std::optional<long> RunRecord::queries_to_gap(double reference,
                                              double eps) const {
  for (const RunStep& s : steps) {
    if (s.response.value - reference <= eps) return s.step;
  }
  return std::nullopt;
}

std::vector<QueryTrace> RunRecord::trace() const {
  std::vector<QueryTrace> out;
  out.reserve(steps.size());
  for (const RunStep& s : steps) out.push_back(QueryTrace{s.x, s.response});
  return out;
}

const Snapshot& RunRecord::snapshot_at(std::size_t checkpoint) const {
  for (const Snapshot& s : snapshots) {
    if (s.checkpoint == checkpoint) return s;
  }
  throw std::out_of_range("no snapshot at checkpoint " + std::to_string(checkpoint));
}

namespace {

RunRecord run_impl(const MemAlgorithm& alg, const Oracle& oracle,
                   std::size_t budget_bits, RandomTape& tape,
                   const RunOptions& options, MemoryState state,
                   std::size_t start_checkpoint) {
  RunRecord record;
  record.algorithm = alg.name();
  record.budget_bits = budget_bits;
  record.snapshots.push_back(Snapshot{start_checkpoint, state, tape.cursor()});
  InformativeLog informative(1);  // f-branch first-reveal tracking

  for (long t = 0; t < options.max_queries; ++t) {
    if (alg.finished(state)) {
      record.finished_early = true;
      break;
    }
    Eigen::VectorXd x = alg.propose(state, tape);
    bool clamped = false;
    const double norm = x.norm();
    if (norm > 1.0) {
      x /= norm;
      clamped = true;
    }
    FirstOrderResponse resp = oracle(x);
    // Stateless oracles leave the flag unset; the record fills it in.
    resp.informative = informative.track(resp, x, t + 1) || resp.informative;
    state = alg.absorb(state, x, resp.value, resp.subgradient, tape);

    const std::size_t checkpoint = start_checkpoint + static_cast<std::size_t>(t) + 1;
    if (state.bit_length() > budget_bits) {
      throw BudgetViolation(checkpoint, state.bit_length(), budget_bits);
    }

    RunStep step;
    step.step = static_cast<long>(checkpoint);
    step.x = std::move(x);
    step.response = std::move(resp);
    step.state_bits = state.bit_length();
    step.clamped = clamped;
    record.steps.push_back(std::move(step));

    if (options.snapshot_stride > 0 && checkpoint % options.snapshot_stride == 0) {
      record.snapshots.push_back(Snapshot{checkpoint, state, tape.cursor()});
    }
    if (options.stop_when && options.stop_when(record)) break;
  }

  record.final_state = std::move(state);
  record.final_tape_cursor = tape.cursor();
  return record;
}

}  // namespace

RunRecord run(const MemAlgorithm& alg, const Oracle& oracle,
              std::size_t budget_bits, RandomTape& tape,
              const RunOptions& options) {
  return run_impl(alg, oracle, budget_bits, tape, options, MemoryState{}, 0);
}

RunRecord replay_from(const MemAlgorithm& alg, const Oracle& oracle,
                      const Snapshot& snapshot, std::size_t budget_bits,
                      RandomTape& tape, const RunOptions& options) {
  tape.seek(snapshot.tape_cursor);
  return run_impl(alg, oracle, budget_bits, tape, options, snapshot.state,
                  snapshot.checkpoint);
}

void warm_oracle_prefix(const Oracle& oracle, const RunRecord& record,
                        std::size_t checkpoint) {
  for (std::size_t i = 0; i < checkpoint && i < record.steps.size(); ++i) {
    oracle(record.steps[i].x);
  }
}

Oracle make_static_oracle(std::shared_ptr<const HardInstance> instance) {
  return [instance](const Eigen::VectorXd& x) { return instance->query_static(x); };
}

Oracle make_adaptive_oracle(std::shared_ptr<HardInstance> instance) {
  return [instance](const Eigen::VectorXd& x) { return instance->query_adaptive(x); };
}

StepSchedule StepSchedule::constant(double c) {
  return StepSchedule{[c](long) { return c; }};
}

StepSchedule StepSchedule::inverse_sqrt(double c) {
  return StepSchedule{[c](long t) { return c / std::sqrt(static_cast<double>(t + 1)); }};
}

namespace {

// State layout shared by the quantized-iterate baselines: a 32-bit counter
// followed by d fixed-point coordinates.
Eigen::VectorXd decode_iterate(const MemoryState& state, int d, int bits,
                               long* counter_out) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  if (state.empty()) {
    if (counter_out) *counter_out = 0;
    return x;
  }
  BitReader reader(state);
  const long counter = static_cast<long>(reader.read(32));
  if (counter_out) *counter_out = counter;
  for (int i = 0; i < d; ++i) {
    std::uint64_t raw = reader.read(bits);
    // Sign-extend the two's-complement payload.
    std::int64_t q = static_cast<std::int64_t>(raw << (64 - bits)) >> (64 - bits);
    x[i] = dequantize_fixed(q, bits);
  }
  return x;
}

MemoryState encode_iterate(const Eigen::VectorXd& x, long counter, int bits) {
  MemoryState state;
  state.append_bits(static_cast<std::uint64_t>(counter), 32);
  for (long i = 0; i < x.size(); ++i) {
    const std::int64_t q = quantize_fixed(x[i], bits);
    state.append_bits(static_cast<std::uint64_t>(q), bits);
  }
  return state;
}

class SubgradientDescent final : public MemAlgorithm {
 public:
  SubgradientDescent(int d, StepSchedule schedule, int bits)
      : d_(d), schedule_(std::move(schedule)), bits_(bits) {
    if (bits_ < 8) throw std::invalid_argument("subgradient descent: need b >= 8");
  }

  std::string name() const override { return "sgd"; }

  Eigen::VectorXd propose(const MemoryState& state, RandomTape&) const override {
    Eigen::VectorXd x = decode_iterate(state, d_, bits_, nullptr);
    const double norm = x.norm();
    if (norm > 1.0) x /= norm;  // quantization can push just past the sphere
    return x;
  }

  MemoryState absorb(const MemoryState& state, const Eigen::VectorXd& query,
                     double, const Eigen::VectorXd& subgradient,
                     RandomTape&) const override {
    long t = 0;
    decode_iterate(state, d_, bits_, &t);
    Eigen::VectorXd next = query - schedule_.step(t) * subgradient;
    const double norm = next.norm();
    if (norm > 1.0) next /= norm;
    return encode_iterate(next, t + 1, bits_);
  }

 private:
  int d_;
  StepSchedule schedule_;
  int bits_;
};

class NullspaceDescent final : public MemAlgorithm {
 public:
  NullspaceDescent(std::shared_ptr<const HardInstance> inst, NullspaceOptions opt)
      : inst_(std::move(inst)), opt_(opt) {}

  std::string name() const override { return "nullspace"; }

  // State layout: 32-bit step counter, 16-bit highest revealed index, 16-bit
  // stall counter, 16-bit deepen counter, then the quantized iterate.
  Eigen::VectorXd propose(const MemoryState& state, RandomTape&) const override {
    long t, seen, stall, deepen;
    Eigen::VectorXd x = decode(state, &t, &seen, &stall, &deepen);
    // Re-project after dequantization so queries sit in null(A) to machine
    // precision regardless of the stored width.
    x = inst_->project_null(x);
    const double norm = x.norm();
    if (norm > 1.0) x /= norm;
    return x;
  }

  MemoryState absorb(const MemoryState& state, const Eigen::VectorXd& query,
                     double value, const Eigen::VectorXd& subgradient,
                     RandomTape&) const override {
    long t = 0, seen = 0, stall = 0, deepen = 0;
    decode(state, &t, &seen, &stall, &deepen);
    const long revealed = match_index(subgradient);
    if (revealed > seen) {
      seen = revealed;
      stall = 0;
    } else if (opt_.ladder && opt_.ladder_patience > 0) {
      if (++stall >= opt_.ladder_patience) {
        stall = 0;
        ++deepen;
      }
    }

    double step;
    const double gnorm2 = subgradient.squaredNorm();
    if (gnorm2 <= 0.0) {
      step = 0.0;
    } else if (opt_.ladder) {
      const double rung = -(static_cast<double>(seen) + 1.8 + 0.5 * deepen) *
                          inst_->params().gamma * inst_->params().global_scale;
      step = std::max(value - rung, 0.0) / gnorm2;
    } else if (opt_.polyak_target.has_value()) {
      step = std::max(value - *opt_.polyak_target, 0.0) / gnorm2;
    } else {
      step = opt_.fallback_step / std::sqrt(static_cast<double>(t + 1));
    }
    Eigen::VectorXd next = inst_->project_null(query - step * subgradient);
    const double norm = next.norm();
    if (norm > 1.0) next /= norm;
    return encode(next, t + 1, seen, stall, deepen);
  }

 private:
  Eigen::VectorXd decode(const MemoryState& state, long* t, long* seen,
                         long* stall, long* deepen) const {
    const int d = inst_->params().d;
    const int bits = opt_.quantization_bits;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    *t = *seen = *stall = *deepen = 0;
    if (state.empty()) return x;
    BitReader reader(state);
    *t = static_cast<long>(reader.read(32));
    *seen = static_cast<long>(reader.read(16));
    *stall = static_cast<long>(reader.read(16));
    *deepen = static_cast<long>(reader.read(16));
    for (int i = 0; i < d; ++i) {
      std::uint64_t raw = reader.read(bits);
      std::int64_t q = static_cast<std::int64_t>(raw << (64 - bits)) >> (64 - bits);
      x[i] = dequantize_fixed(q, bits);
    }
    return x;
  }

  MemoryState encode(const Eigen::VectorXd& x, long t, long seen, long stall,
                     long deepen) const {
    MemoryState state;
    state.append_bits(static_cast<std::uint64_t>(t), 32);
    state.append_bits(static_cast<std::uint64_t>(seen), 16);
    state.append_bits(static_cast<std::uint64_t>(stall), 16);
    state.append_bits(static_cast<std::uint64_t>(deepen), 16);
    for (long i = 0; i < x.size(); ++i) {
      state.append_bits(
          static_cast<std::uint64_t>(quantize_fixed(x[i], opt_.quantization_bits)),
          opt_.quantization_bits);
    }
    return state;
  }

  // Which Nemirovski vector was this subgradient (0 if a matrix row)?
  long match_index(const Eigen::VectorXd& g) const {
    const double gs = inst_->params().global_scale;
    for (int i = 0; i < inst_->materialized(); ++i) {
      if (g == gs * inst_->nem_vector(i)) return i + 1;
    }
    return 0;
  }

  std::shared_ptr<const HardInstance> inst_;
  NullspaceOptions opt_;
};

class Ellipsoid final : public MemAlgorithm {
 public:
  explicit Ellipsoid(int d) : d_(d) {}

  std::string name() const override { return "ellipsoid"; }

  Eigen::VectorXd propose(const MemoryState& state, RandomTape&) const override {
    Eigen::VectorXd c;
    Eigen::MatrixXd P;
    long t = 0;
    decode(state, &c, &P, &t);
    ball_cuts(&c, &P);
    return c;
  }

  MemoryState absorb(const MemoryState& state, const Eigen::VectorXd& query,
                     double, const Eigen::VectorXd& subgradient,
                     RandomTape&) const override {
    Eigen::VectorXd c;
    Eigen::MatrixXd P;
    long t = 0;
    decode(state, &c, &P, &t);
    ball_cuts(&c, &P);  // deterministic mirror of propose
    (void)query;
    cut(&c, &P, subgradient);
    return encode(c, P, t + 1);
  }

 private:
  // The shape matrix is symmetric: only the upper triangle is stored.
  void decode(const MemoryState& state, Eigen::VectorXd* c, Eigen::MatrixXd* P,
              long* t) const {
    if (state.empty()) {
      *c = Eigen::VectorXd::Zero(d_);
      *P = Eigen::MatrixXd::Identity(d_, d_);
      *t = 0;
      return;
    }
    BitReader reader(state);
    *t = static_cast<long>(reader.read(32));
    c->resize(d_);
    for (int i = 0; i < d_; ++i) (*c)[i] = reader.read_double();
    P->resize(d_, d_);
    for (int i = 0; i < d_; ++i) {
      for (int j = i; j < d_; ++j) {
        const double v = reader.read_double();
        (*P)(i, j) = v;
        (*P)(j, i) = v;
      }
    }
  }

  MemoryState encode(const Eigen::VectorXd& c, const Eigen::MatrixXd& P,
                     long t) const {
    MemoryState state;
    state.append_bits(static_cast<std::uint64_t>(t), 32);
    for (int i = 0; i < d_; ++i) append_double(state, c[i]);
    for (int i = 0; i < d_; ++i) {
      for (int j = i; j < d_; ++j) append_double(state, P(i, j));
    }
    return state;
  }

  // Feasibility cuts against the unit ball until the center is inside.
  void ball_cuts(Eigen::VectorXd* c, Eigen::MatrixXd* P) const {
    for (int guard = 0; guard < 4 * d_ * d_ + 64 && c->norm() > 1.0; ++guard) {
      cut(c, P, *c / c->norm());
    }
    if (c->norm() > 1.0) *c /= c->norm();
  }

  // Central cut with the halfspace {x : g^T (x - c) <= 0}.
  void cut(Eigen::VectorXd* c, Eigen::MatrixXd* P, const Eigen::VectorXd& g) const {
    const double quad = g.dot(*P * g);
    if (!(quad > 0.0)) {
      repair(P);
      return;
    }
    const Eigen::VectorXd Pg = (*P * g) / std::sqrt(quad);
    const double dd = static_cast<double>(d_);
    if (d_ == 1) {
      // Interval halving.
      (*c)[0] -= 0.5 * Pg[0];
      (*P)(0, 0) *= 0.25;
      return;
    }
    *c -= Pg / (dd + 1.0);
    *P = (dd * dd / (dd * dd - 1.0)) *
         (*P - (2.0 / (dd + 1.0)) * Pg * Pg.transpose());
    *P = 0.5 * (*P + P->transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(*P);
    if (llt.info() != Eigen::Success) repair(P);
  }

  // Symmetrize and floor the spectrum when the shape matrix degenerates.
  void repair(Eigen::MatrixXd* P) const {
    *P = 0.5 * (*P + P->transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*P);
    Eigen::VectorXd ev = es.eigenvalues();
    const double floor = 1e-300;
    for (int i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], floor);
    *P = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }

  int d_;
};

}  // namespace

std::unique_ptr<MemAlgorithm> baseline_subgradient_descent(int d,
                                                           StepSchedule schedule,
                                                           int quantization_bits) {
  return std::make_unique<SubgradientDescent>(d, std::move(schedule),
                                              quantization_bits);
}

std::unique_ptr<MemAlgorithm> baseline_ellipsoid(int d) {
  return std::make_unique<Ellipsoid>(d);
}

std::size_t ellipsoid_state_bits(int d) {
  const std::size_t dd = static_cast<std::size_t>(d);
  return 64 * (dd * (dd + 1) / 2 + dd) + 32;  // triangle + center + counter
}

std::unique_ptr<MemAlgorithm> baseline_nullspace(
    std::shared_ptr<const HardInstance> instance, NullspaceOptions options) {
  return std::make_unique<NullspaceDescent>(std::move(instance), options);
}

}  // namespace memlb
