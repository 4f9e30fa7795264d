#include "memlb/instance.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>

#include "memlb/errors.hpp"

namespace memlb {

namespace {

// a >= b up to the relative tie band (ties count as >=).
bool tie_ge(double a, double b) {
  const double span = std::max({std::abs(a), std::abs(b), 1.0});
  return a >= b - kTieTolerance * span;
}

}  // namespace

double InstanceParams::epsilon() const { return 1.0 / (20.0 * std::sqrt(static_cast<double>(N))); }

double InstanceParams::theta() const {
  const double dd = static_cast<double>(d);
  return 1.0 / (dd * dd * dd * dd);
}

double InstanceParams::independence_slack() const {
  const double dd = static_cast<double>(d);
  return 1.0 / (dd * dd);
}

double InstanceParams::depth_cap() const {
  return std::pow(1.0 / (32.0 * gamma), 2.0 / 3.0);
}

double InstanceParams::default_gamma(int d, int k, int N) {
  const double schedule = std::sqrt(400.0 * k * std::log(static_cast<double>(d)) /
                                    static_cast<double>(d));
  const double cap = 1.0 / (32.0 * std::pow(static_cast<double>(N), 1.5));
  return std::min(schedule, cap);
}

InstanceParams InstanceParams::make(int d, int N, int k, bool scaled,
                                    std::optional<double> gamma_override) {
  InstanceParams p;
  p.d = d;
  p.n = d / 2;
  p.N = N;
  p.k = k;
  p.gamma = gamma_override.value_or(default_gamma(d, k, N));
  p.eta = std::pow(static_cast<double>(d), 5.0);
  p.rho = 1.0;
  p.global_scale = scaled ? 1.0 / std::pow(static_cast<double>(d), 6.0) : 1.0;
  p.validate();
  return p;
}

void InstanceParams::validate() const {
  if (d < 2) throw std::invalid_argument("InstanceParams: d must be >= 2");
  if (n < 0 || n > d) throw std::invalid_argument("InstanceParams: need 0 <= n <= d");
  if (N < 1) throw std::invalid_argument("InstanceParams: N must be >= 1");
  if (k < 1) throw std::invalid_argument("InstanceParams: k must be >= 1");
  if (gamma <= 0.0) throw std::invalid_argument("InstanceParams: gamma must be > 0");
  if (eta <= 0.0) throw std::invalid_argument("InstanceParams: eta must be > 0");
  if (global_scale <= 0.0) throw std::invalid_argument("InstanceParams: scale must be > 0");
  const double cap = depth_cap();
  if (static_cast<double>(N) > cap * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "InstanceParams: depth N = " << N
        << " exceeds the cap (1/(32*gamma))^(2/3) = " << cap
        << " for gamma = " << gamma;
    throw std::invalid_argument(msg.str());
  }
}

HardInstance::HardInstance(const InstanceParams& params, std::uint64_t seed,
                           Mode mode)
    : params_(params),
      seed_(seed),
      mode_(mode),
      A_(params.d, {}),
      nem_(params.N, params.d),
      revealed_(static_cast<std::size_t>(params.N), false) {
  RandomTape a_tape = RandomTape(seed).segment(TapeSegment::kInstanceMatrix);
  A_ = sample_sign_matrix(params.d, params.n, a_tape);
}

HardInstance HardInstance::make_static(const InstanceParams& params,
                                       std::uint64_t seed) {
  HardInstance inst(params, seed, Mode::kStatic);
  for (int j = 0; j < params.N; ++j) inst.sample_next_vector();
  return inst;
}

HardInstance HardInstance::make_adaptive(const InstanceParams& params,
                                         std::uint64_t seed) {
  HardInstance inst(params, seed, Mode::kAdaptive);
  inst.sample_next_vector();  // Phase 1 begins with v_1.
  return inst;
}

HardInstance HardInstance::from_parts(const InstanceParams& params,
                                      std::uint64_t seed, SignMatrix A,
                                      std::vector<BaseVector> nem_vectors) {
  if (A.d() != params.d || A.n() != params.n) {
    throw std::invalid_argument("HardInstance: matrix shape disagrees with params");
  }
  if (static_cast<int>(nem_vectors.size()) != params.N) {
    throw std::invalid_argument("HardInstance: expected N Nemirovski vectors");
  }
  HardInstance inst(params, seed, Mode::kStatic);
  inst.A_ = std::move(A);
  inst.nem_count_ = 0;
  for (const BaseVector& v : nem_vectors) inst.push_vector(v);
  inst.nem_raw_ = std::move(nem_vectors);
  return inst;
}

void HardInstance::push_vector(const BaseVector& v) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(params_.d));
  if (v.dim() != params_.d) throw std::invalid_argument("HardInstance: vector dimension mismatch");
  for (int i = 0; i < params_.d; ++i) {
    nem_(nem_count_, i) = scale * static_cast<double>(v.sign(i));
  }
  ++nem_count_;
}

void HardInstance::sample_next_vector() {
  const int j = static_cast<int>(nem_count_);  // 0-based index of the new vector
  RandomTape v_tape = RandomTape(seed_).segment(TapeSegment::kNemirovski);
  v_tape.seek(static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(params_.d));
  BaseVector v = sample_base_vector(
      params_.d, 1.0 / std::sqrt(static_cast<double>(params_.d)), v_tape);
  push_vector(v);
  nem_raw_.push_back(std::move(v));
}

std::pair<double, int> HardInstance::eval_f(const Eigen::VectorXd& x) const {
  if (x.size() != params_.d) throw std::invalid_argument("eval_f: dimension mismatch");
  if (nem_count_ == 0) throw std::logic_error("eval_f: no Nemirovski vectors materialized");
  const Eigen::VectorXd dots = nem_.topRows(nem_count_) * x;
  double best = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < nem_count_; ++i) {
    const double term = dots[i] - static_cast<double>(i + 1) * params_.gamma;
    if (term > best) best = term;
  }
  int i_min = 0;
  for (long i = 0; i < nem_count_; ++i) {
    const double term = dots[i] - static_cast<double>(i + 1) * params_.gamma;
    if (tie_ge(term, best)) {
      i_min = static_cast<int>(i) + 1;
      break;
    }
  }
  return {best, i_min};
}

double sequential_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (long i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

AinfResult ainf_scan(const SignMatrix& A, const Eigen::VectorXd& x) {
  AinfResult res;
  if (A.n() == 0) return res;  // value 0, index 0, sign +1
  double best = -1.0;
  std::vector<double> prods(static_cast<std::size_t>(A.n()));
  for (int i = 0; i < A.n(); ++i) {
    prods[static_cast<std::size_t>(i)] =
        sequential_dot(A.dense().row(i).transpose(), x);
    best = std::max(best, std::abs(prods[static_cast<std::size_t>(i)]));
  }
  for (int i = 0; i < A.n(); ++i) {
    const double p = prods[static_cast<std::size_t>(i)];
    if (tie_ge(std::abs(p), best)) {
      res.value = best;
      res.index = i + 1;
      res.sign = p < 0.0 ? -1 : 1;
      break;
    }
  }
  return res;
}

AinfResult HardInstance::eval_ainf(const Eigen::VectorXd& x) const {
  if (x.size() != params_.d) throw std::invalid_argument("eval_ainf: dimension mismatch");
  return ainf_scan(A_, x);
}

double HardInstance::value(const Eigen::VectorXd& x) const {
  const double a_term = params_.eta * eval_ainf(x).value - params_.rho;
  const double f_term = eval_f(x).first;
  return params_.global_scale * std::max(a_term, f_term);
}

FirstOrderResponse HardInstance::respond(const Eigen::VectorXd& x,
                                         int horizon) const {
  if (x.size() != params_.d) throw std::invalid_argument("oracle: dimension mismatch");
  const AinfResult ainf = eval_ainf(x);
  const double a_term = params_.eta * ainf.value - params_.rho;

  const Eigen::VectorXd dots = nem_.topRows(horizon) * x;
  double f_term = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < horizon; ++i) {
    f_term = std::max(f_term, dots[i] - static_cast<double>(i + 1) * params_.gamma);
  }

  FirstOrderResponse resp;
  resp.value = params_.global_scale * std::max(a_term, f_term);
  if (tie_ge(a_term, f_term)) {
    // Definition's ">=": ties resolve to the matrix branch.
    resp.branch = Branch::kMatrix;
    resp.attained_index = ainf.index;
    if (ainf.index > 0) {
      resp.subgradient = params_.global_scale * params_.eta *
                         static_cast<double>(ainf.sign) *
                         A_.dense().row(ainf.index - 1).transpose();
    } else {
      resp.subgradient = Eigen::VectorXd::Zero(params_.d);
    }
  } else {
    resp.branch = Branch::kNemirovski;
    int k_min = 1;
    for (long i = 0; i < horizon; ++i) {
      const double term = dots[i] - static_cast<double>(i + 1) * params_.gamma;
      if (tie_ge(term, f_term)) {
        k_min = static_cast<int>(i) + 1;
        break;
      }
    }
    resp.attained_index = k_min;
    resp.subgradient = params_.global_scale * nem_.row(k_min - 1).transpose();
  }
  return resp;
}

FirstOrderResponse HardInstance::query_static(const Eigen::VectorXd& x) const {
  if (mode_ == Mode::kAdaptive && nem_count_ != params_.N) {
    throw std::logic_error("query_static: adaptive instance not fully materialized");
  }
  FirstOrderResponse resp = respond(x, params_.N);
  resp.phase = 0;
  return resp;
}

FirstOrderResponse HardInstance::query_adaptive(const Eigen::VectorXd& x) {
  if (mode_ != Mode::kAdaptive) throw std::logic_error("query_adaptive: instance is static");
  FirstOrderResponse resp = respond(x, static_cast<int>(nem_count_));
  resp.phase = phase_;
  if (resp.branch == Branch::kNemirovski) {
    const int idx = resp.attained_index;  // 1-based
    if (!revealed_[static_cast<std::size_t>(idx - 1)]) {
      revealed_[static_cast<std::size_t>(idx - 1)] = true;
      resp.informative = true;
    }
    // Newest vector revealed: the phase ends.
    if (idx == phase_) {
      if (phase_ < params_.N) {
        sample_next_vector();
        ++phase_;
      } else {
        exhausted_ = true;
      }
    }
  }
  return resp;
}

FirstOrderResponse HardInstance::query(const Eigen::VectorXd& x) {
  return mode_ == Mode::kAdaptive ? query_adaptive(x) : query_static(x);
}

void HardInstance::materialize_all() {
  while (nem_count_ < params_.N) sample_next_vector();
}

void HardInstance::ensure_null_basis() const {
  if (rank_ >= 0) return;
  if (A_.n() == 0) {
    rank_ = 0;
    row_basis_.resize(params_.d, 0);
    return;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A_.dense().transpose());
  rank_ = static_cast<int>(qr.rank());
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(params_.d, rank_);
  row_basis_ = Q;
}

int HardInstance::row_space_rank() const {
  ensure_null_basis();
  return rank_;
}

Eigen::VectorXd HardInstance::project_null(const Eigen::VectorXd& w) const {
  ensure_null_basis();
  if (rank_ == 0) return w;
  return w - row_basis_ * (row_basis_.transpose() * w);
}

HardInstance::Witness HardInstance::optimal_witness() const {
  if (nem_count_ != params_.N) {
    throw std::logic_error("optimal_witness: all N vectors must be materialized");
  }
  Witness w;
  w.rank_deficient = A_.n() > 0 && row_space_rank() < A_.n();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(params_.d);
  for (long i = 0; i < nem_count_; ++i) {
    acc += project_null(nem_.row(i).transpose());
  }
  w.x = -acc / (2.0 * std::sqrt(static_cast<double>(params_.N)));
  w.in_ball = w.x.norm() <= 1.0 + 1e-12;
  w.ainf = eval_ainf(w.x).value;
  w.value = value(w.x);
  return w;
}

bool InformativeLog::track(const FirstOrderResponse& response,
                           const Eigen::VectorXd& query, long step) {
  if (response.branch != Branch::kNemirovski) return false;
  for (const Entry& e : entries_) {
    if (e.subgradient.size() == response.subgradient.size() &&
        e.subgradient == response.subgradient) {
      return false;
    }
  }
  entries_.push_back(Entry{query, response.subgradient, step});
  return true;
}

Eigen::MatrixXd InformativeLog::span_basis(int j) const {
  if (j <= 0) return Eigen::MatrixXd(entries_.empty() ? 0 : entries_[0].query.size(), 0);
  const int lo = std::max(1, j - k_);  // 1-based window [lo, j]
  const int count = j - lo + 1;
  const long d = entries_[0].query.size();
  Eigen::MatrixXd W(d, count);
  for (int i = 0; i < count; ++i) {
    W.col(i) = entries_[static_cast<std::size_t>(lo - 1 + i)].query;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  const long r = qr.rank();
  if (r == 0) return Eigen::MatrixXd(d, 0);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
}

double InformativeLog::projection_ratio(int j) const {
  if (j < 1 || j > size()) throw std::out_of_range("projection_ratio: bad index");
  const Eigen::VectorXd& x = entries_[static_cast<std::size_t>(j - 1)].query;
  const double norm = x.norm();
  if (norm == 0.0) return 0.0;
  const Eigen::MatrixXd basis = span_basis(j - 1);
  if (basis.cols() == 0) return 0.0;
  return (basis.transpose() * x).norm() / norm;
}

std::string EventEReport::describe() const {
  if (holds) return "event E holds";
  std::ostringstream os;
  os << "event E violated at phase " << phase << ", condition " << condition;
  if (condition == 1) os << ", query step " << step;
  os << " (" << observed << " > " << threshold << ")";
  return os.str();
}

InformativeLog informative_log_from_trace(const std::vector<QueryTrace>& trace,
                                          int k) {
  InformativeLog log(k);
  long step = 0;
  for (const QueryTrace& q : trace) {
    ++step;
    log.track(q.response, q.x, step);
  }
  return log;
}

EventEReport check_event_E(const HardInstance& inst,
                           const std::vector<QueryTrace>& trace) {
  EventEReport report;
  const InstanceParams& p = inst.params();
  const double log_d = std::log(static_cast<double>(p.d));
  const double thresh1 = std::sqrt(10.0 * log_d / static_cast<double>(p.d));
  const double thresh2 =
      std::sqrt(30.0 * p.k * log_d / static_cast<double>(p.d));

  // Condition 1: queries submitted in phases 1..j vs v_j.
  for (int j = 1; j <= inst.materialized(); ++j) {
    const Eigen::VectorXd v = inst.nem_vector(j - 1);
    long step = 0;
    for (const QueryTrace& q : trace) {
      ++step;
      const int query_phase = q.response.phase > 0 ? q.response.phase : 1;
      if (query_phase > j) break;
      const double dot = std::abs(q.x.dot(v));
      if (dot > thresh1) {
        report.holds = false;
        report.phase = j;
        report.condition = 1;
        report.step = step;
        report.observed = dot;
        report.threshold = thresh1;
        return report;
      }
    }
  }

  // Condition 2: projection of v_j onto the rolling informative span S_j.
  const InformativeLog log = informative_log_from_trace(trace, p.k);
  for (int j = 1; j <= log.size() && j <= inst.materialized(); ++j) {
    const Eigen::MatrixXd basis = log.span_basis(j);
    if (basis.cols() == 0) continue;
    const Eigen::VectorXd v = inst.nem_vector(j - 1);
    const double proj = (basis.transpose() * v).norm();
    if (proj > thresh2) {
      report.holds = false;
      report.phase = j;
      report.condition = 2;
      report.observed = proj;
      report.threshold = thresh2;
      return report;
    }
  }
  return report;
}

}  // namespace memlb
