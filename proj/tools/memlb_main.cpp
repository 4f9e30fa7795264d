// memlb: experiment runner for memory-constrained convex optimization.
//
// Subcommands: gen, run, ovg, sweep, verify. Every command is a pure
// function of (config, seeds); MEMLB_SEED overrides the default seed.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "memlb/errors.hpp"
#include "memlb/harness.hpp"
#include "memlb/io.hpp"
#include "memlb/ovg.hpp"
#include "memlb/verify.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitNegative = 1;   // benign negative result (loss, no eps)
constexpr int kExitViolation = 2;  // contract/protocol violation

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MEMLB_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 1;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  // "1,2,5" or "1..20" or "" (empty list).
  std::vector<std::uint64_t> seeds;
  if (spec.empty()) return seeds;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dots = tok.find("..");
    if (dots != std::string::npos) {
      const std::uint64_t lo = std::stoull(tok.substr(0, dots));
      const std::uint64_t hi = std::stoull(tok.substr(dots + 2));
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(std::stoull(tok));
    }
  }
  return seeds;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct SweepRow {
  int d = 0;
  std::size_t budget = 0;
  std::string algorithm;
  std::uint64_t seed = 0;
  long queries_to_eps = -1;  // -1: never reached
  double best_gap = 0.0;
  long informative = 0;
  int win = 0;
  std::string note;
};

memlb::HardInstance build_instance(int d, int N, int k, bool unit_scale,
                                   std::optional<double> gamma,
                                   std::uint64_t seed) {
  const memlb::InstanceParams params =
      memlb::InstanceParams::make(d, N, k, /*scaled=*/!unit_scale, gamma);
  return memlb::HardInstance::make_static(params, seed);
}

std::unique_ptr<memlb::MemAlgorithm> build_algorithm(
    const std::string& name, std::shared_ptr<const memlb::HardInstance> inst,
    int quantization, double step) {
  const int d = inst->params().d;
  if (name == "sgd") {
    return memlb::baseline_subgradient_descent(
        d, memlb::StepSchedule::inverse_sqrt(step), quantization);
  }
  if (name == "ellipsoid") return memlb::baseline_ellipsoid(d);
  if (name == "nullspace") {
    memlb::NullspaceOptions opt;
    opt.quantization_bits = quantization;
    opt.ladder = true;
    opt.ladder_patience = 25;
    return memlb::baseline_nullspace(std::move(inst), opt);
  }
  throw CLI::ValidationError("--alg", "unknown algorithm '" + name + "'");
}

std::size_t default_budget(const std::string& alg, int d, int quantization) {
  if (alg == "ellipsoid") return memlb::ellipsoid_state_bits(d);
  if (alg == "nullspace") {
    return static_cast<std::size_t>(d) * quantization + 80;
  }
  return static_cast<std::size_t>(d) * quantization + 32;
}

SweepRow run_trial(int d, int N, int k, const std::string& alg,
                   std::size_t budget, std::uint64_t seed, long max_queries) {
  SweepRow row;
  row.d = d;
  row.budget = budget;
  row.algorithm = alg;
  row.seed = seed;
  const memlb::InstanceParams params =
      memlb::InstanceParams::make(d, N, k, /*scaled=*/false);
  auto inst = std::make_shared<memlb::HardInstance>(
      memlb::HardInstance::make_static(params, seed));
  const double eps = params.epsilon();
  const double reference = inst->optimal_witness().value;
  auto algorithm = build_algorithm(alg, inst, 32, 0.1);
  memlb::RandomTape tape =
      memlb::RandomTape(seed).segment(memlb::TapeSegment::kPlayerR2);
  memlb::RunOptions ro;
  ro.max_queries = max_queries;
  ro.stop_when = [reference, eps](const memlb::RunRecord& r) {
    return r.steps.back().response.value - reference <= eps;
  };
  try {
    const memlb::RunRecord rec =
        memlb::run(*algorithm, memlb::make_static_oracle(inst), budget, tape, ro);
    row.best_gap = rec.best_value() - reference;
    row.informative = rec.informative_count();
    const auto hit = rec.queries_to_gap(reference, eps);
    row.queries_to_eps = hit.value_or(-1);
    row.win = hit.has_value() ? 1 : 0;
  } catch (const memlb::BudgetViolation& v) {
    row.note = v.what();
  }
  return row;
}

memlb::SuiteResult run_named_suite(const std::string& name,
                                   const memlb::VerifyOptions& options) {
  if (name == "base-sampling") return memlb::suite_base_sampling(options.quick);
  if (name == "hypercube-concentration") {
    return memlb::suite_hypercube_concentration(options.quick);
  }
  if (name == "regularity") return memlb::suite_regularity(options.quick);
  if (name == "subgradient-validity") {
    return memlb::suite_subgradient_validity(options.quick, options.instance_file,
                                             options.inject_fault);
  }
  if (name == "approximate-orthogonality") {
    return memlb::suite_orthogonality(options.quick);
  }
  if (name == "robust-independence") {
    return memlb::suite_robust_independence(options.quick);
  }
  if (name == "suboptimality-necessity") {
    return memlb::suite_suboptimality(options.quick);
  }
  if (name == "optimal-witness") return memlb::suite_optimal_witness(options.quick);
  if (name == "adaptive-static-consistency") {
    return memlb::suite_consistency(options.quick);
  }
  if (name == "nemirovski-uniqueness") return memlb::suite_uniqueness(options.quick);
  if (name == "algebra-helper") return memlb::suite_algebra_helper(options.quick);
  if (name == "lifting") return memlb::suite_lifting(options.quick);
  if (name == "game-protocol") return memlb::suite_game_protocol(options.quick);
  if (name == "reduction-end-to-end") return memlb::suite_reduction(options.quick);
  if (name == "memory-accounting-replay") {
    return memlb::suite_memory_replay(options.quick);
  }
  if (name == "tradeoff-direction") return memlb::suite_tradeoff(options.quick);
  throw CLI::ValidationError("--suite", "unknown suite '" + name + "'");
}

int cmd_verify_main(const memlb::VerifyOptions& options,
                    const std::vector<std::string>& only, bool verbose) {
  std::vector<memlb::SuiteResult> results;
  if (only.empty()) {
    results = memlb::run_verify(options);
  } else {
    for (const std::string& name : only) {
      results.push_back(run_named_suite(name, options));
    }
  }

  bool all_pass = true;
  for (const memlb::SuiteResult& r : results) {
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
    if (verbose) {
      std::cout << "  [" << r.checks << " checks, " << r.violations
                << " violations]";
      if (!r.detail.empty()) std::cout << "  " << r.detail;
    }
    std::cout << '\n';
  }
  std::cout << (all_pass ? "verify: all suites passed" : "verify: FAILURES")
            << " (" << results.size() << " suites)\n";
  return all_pass ? kExitSuccess : kExitNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memlb: memory-constrained convex optimization laboratory"};
  app.require_subcommand(1);
  // Flat key=value config: keys are command-scoped, e.g. "gen.d=16".
  app.set_config("--config");

  auto* gen = app.add_subcommand("gen", "generate a hard instance file");
  int gen_d = 16, gen_N = 2, gen_k = 2;
  std::uint64_t gen_seed = default_seed();
  bool gen_unit = false;
  double gen_gamma_raw = 0.0;
  std::string gen_out = "instance.memlb";
  gen->add_option("--d", gen_d, "dimension");
  gen->add_option("--N", gen_N, "Nemirovski depth");
  gen->add_option("--k", gen_k, "round length");
  gen->add_option("--seed", gen_seed, "tape seed");
  gen->add_flag("--unit-scale", gen_unit, "global scale 1 instead of 1/d^6");
  auto* gen_gamma_opt =
      gen->add_option("--gamma", gen_gamma_raw, "override the derived gamma");
  gen->add_option("--out", gen_out, "output path");

  auto* runc = app.add_subcommand("run", "run a memory-accounted algorithm");
  std::string run_instance, run_alg = "sgd", run_out;
  int run_d = 32, run_N = 3, run_k = 2, run_quant = 32;
  std::uint64_t run_seed = default_seed();
  long run_max = 2000;
  double run_step = 0.1;
  std::size_t run_budget = 0;
  bool run_unit = false;
  runc->add_option("--instance", run_instance, "instance file (else generated)");
  runc->add_option("--alg", run_alg, "sgd | ellipsoid | nullspace");
  runc->add_option("--d", run_d, "dimension");
  runc->add_option("--N", run_N, "Nemirovski depth");
  runc->add_option("--k", run_k, "round length");
  runc->add_option("--seed", run_seed, "tape seed");
  runc->add_option("--max-queries", run_max, "query cap");
  runc->add_option("--quantization", run_quant, "fixed-point bits per coordinate");
  runc->add_option("--step", run_step, "sgd step scale");
  runc->add_option("--budget", run_budget, "memory budget in bits (0: fitted)");
  runc->add_flag("--unit-scale", run_unit, "global scale 1 instead of 1/d^6");
  runc->add_option("--out", run_out, "run record (JSON lines)");

  auto* ovgc = app.add_subcommand("ovg", "play the orthogonal vector game");
  int ovg_d = 32, ovg_k = 4, ovg_N = 6;
  long ovg_m = 0;
  std::size_t ovg_M = 0;
  std::uint64_t ovg_seed = default_seed();
  std::string ovg_variant = "subgradient", ovg_strategy = "store-null", ovg_out;
  ovgc->add_option("--d", ovg_d, "dimension");
  ovgc->add_option("--k", ovg_k, "vectors to return");
  ovgc->add_option("--m", ovg_m, "query budget");
  ovgc->add_option("--M", ovg_M, "message budget in bits");
  ovgc->add_option("--N", ovg_N, "instance depth (reduction strategy)");
  ovgc->add_option("--seed", ovg_seed, "tape seed");
  ovgc->add_option("--variant", ovg_variant, "subgradient | index");
  ovgc->add_option("--strategy", ovg_strategy,
                   "store-null | query-rows | return-rows | reduction");
  ovgc->add_option("--out", ovg_out, "transcript path");

  auto* sweepc = app.add_subcommand("sweep", "memory/query tradeoff grid");
  std::string sweep_ds = "16,24,32", sweep_budgets = "64d,64d2",
              sweep_algs = "sgd,ellipsoid", sweep_seeds = "1..3",
              sweep_out = "sweep.csv";
  int sweep_N = 3, sweep_k = 2, sweep_jobs = 0;
  long sweep_max = 40000;
  sweepc->add_option("--d", sweep_ds, "dimension list, e.g. 16,24,32");
  sweepc->add_option("--budgets", sweep_budgets, "budget classes: 64d | 64d2 | fit");
  sweepc->add_option("--algs", sweep_algs, "algorithm list");
  sweepc->add_option("--seeds", sweep_seeds, "seed list or lo..hi (may be empty)");
  sweepc->add_option("--N", sweep_N, "Nemirovski depth");
  sweepc->add_option("--k", sweep_k, "round length");
  sweepc->add_option("--max-queries", sweep_max, "query cap per trial");
  sweepc->add_option("--jobs", sweep_jobs, "worker cap (0: hardware)");
  sweepc->add_option("--out", sweep_out, "CSV path");

  auto* verifyc = app.add_subcommand("verify", "run the property suites");
  bool v_quick = false, v_fault = false, v_verbose = false;
  std::string v_instance;
  std::vector<std::string> v_suites;
  verifyc->add_flag("--quick", v_quick, "reduced trial counts");
  verifyc->add_flag("--inject-fault", v_fault,
                    "flip one stored sign and expect the validity suite to fail");
  verifyc->add_flag("--verbose", v_verbose, "per-suite counts and details");
  verifyc->add_option("--instance", v_instance, "instance file to audit");
  verifyc->add_option("--suite", v_suites, "run only the named suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::optional<double> gen_gamma;
      if (gen_gamma_opt->count()) gen_gamma = gen_gamma_raw;
      const memlb::HardInstance inst =
          build_instance(gen_d, gen_N, gen_k, gen_unit, gen_gamma, gen_seed);
      memlb::save_instance(gen_out, inst);
      const memlb::HardInstance back = memlb::load_instance(gen_out);
      if (!(back.A() == inst.A() && back.nem_vectors() == inst.nem_vectors() &&
            back.params().gamma == inst.params().gamma)) {
        std::cerr << "gen: round-trip mismatch for " << gen_out << "\n";
        return kExitViolation;
      }
      std::cout << "gen: wrote " << gen_out << " (d=" << gen_d
                << " n=" << inst.params().n << " N=" << gen_N << " k=" << gen_k
                << " gamma=" << memlb::format_double(inst.params().gamma)
                << " seed=" << gen_seed << ")\n";
      return kExitSuccess;
    }

    if (*runc) {
      auto inst = std::make_shared<memlb::HardInstance>(
          run_instance.empty()
              ? build_instance(run_d, run_N, run_k, run_unit, std::nullopt,
                               run_seed)
              : memlb::load_instance(run_instance));
      const memlb::InstanceParams& params = inst->params();
      const double eps = params.epsilon();
      const double reference = inst->optimal_witness().value;
      auto algorithm = build_algorithm(run_alg, inst, run_quant, run_step);
      const std::size_t budget =
          run_budget ? run_budget : default_budget(run_alg, params.d, run_quant);
      memlb::RandomTape tape =
          memlb::RandomTape(run_seed).segment(memlb::TapeSegment::kPlayerR2);
      memlb::RunOptions ro;
      ro.max_queries = run_max;
      const memlb::RunRecord rec = memlb::run(
          *algorithm, memlb::make_static_oracle(inst), budget, tape, ro);
      if (!run_out.empty()) {
        std::ofstream os(run_out);
        memlb::write_run_record(os, rec);
      }
      std::cout << memlb::run_summary_line(rec, reference, eps)
                << " eps=" << memlb::format_double(eps)
                << " budget_bits=" << budget << "\n";
      return rec.queries_to_gap(reference, eps).has_value() ? kExitSuccess
                                                            : kExitNegative;
    }

    if (*ovgc) {
      memlb::GameParams params;
      params.d = ovg_d;
      params.k = ovg_k;
      params.m = ovg_m;
      params.message_bits = ovg_M;
      params.variant = ovg_variant == "index" ? memlb::OracleVariant::kIndex
                                              : memlb::OracleVariant::kSubgradient;
      std::unique_ptr<memlb::PlayerStrategy> strategy;
      if (ovg_strategy == "store-null") {
        strategy = memlb::strategy_store_null_vectors();
      } else if (ovg_strategy == "query-rows") {
        strategy = memlb::strategy_query_all_rows();
      } else if (ovg_strategy == "return-rows") {
        strategy = memlb::strategy_return_rows();
      } else if (ovg_strategy == "reduction") {
        memlb::ReductionOptions opt;
        opt.instance =
            memlb::InstanceParams::make(ovg_d, ovg_N, ovg_k, /*scaled=*/false);
        opt.make_optimizer = [](std::shared_ptr<const memlb::HardInstance> i) {
          memlb::NullspaceOptions nopt;
          nopt.ladder = true;
          nopt.ladder_patience = 20;
          return memlb::baseline_nullspace(std::move(i), nopt);
        };
        strategy = memlb::reduction_adapter(opt);
      } else {
        throw CLI::ValidationError("--strategy",
                                   "unknown strategy '" + ovg_strategy + "'");
      }
      const memlb::GameTranscript t = memlb::play(params, *strategy, ovg_seed);
      if (!ovg_out.empty()) {
        std::ofstream os(ovg_out);
        memlb::write_transcript(os, t);
      }
      std::cout << "ovg: " << (t.win ? "win" : "loss")
                << " strategy=" << t.strategy << " d=" << params.d
                << " k=" << params.k << " m=" << params.m
                << " M=" << params.message_bits << " seed=" << ovg_seed;
      if (!t.violation.empty()) std::cout << " violation=\"" << t.violation << '"';
      if (!t.status.empty()) std::cout << " status=\"" << t.status << '"';
      std::cout << "\n";
      if (!t.violation.empty()) return kExitViolation;
      return t.win ? kExitSuccess : kExitNegative;
    }

    if (*sweepc) {
      std::vector<int> ds;
      {
        std::stringstream ss(sweep_ds);
        std::string tok;
        while (std::getline(ss, tok, ',')) ds.push_back(std::stoi(tok));
      }
      std::vector<std::string> budget_classes, algs;
      {
        std::stringstream ss(sweep_budgets);
        std::string tok;
        while (std::getline(ss, tok, ',')) budget_classes.push_back(tok);
        std::stringstream sa(sweep_algs);
        while (std::getline(sa, tok, ',')) algs.push_back(tok);
      }
      const std::vector<std::uint64_t> seeds = parse_seeds(sweep_seeds);

      struct Trial {
        int d;
        std::size_t budget;
        std::string alg;
        std::uint64_t seed;
      };
      std::vector<Trial> trials;
      for (int d : ds) {
        for (const std::string& bc : budget_classes) {
          for (const std::string& alg : algs) {
            for (std::uint64_t seed : seeds) {
              std::size_t budget;
              if (bc == "64d") {
                budget = static_cast<std::size_t>(64) * d;
              } else if (bc == "64d2") {
                budget = static_cast<std::size_t>(64) * d * d;
              } else if (bc == "fit") {
                budget = default_budget(alg, d, 32);
              } else {
                throw CLI::ValidationError("--budgets",
                                           "unknown budget class '" + bc + "'");
              }
              trials.push_back(Trial{d, budget, alg, seed});
            }
          }
        }
      }

      const int workers =
          sweep_jobs > 0 ? sweep_jobs
                         : static_cast<int>(
                               std::max(1u, std::thread::hardware_concurrency()));
      std::vector<SweepRow> rows(trials.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= trials.size()) break;
          const Trial& t = trials[i];
          rows[i] =
              run_trial(t.d, sweep_N, sweep_k, t.alg, t.budget, t.seed, sweep_max);
        }
      };
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (std::thread& th : pool) th.join();

      std::sort(rows.begin(), rows.end(),
                [](const SweepRow& a, const SweepRow& b) {
                  return std::tie(a.d, a.budget, a.algorithm, a.seed) <
                         std::tie(b.d, b.budget, b.algorithm, b.seed);
                });

      std::ofstream os(sweep_out);
      os << "# memlb-sweep-csv v1\n";
      os << "d,M,algorithm,seed,queries_to_eps,best_gap,informative_count,win\n";
      for (const SweepRow& r : rows) {
        os << r.d << ',' << r.budget << ',' << csv_field(r.algorithm) << ','
           << r.seed << ',' << r.queries_to_eps << ','
           << memlb::format_double(r.best_gap) << ',' << r.informative << ','
           << r.win << '\n';
      }
      std::cout << "sweep: wrote " << rows.size() << " rows to " << sweep_out
                << "\n";
      return kExitSuccess;
    }

    if (*verifyc) {
      memlb::VerifyOptions options;
      options.quick = v_quick;
      options.inject_fault = v_fault;
      if (!v_instance.empty()) options.instance_file = v_instance;
      return cmd_verify_main(options, v_suites, v_verbose);
    }
  } catch (const memlb::BudgetViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  } catch (const memlb::ProtocolViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitSuccess;
}
