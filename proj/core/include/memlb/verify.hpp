#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memlb/instance.hpp"

namespace memlb {

struct SuiteResult {
  std::string name;
  bool pass = false;
  long checks = 0;
  long violations = 0;
  std::string detail;
};

struct VerifyOptions {
  bool quick = false;  // reduced trial counts for unit-test runtime
  std::optional<std::string> instance_file;
  bool inject_fault = false;  // corrupt one sign before the validity suite
};

// The property/lemma suites. Default parameters are the acceptance-grade
// ones; quick mode shrinks trial counts, never tolerances.
SuiteResult suite_base_sampling(bool quick);
SuiteResult suite_hypercube_concentration(bool quick);       // criterion 7
SuiteResult suite_regularity(bool quick);                    // criterion 1
SuiteResult suite_subgradient_validity(
    bool quick, const std::optional<std::string>& instance_file,
    bool inject_fault);                                      // + fault demo
SuiteResult suite_orthogonality(bool quick);                 // criterion 2
SuiteResult suite_robust_independence(bool quick);           // criterion 3
SuiteResult suite_suboptimality(bool quick);                 // criterion 4
SuiteResult suite_optimal_witness(bool quick);               // criterion 5
SuiteResult suite_consistency(bool quick);                   // criterion 6
SuiteResult suite_uniqueness(bool quick);
SuiteResult suite_algebra_helper(bool quick);                // criterion 8
SuiteResult suite_lifting(bool quick);                       // criterion 9
SuiteResult suite_game_protocol(bool quick);                 // criterion 10
SuiteResult suite_reduction(bool quick);                     // criterion 11
SuiteResult suite_memory_replay(bool quick);                 // criterion 12
SuiteResult suite_tradeoff(bool quick);                      // criterion 13

std::vector<SuiteResult> run_verify(const VerifyOptions& options);

}  // namespace memlb
