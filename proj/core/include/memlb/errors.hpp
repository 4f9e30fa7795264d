#pragma once

#include <stdexcept>
#include <string>

namespace memlb {

// Reading past the end of a finite random tape (or tape segment).
class TapeUnderflow : public std::runtime_error {
 public:
  explicit TapeUnderflow(const std::string& what) : std::runtime_error(what) {}
};

// A memory state exceeded the bit budget at a between-queries checkpoint.
class BudgetViolation : public std::runtime_error {
 public:
  BudgetViolation(std::size_t checkpoint, std::size_t bits, std::size_t budget)
      : std::runtime_error("memory budget violated at checkpoint " +
                           std::to_string(checkpoint) + ": state is " +
                           std::to_string(bits) + " bits, budget is " +
                           std::to_string(budget) + " bits"),
        checkpoint_(checkpoint),
        bits_(bits),
        budget_(budget) {}
  std::size_t checkpoint() const { return checkpoint_; }
  std::size_t bits() const { return bits_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t checkpoint_;
  std::size_t bits_;
  std::size_t budget_;
};

// A problem size outside the supported desk-scale range (e.g. exhaustive
// enumeration requested for a dimension that is too large).
class SizeError : public std::runtime_error {
 public:
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent file content.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A player broke the rules of the Orthogonal Vector Game.
class ProtocolViolation : public std::runtime_error {
 public:
  explicit ProtocolViolation(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace memlb
