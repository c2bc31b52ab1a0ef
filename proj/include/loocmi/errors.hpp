#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace loocmi {

/// Malformed or out-of-range arguments.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exact enumeration would exceed the configured term budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double required, double budget)
      : std::runtime_error(what + ": requires " + std::to_string(required) +
                           " terms, budget is " + std::to_string(budget)),
        required_(required),
        budget_(budget) {}

  double required() const noexcept { return required_; }
  double budget() const noexcept { return budget_; }

 private:
  double required_;
  double budget_;
};

/// The learner cannot provide the quantity asked for (e.g. a hypothesis
/// index from a transductive learner).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No solution exists (non-separable sample, orientation bound too small,
/// encoder margin too narrow).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sample that should be realizable by the class is not.
class RealizabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration validation failure; carries every problem found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "invalid config";
    for (const auto& item : items) {
      out += "\n  - " + item;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace loocmi
