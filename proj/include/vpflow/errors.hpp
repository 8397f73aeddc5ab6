#pragma once

#include <stdexcept>
#include <string>

namespace vpflow {

// Configuration / validation problems (bad config file, bad parameter).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller broke an operation contract (size mismatch, q mismatch, ...).
struct contract_error : std::logic_error {
  explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical failure: iterative solver stalled, NaN appeared, CFL violated.
struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct cfl_error : solver_error {
  explicit cfl_error(const std::string& msg) : solver_error(msg) {}
};

}  // namespace vpflow
