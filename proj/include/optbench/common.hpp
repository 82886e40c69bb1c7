#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace optbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

// Raised when the evaluation budget is spent; the harness treats it as normal
// termination of a run.
struct BudgetExhausted : Error {
  using Error::Error;
};

struct NumericalFailure : Error {
  using Error::Error;
};

struct FileError : Error {
  using Error::Error;
};

struct PlotDataError : Error {
  using Error::Error;
};

struct UsageError : Error {
  using Error::Error;
};

}  // namespace optbench
