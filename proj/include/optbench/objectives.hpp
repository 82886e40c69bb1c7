#pragma once

// Scalable benchmark functions (Schwefel, Griewank, Rastrigin), their box
// domains and known minima, plus a budget-enforcing evaluation wrapper.
// Every function is minimized.

#include "optbench/common.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace optbench {

enum class FunctionId { Schwefel, Griewank, Rastrigin };

inline constexpr std::array<FunctionId, 3> kAllFunctions = {
    FunctionId::Schwefel, FunctionId::Griewank, FunctionId::Rastrigin};

inline std::string_view to_string(FunctionId id) {
  switch (id) {
    case FunctionId::Schwefel: return "schwefel";
    case FunctionId::Griewank: return "griewank";
    case FunctionId::Rastrigin: return "rastrigin";
  }
  return "unknown";
}

inline std::optional<FunctionId> parse_function(std::string_view name) {
  for (FunctionId id : kAllFunctions)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

/// Axis-aligned box [lower, upper] in R^d.
class SearchSpace {
 public:
  SearchSpace(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() < 1 || lower_.size() != upper_.size())
      throw InvalidInput("search space needs matching bounds of dimension >= 1");
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
      if (!(lower_[i] < upper_[i]))
        throw InvalidInput("search space lower bound must be below upper bound");
  }

  static SearchSpace uniform(int dimension, double lower, double upper) {
    if (dimension < 1) throw InvalidInput("dimension must be >= 1");
    return {Vector::Constant(dimension, lower), Vector::Constant(dimension, upper)};
  }

  int dimension() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector width() const { return upper_ - lower_; }

  bool contains(const Vector& x) const {
    return x.size() == lower_.size() && (x.array() >= lower_.array()).all() &&
           (x.array() <= upper_.array()).all();
  }

  Vector clamp(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

  /// Maps a point of the unit hypercube onto the box.
  Vector from_unit(const Vector& u) const { return lower_ + u.cwiseProduct(width()); }
  Vector to_unit(const Vector& x) const { return (x - lower_).cwiseQuotient(width()); }

 private:
  Vector lower_;
  Vector upper_;
};

namespace detail {

inline void require_finite(const Vector& x) {
  if (x.size() == 0) throw InvalidInput("objective input must be non-empty");
  if (!x.allFinite()) throw InvalidInput("objective input has a non-finite component");
}

}  // namespace detail

inline double evaluate_schwefel(const Vector& x) {
  detail::require_finite(x);
  double sum = 0.0;
  for (double xi : x) sum += xi * std::sin(std::sqrt(std::abs(xi)));
  return 418.9829 * static_cast<double>(x.size()) - sum;
}

inline double evaluate_griewank(const Vector& x) {
  detail::require_finite(x);
  double sum = 0.0;
  double prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] / 4000.0;
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return sum - prod + 1.0;
}

inline double evaluate_rastrigin(const Vector& x) {
  detail::require_finite(x);
  double sum = 10.0 * static_cast<double>(x.size());
  for (double xi : x) sum += xi * xi - 10.0 * std::cos(2.0 * std::numbers::pi * xi);
  return sum;
}

struct ObjectiveSpec {
  FunctionId id;
  SearchSpace space;
  Vector optimum_location;
  double optimum_value = 0.0;

  int dimension() const { return space.dimension(); }

  double operator()(const Vector& x) const {
    switch (id) {
      case FunctionId::Schwefel: return evaluate_schwefel(x);
      case FunctionId::Griewank: return evaluate_griewank(x);
      case FunctionId::Rastrigin: return evaluate_rastrigin(x);
    }
    throw InvalidInput("unknown objective");
  }
};

struct DomainInfo {
  double lower;
  double upper;
  double optimum_coordinate;
};

inline DomainInfo domain_info(FunctionId id) {
  switch (id) {
    case FunctionId::Schwefel: return {-500.0, 500.0, 420.97};
    case FunctionId::Griewank: return {-600.0, 600.0, 0.0};
    case FunctionId::Rastrigin: return {-5.12, 5.12, 0.0};
  }
  throw InvalidInput("unknown objective");
}

inline ObjectiveSpec make_objective(FunctionId id, int dimension = 10) {
  const DomainInfo info = domain_info(id);
  return ObjectiveSpec{id, SearchSpace::uniform(dimension, info.lower, info.upper),
                       Vector::Constant(dimension, info.optimum_coordinate), 0.0};
}

/// Tracks how many evaluations a single run has spent against its budget.
class EvalCounter {
 public:
  explicit EvalCounter(long budget) : budget_(budget) {
    if (budget < 1) throw InvalidInput("evaluation budget must be positive");
  }

  long total() const { return total_; }
  long budget() const { return budget_; }
  long remaining() const { return budget_ - total_; }
  bool exhausted() const { return total_ >= budget_; }

  void consume() {
    if (exhausted()) throw BudgetExhausted("evaluation budget of " + std::to_string(budget_) + " exhausted");
    ++total_;
  }

 private:
  long total_ = 0;
  long budget_;
};

/// Evaluates `objective` at `x` clamped into `space`, charging one evaluation.
template <class Objective>
double counted_evaluate(const Objective& objective, const SearchSpace& space, EvalCounter& counter,
                        const Vector& x) {
  counter.consume();
  return objective(space.clamp(x));
}

inline double counted_evaluate(const ObjectiveSpec& spec, EvalCounter& counter, const Vector& x) {
  return counted_evaluate(spec, spec.space, counter, x);
}

}  // namespace optbench
