#pragma once

#include "optbench/objectives.hpp"

#include <array>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace optbench {

using Rng = std::mt19937_64;

enum class Algorithm { BO, CmaEs, Es, Pso };

// Legend order used by every figure.
inline constexpr std::array<Algorithm, 4> kAllAlgorithms = {Algorithm::BO, Algorithm::CmaEs, Algorithm::Es,
                                                            Algorithm::Pso};

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::BO: return "bo";
    case Algorithm::CmaEs: return "cmaes";
    case Algorithm::Es: return "es";
    case Algorithm::Pso: return "pso";
  }
  return "unknown";
}

inline std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::BO: return "BO";
    case Algorithm::CmaEs: return "CMA-ES";
    case Algorithm::Es: return "EA";
    case Algorithm::Pso: return "PSO";
  }
  return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms)
    if (to_string(a) == name) return a;
  return std::nullopt;
}

/// Ask/tell protocol shared by every optimizer. All optimizers minimize.
class Optimizer {
 public:
  virtual ~Optimizer() = default;

  /// Proposes the next batch of candidates, all inside the search space.
  virtual std::vector<Vector> ask(Rng& rng) = 0;

  /// Feeds back the objective values of the candidates returned by the last ask.
  virtual void tell(const std::vector<Vector>& candidates, const std::vector<double>& fitnesses) = 0;
};

namespace detail {

inline void check_tell_sizes(const std::vector<Vector>& candidates, const std::vector<double>& fitnesses,
                             std::size_t expected) {
  if (candidates.size() != fitnesses.size() || candidates.size() != expected)
    throw InvalidInput("tell expects " + std::to_string(expected) + " candidates and fitnesses, got " +
                       std::to_string(candidates.size()) + " and " + std::to_string(fitnesses.size()));
}

inline Vector uniform_point(const SearchSpace& space, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector unit(space.dimension());
  for (auto& v : unit) v = u(rng);
  return space.from_unit(unit);
}

}  // namespace detail

}  // namespace optbench
