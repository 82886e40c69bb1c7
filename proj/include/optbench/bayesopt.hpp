#pragma once

// Bayesian optimization: random initial design, Matern-5/2 GP surrogate and
// the GP-UCB acquisition in its minimization form, -mu + beta * sigma,
// maximized by a multistart coordinate pattern search over the unit cube.

#include "optbench/gp.hpp"
#include "optbench/optimizer.hpp"
#include "optbench/trace.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace optbench::bo {

struct BoConfig {
  int initial_design_size = 10;
  double ucb_beta = 2.0;
  int acq_restarts = 10;
  int acq_local_steps = 50;
  int refit_every = 10;

  void validate() const {
    if (initial_design_size < 2) throw InvalidInput("BO initial design needs at least two points");
    if (!(ucb_beta >= 0.0) || acq_restarts < 1 || acq_local_steps < 0 || refit_every < 1)
      throw InvalidInput("invalid BO configuration");
  }
};

struct AcquisitionValue {
  Vector point;  // unit cube
  double score;
};

inline constexpr double kPatternStepStart = 0.1;
inline constexpr double kPatternStepFloor = 1e-4;

inline double ucb_score(const gp::Posterior& gp, double beta, const Vector& x) {
  const gp::Prediction p = gp::predict(gp, x);
  return -p.mean + beta * std::sqrt(p.variance);
}

/// Coordinate pattern search from `start`: each step sweeps every coordinate
/// trying +h then -h, and halves h (down to the floor) after a sweep with no
/// improvement.
template <class Score>
AcquisitionValue pattern_search(const Score& score, Vector start, int steps) {
  AcquisitionValue best{std::move(start), 0.0};
  best.score = score(best.point);
  double h = kPatternStepStart;
  for (int step = 0; step < steps; ++step) {
    bool improved = false;
    for (Eigen::Index j = 0; j < best.point.size(); ++j) {
      for (double dir : {1.0, -1.0}) {
        Vector trial = best.point;
        trial[j] = std::clamp(trial[j] + dir * h, 0.0, 1.0);
        if (trial[j] == best.point[j]) continue;
        const double s = score(trial);
        if (s > best.score) {
          best.point = std::move(trial);
          best.score = s;
          improved = true;
          break;
        }
      }
    }
    if (!improved) h = std::max(h * 0.5, kPatternStepFloor);
  }
  return best;
}

inline AcquisitionValue maximize_acquisition(const gp::Posterior& gp, const BoConfig& config, Rng& rng) {
  const Eigen::Index d = gp.train_inputs.cols();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector> starts(static_cast<std::size_t>(config.acq_restarts), Vector(d));
  for (auto& s : starts)
    for (auto& v : s) v = u(rng);
  auto score = [&](const Vector& x) { return ucb_score(gp, config.ucb_beta, x); };
  std::optional<AcquisitionValue> best;
  for (auto& s : starts) {
    AcquisitionValue local = pattern_search(score, std::move(s), config.acq_local_steps);
    if (!best || local.score > best->score) best = std::move(local);
  }
  return *best;
}

class BayesOptimizer final : public Optimizer {
 public:
  BayesOptimizer(SearchSpace space, BoConfig config) : space_(std::move(space)), config_(config) {
    config_.validate();
  }

  std::vector<Vector> ask(Rng& rng) override {
    if (size() < config_.initial_design_size) {
      std::vector<Vector> design;
      for (int i = size(); i < config_.initial_design_size; ++i) design.push_back(detail::uniform_point(space_, rng));
      return design;
    }
    const Matrix x = inputs();
    const Vector y = Eigen::Map<const Vector>(targets_.data(), static_cast<Eigen::Index>(targets_.size()));
    if (!params_ || size() - last_refit_ >= config_.refit_every) {
      params_ = gp::fit_hyperparameters(x, y);
      last_refit_ = size();
    }
    posterior_ = gp::fit(x, y, *params_);
    const AcquisitionValue best = maximize_acquisition(*posterior_, config_, rng);
    return {space_.clamp(space_.from_unit(best.point))};
  }

  void tell(const std::vector<Vector>& candidates, const std::vector<double>& fitnesses) override {
    detail::check_tell_sizes(candidates, fitnesses, candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      unit_points_.push_back(space_.to_unit(space_.clamp(candidates[i])));
      targets_.push_back(fitnesses[i]);
    }
  }

  int size() const { return static_cast<int>(targets_.size()); }
  const std::optional<gp::KernelParams>& hyperparameters() const { return params_; }
  const std::optional<gp::Posterior>& posterior() const { return posterior_; }

 private:
  Matrix inputs() const {
    Matrix x(size(), space_.dimension());
    for (int i = 0; i < size(); ++i) x.row(i) = unit_points_[static_cast<std::size_t>(i)].transpose();
    return x;
  }

  SearchSpace space_;
  BoConfig config_;
  std::vector<Vector> unit_points_;
  std::vector<double> targets_;
  std::optional<gp::KernelParams> params_;
  std::optional<gp::Posterior> posterior_;
  int last_refit_ = 0;
};

inline RunTrace run_bo(const ObjectiveSpec& objective, long budget, const BoConfig& config, long seed,
                       bool timing = true) {
  if (budget < config.initial_design_size) throw InvalidInput("BO budget is smaller than its initial design");
  RunTrace trace;
  trace.algorithm = Algorithm::BO;
  trace.function = objective.id;
  trace.seed = seed;
  Rng rng(static_cast<Rng::result_type>(seed));
  BayesOptimizer opt(objective.space, config);
  drive(opt, objective, objective.space, rng, DriveOptions{budget, timing}, trace);
  return trace;
}

}  // namespace optbench::bo
