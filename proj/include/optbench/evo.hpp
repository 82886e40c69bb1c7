#pragma once

// Generational optimizers behind the ask/tell interface: a (mu+lambda)
// evolution strategy, CMA-ES and global-best particle swarm optimization.

#include "optbench/optimizer.hpp"
#include "optbench/trace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace optbench::evo {

/// CMA-ES default population size, 4 + floor(3 ln d).
inline int default_lambda(int dimension) {
  if (dimension < 1) throw InvalidInput("dimension must be >= 1");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

inline constexpr int kDefaultPopulation = 10;

struct Population {
  std::vector<Vector> members;
  std::vector<double> fitnesses;
  long generation = 0;
};

// Indices of `fitnesses` sorted ascending; equal fitnesses keep insertion order.
inline std::vector<std::size_t> rank(const std::vector<double>& fitnesses) {
  std::vector<std::size_t> idx(fitnesses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fitnesses[a] < fitnesses[b]; });
  return idx;
}

// ---------------------------------------------------------------------------
// (mu+lambda) evolution strategy, mutation only.

struct EsParams {
  int mu = 5;
  int lambda = kDefaultPopulation;
  double sigma_fraction = 0.3;  // of the domain half-width
  double sigma_decay = 0.99;

  void validate() const {
    if (mu < 1 || lambda < 1 || mu > lambda) throw InvalidInput("ES needs 1 <= mu <= lambda");
    if (!(sigma_fraction >= 0.0) || !(sigma_decay > 0.0 && sigma_decay <= 1.0))
      throw InvalidInput("invalid ES step size parameters");
  }
};

class EsOptimizer final : public Optimizer {
 public:
  EsOptimizer(SearchSpace space, EsParams params = {})
      : space_(std::move(space)), params_(params), sigma_(space_.width() * 0.5 * params.sigma_fraction) {
    params_.validate();
  }

  std::vector<Vector> ask(Rng& rng) override {
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(params_.lambda));
    if (parents_.members.empty()) {
      for (int i = 0; i < params_.lambda; ++i) out.push_back(detail::uniform_point(space_, rng));
      return out;
    }
    std::uniform_int_distribution<std::size_t> pick(0, parents_.members.size() - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < params_.lambda; ++i) {
      Vector child = parents_.members[pick(rng)];
      for (Eigen::Index j = 0; j < child.size(); ++j) child[j] += sigma_[j] * gauss(rng);
      out.push_back(space_.clamp(child));
    }
    return out;
  }

  void tell(const std::vector<Vector>& candidates, const std::vector<double>& fitnesses) override {
    detail::check_tell_sizes(candidates, fitnesses, static_cast<std::size_t>(params_.lambda));
    std::vector<Vector> pool = parents_.members;
    std::vector<double> pool_fit = parents_.fitnesses;
    pool.insert(pool.end(), candidates.begin(), candidates.end());
    pool_fit.insert(pool_fit.end(), fitnesses.begin(), fitnesses.end());
    const auto order = rank(pool_fit);
    const std::size_t keep = std::min(pool.size(), static_cast<std::size_t>(params_.mu));
    Population next;
    for (std::size_t i = 0; i < keep; ++i) {
      next.members.push_back(pool[order[i]]);
      next.fitnesses.push_back(pool_fit[order[i]]);
    }
    next.generation = parents_.generation + 1;
    parents_ = std::move(next);
    sigma_ *= params_.sigma_decay;
  }

  const Population& parents() const { return parents_; }
  const Vector& sigma() const { return sigma_; }
  void set_sigma(Vector sigma) { sigma_ = std::move(sigma); }

 private:
  SearchSpace space_;
  EsParams params_;
  Vector sigma_;
  Population parents_;
};

// ---------------------------------------------------------------------------
// CMA-ES with the standard default strategy parameters.

struct CmaParams {
  int lambda = 0;  // 0 selects default_lambda(d)
  double sigma_fraction = 0.3;  // initial step size relative to the domain width
};

struct CmaState {
  Vector mean;
  double step_size = 1.0;
  Matrix covariance;
  Vector evo_path_sigma;
  Vector evo_path_c;
  Vector weights;
  long generation = 0;
};

class CmaEsOptimizer final : public Optimizer {
 public:
  CmaEsOptimizer(SearchSpace space, CmaParams params = {}) : space_(std::move(space)) {
    n_ = space_.dimension();
    lambda_ = params.lambda > 0 ? params.lambda : default_lambda(n_);
    if (lambda_ < 2) throw InvalidInput("CMA-ES needs lambda >= 2");
    mu_ = lambda_ / 2;
    initial_step_ = params.sigma_fraction * space_.width().maxCoeff();
    if (!(initial_step_ > 0.0)) throw InvalidInput("CMA-ES initial step size must be positive");

    const double n = static_cast<double>(n_);
    Vector w(mu_);
    for (int i = 0; i < mu_; ++i) w[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
    state_.weights = w / w.sum();
    mueff_ = 1.0 / state_.weights.squaredNorm();
    cc_ = (4.0 + mueff_ / n) / (n + 4.0 + 2.0 * mueff_ / n);
    cs_ = (mueff_ + 2.0) / (n + mueff_ + 5.0);
    c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mueff_);
    cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((n + 2.0) * (n + 2.0) + mueff_));
    damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (n + 1.0)) - 1.0) + cs_;
    chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    state_.step_size = initial_step_;
    state_.covariance = Matrix::Identity(n_, n_);
    state_.evo_path_sigma = Vector::Zero(n_);
    state_.evo_path_c = Vector::Zero(n_);
    basis_ = Matrix::Identity(n_, n_);
    scales_ = Vector::Ones(n_);
  }

  /// Places the initial mean; without this the first ask draws it uniformly.
  void set_mean(Vector mean) { state_.mean = std::move(mean); }

  std::vector<Vector> ask(Rng& rng) override {
    if (state_.mean.size() == 0) state_.mean = detail::uniform_point(space_, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(lambda_));
    Vector z(n_);
    for (int k = 0; k < lambda_; ++k) {
      for (auto& v : z) v = gauss(rng);
      const Vector x = state_.mean + state_.step_size * (basis_ * scales_.cwiseProduct(z));
      out.push_back(space_.clamp(x));
    }
    return out;
  }

  // Updates use the clamped points that were actually evaluated.
  void tell(const std::vector<Vector>& candidates, const std::vector<double>& fitnesses) override {
    detail::check_tell_sizes(candidates, fitnesses, static_cast<std::size_t>(lambda_));
    const double n = static_cast<double>(n_);
    const auto order = rank(fitnesses);
    const Vector old_mean = state_.mean;
    const double sigma = state_.step_size;

    Matrix steps(n_, mu_);
    for (int i = 0; i < mu_; ++i) steps.col(i) = (candidates[order[static_cast<std::size_t>(i)]] - old_mean) / sigma;
    const Vector y_w = steps * state_.weights;
    state_.mean = old_mean + sigma * y_w;

    const Matrix inv_sqrt = basis_ * scales_.cwiseInverse().asDiagonal() * basis_.transpose();
    state_.evo_path_sigma = (1.0 - cs_) * state_.evo_path_sigma + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * (inv_sqrt * y_w);
    const double ps_norm = state_.evo_path_sigma.norm();
    const double gen = static_cast<double>(state_.generation + 1);
    const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * gen)) / chi_n_ < 1.4 + 2.0 / (n + 1.0);
    state_.evo_path_c = (1.0 - cc_) * state_.evo_path_c + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * y_w;

    const double delta_h = hsig ? 0.0 : cc_ * (2.0 - cc_);
    Matrix rank_mu = steps * state_.weights.asDiagonal() * steps.transpose();
    Matrix c = (1.0 - c1_ - cmu_) * state_.covariance +
               c1_ * (state_.evo_path_c * state_.evo_path_c.transpose() + delta_h * state_.covariance) + cmu_ * rank_mu;
    state_.covariance = 0.5 * (c + c.transpose());

    state_.step_size = sigma * std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));
    ++state_.generation;
    decompose();
  }

  const CmaState& state() const { return state_; }
  int lambda() const { return lambda_; }
  int mu() const { return mu_; }

 private:
  void decompose() {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(state_.covariance);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0) || !eig.eigenvalues().allFinite())
      throw NumericalFailure("CMA-ES covariance lost positive definiteness at generation " +
                             std::to_string(state_.generation));
    basis_ = eig.eigenvectors();
    scales_ = eig.eigenvalues().cwiseSqrt();
  }

  SearchSpace space_;
  int n_ = 0;
  int lambda_ = 0;
  int mu_ = 0;
  double initial_step_ = 0.0;
  double mueff_ = 0.0, cc_ = 0.0, cs_ = 0.0, c1_ = 0.0, cmu_ = 0.0, damps_ = 0.0, chi_n_ = 0.0;
  CmaState state_;
  Matrix basis_;
  Vector scales_;
};

// ---------------------------------------------------------------------------
// Global-best PSO with constriction-equivalent coefficients.

struct PsoParams {
  int swarm_size = kDefaultPopulation;
  double inertia = 0.7298;
  double cognitive = 1.49618;
  double social = 1.49618;
  double velocity_clamp_fraction = 0.5;  // of the domain width
};

struct SwarmState {
  Matrix positions;  // lambda x d
  Matrix velocities;
  Matrix personal_best_pos;
  Vector personal_best_val;
  Vector global_best_pos;
  double global_best_val = std::numeric_limits<double>::infinity();
};

class PsoOptimizer final : public Optimizer {
 public:
  PsoOptimizer(SearchSpace space, PsoParams params = {})
      : space_(std::move(space)), params_(params), vmax_(space_.width() * params.velocity_clamp_fraction) {
    if (params_.swarm_size < 1) throw InvalidInput("PSO swarm needs at least one particle");
  }

  std::vector<Vector> ask(Rng& rng) override {
    const int d = space_.dimension();
    if (!initialized_) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      state_.positions.resize(params_.swarm_size, d);
      state_.velocities.resize(params_.swarm_size, d);
      for (int i = 0; i < params_.swarm_size; ++i) {
        state_.positions.row(i) = detail::uniform_point(space_, rng).transpose();
        for (int j = 0; j < d; ++j) state_.velocities(i, j) = 0.1 * space_.width()[j] * u(rng);
      }
      state_.personal_best_pos = state_.positions;
      state_.personal_best_val = Vector::Constant(params_.swarm_size, std::numeric_limits<double>::infinity());
      state_.global_best_pos = state_.positions.row(0).transpose();
      initialized_ = true;
    } else {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Vector r1(d), r2(d);
      for (int i = 0; i < params_.swarm_size; ++i) {
        for (int j = 0; j < d; ++j) {
          r1[j] = u(rng);
          r2[j] = u(rng);
        }
        move_particle(i, r1, r2);
      }
    }
    std::vector<Vector> out;
    for (int i = 0; i < params_.swarm_size; ++i) out.push_back(state_.positions.row(i).transpose());
    return out;
  }

  /// v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped, then x <- x + v
  /// clamped to the domain.
  void move_particle(int i, const Vector& r1, const Vector& r2) {
    const Vector x = state_.positions.row(i).transpose();
    Vector v = params_.inertia * state_.velocities.row(i).transpose() +
               params_.cognitive * r1.cwiseProduct(state_.personal_best_pos.row(i).transpose() - x) +
               params_.social * r2.cwiseProduct(state_.global_best_pos - x);
    v = v.cwiseMax(-vmax_).cwiseMin(vmax_);
    state_.velocities.row(i) = v.transpose();
    state_.positions.row(i) = space_.clamp(x + v).transpose();
  }

  void tell(const std::vector<Vector>& candidates, const std::vector<double>& fitnesses) override {
    detail::check_tell_sizes(candidates, fitnesses, static_cast<std::size_t>(params_.swarm_size));
    for (int i = 0; i < params_.swarm_size; ++i) {
      const double f = fitnesses[static_cast<std::size_t>(i)];
      if (f < state_.personal_best_val[i]) {
        state_.personal_best_val[i] = f;
        state_.personal_best_pos.row(i) = candidates[static_cast<std::size_t>(i)].transpose();
      }
      if (f < state_.global_best_val) {
        state_.global_best_val = f;
        state_.global_best_pos = candidates[static_cast<std::size_t>(i)];
      }
    }
  }

  const SwarmState& state() const { return state_; }
  SwarmState& mutable_state() { return state_; }
  const PsoParams& params() const { return params_; }

 private:
  SearchSpace space_;
  PsoParams params_;
  Vector vmax_;
  SwarmState state_;
  bool initialized_ = false;
};

}  // namespace optbench::evo
