#pragma once

// Gaussian-process regression with a Matern-5/2 ARD kernel. Inputs are
// expected in the unit hypercube; targets are standardized internally and
// predictions are returned in the caller's units.

#include "optbench/common.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

namespace optbench::gp {

struct KernelParams {
  double signal_variance = 1.0;
  Vector length_scales;
  double noise_variance = 1e-6;

  static KernelParams isotropic(int dimension, double length_scale, double signal_variance,
                                double noise_variance) {
    return {signal_variance, Vector::Constant(dimension, length_scale), noise_variance};
  }

  void validate() const {
    if (!(signal_variance > 0.0)) throw InvalidInput("signal variance must be positive");
    if (!(noise_variance >= 0.0)) throw InvalidInput("noise variance must be nonnegative");
    if (length_scales.size() == 0 || !(length_scales.array() > 0.0).all())
      throw InvalidInput("length scales must be positive");
  }
};

inline double matern52(double signal_variance, double r) {
  const double s5r = std::sqrt(5.0) * r;
  return signal_variance * (1.0 + s5r + 5.0 * r * r / 3.0) * std::exp(-s5r);
}

template <class A, class B>
double kernel_value(const KernelParams& params, const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < params.length_scales.size(); ++i) {
    const double t = (a(i) - b(i)) / params.length_scales[i];
    r2 += t * t;
  }
  return matern52(params.signal_variance, std::sqrt(r2));
}

inline Matrix kernel_matrix(const KernelParams& params, const Matrix& inputs) {
  const Eigen::Index n = inputs.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = kernel_value(params, inputs.row(i), inputs.row(j));
      k(j, i) = k(i, j);
    }
  }
  return k;
}

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

struct Posterior {
  Matrix train_inputs;   // n x d, unit cube
  Vector train_targets;  // standardized
  KernelParams params;
  Matrix chol_factor;  // lower triangular
  Vector alpha;
  double target_mean = 0.0;
  double target_scale = 1.0;
  double jitter = 0.0;

  Eigen::Index size() const { return train_inputs.rows(); }
};

struct Prediction {
  double mean;
  double variance;
};

namespace detail {

struct Standardized {
  Vector values;
  double mean;
  double scale;
};

inline Standardized standardize(const Vector& targets) {
  const double mean = targets.mean();
  double scale = 1.0;
  if (targets.size() > 1) {
    const double var = (targets.array() - mean).square().sum() / static_cast<double>(targets.size() - 1);
    if (var > 0.0 && std::isfinite(var)) scale = std::sqrt(var);
  }
  return {(targets.array() - mean) / scale, mean, scale};
}

// Cholesky of K + (noise + jitter) I. Jitter stays 0 unless the plain
// factorization fails, then walks the ladder.
inline std::pair<Matrix, double> factorize(const Matrix& k, double noise) {
  const Eigen::Index n = k.rows();
  for (double jitter = 0.0; jitter <= kJitterMax * (1.0 + 1e-9); jitter = jitter == 0.0 ? kJitterStart : jitter * 10.0) {
    Matrix shifted = k;
    shifted.diagonal().array() += noise + jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Matrix l = llt.matrixL();
      if (l.allFinite()) return {std::move(l), jitter};
    }
  }
  throw NumericalFailure("Cholesky factorization failed for " + std::to_string(n) +
                         " points after jitter reached " + std::to_string(kJitterMax));
}

inline Posterior fit_standardized(const Matrix& inputs, Vector standardized, double mean, double scale,
                                  const KernelParams& params) {
  Posterior post;
  post.train_inputs = inputs;
  post.train_targets = std::move(standardized);
  post.params = params;
  post.target_mean = mean;
  post.target_scale = scale;
  auto [l, jitter] = factorize(kernel_matrix(params, inputs), params.noise_variance);
  post.chol_factor = std::move(l);
  post.jitter = jitter;
  const Vector half = post.chol_factor.triangularView<Eigen::Lower>().solve(post.train_targets);
  post.alpha = post.chol_factor.transpose().triangularView<Eigen::Upper>().solve(half);
  return post;
}

}  // namespace detail

inline Posterior fit(const Matrix& inputs, const Vector& targets, const KernelParams& params) {
  if (inputs.rows() < 1) throw InvalidInput("GP fit needs at least one training point");
  if (inputs.rows() != targets.size()) throw InvalidInput("GP inputs and targets differ in length");
  if (inputs.cols() != params.length_scales.size())
    throw InvalidInput("GP length scales do not match input dimension");
  if (!inputs.allFinite() || !targets.allFinite()) throw InvalidInput("GP training data must be finite");
  params.validate();
  auto st = detail::standardize(targets);
  return detail::fit_standardized(inputs, std::move(st.values), st.mean, st.scale, params);
}

/// Predictive mean and latent variance in standardized units, before clamping.
inline Prediction predict_standardized(const Posterior& gp, const Vector& x) {
  const Eigen::Index n = gp.size();
  Vector kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) kstar[i] = kernel_value(gp.params, gp.train_inputs.row(i), x);
  const double mean = kstar.dot(gp.alpha);
  const Vector v = gp.chol_factor.triangularView<Eigen::Lower>().solve(kstar);
  return {mean, gp.params.signal_variance - v.squaredNorm()};
}

inline Prediction predict(const Posterior& gp, const Vector& x) {
  if (x.size() != gp.train_inputs.cols()) throw InvalidInput("GP query has wrong dimension");
  const Prediction raw = predict_standardized(gp, x);
  assert(raw.variance >= -1e-8);
  const double var = std::max(raw.variance, 0.0);
  return {gp.target_mean + gp.target_scale * raw.mean, gp.target_scale * gp.target_scale * var};
}

/// Log marginal likelihood of standardized targets under `params`.
inline double log_marginal_likelihood(const Matrix& inputs, const Vector& standardized,
                                      const KernelParams& params) {
  const Posterior post = detail::fit_standardized(inputs, standardized, 0.0, 1.0, params);
  const double n = static_cast<double>(inputs.rows());
  return -0.5 * standardized.dot(post.alpha) - post.chol_factor.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

inline constexpr std::array<double, 5> kLengthScaleGrid = {0.05, 0.1, 0.2, 0.4, 0.8};
inline constexpr std::array<double, 3> kSignalVarianceGrid = {0.5, 1.0, 2.0};
inline constexpr double kGridNoise = 1e-6;

/// Grid search over a shared length scale and the signal variance; ties go to
/// the larger length scale.
inline KernelParams fit_hyperparameters(const Matrix& inputs, const Vector& targets) {
  if (inputs.rows() < 2) throw InvalidInput("hyperparameter fit needs at least two points");
  if (inputs.rows() != targets.size()) throw InvalidInput("GP inputs and targets differ in length");
  const int d = static_cast<int>(inputs.cols());
  const Vector y = detail::standardize(targets).values;
  KernelParams best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (auto ls = kLengthScaleGrid.rbegin(); ls != kLengthScaleGrid.rend(); ++ls) {
    for (double sv : kSignalVarianceGrid) {
      KernelParams candidate = KernelParams::isotropic(d, *ls, sv, kGridNoise);
      double lml;
      try {
        lml = log_marginal_likelihood(inputs, y, candidate);
      } catch (const NumericalFailure&) {
        continue;
      }
      if (!std::isfinite(lml)) continue;
      if (!found || lml > best_lml) {
        best = std::move(candidate);
        best_lml = lml;
        found = true;
      }
    }
  }
  if (!found) throw NumericalFailure("no hyperparameter grid point admits a Cholesky factorization");
  return best;
}

}  // namespace optbench::gp
