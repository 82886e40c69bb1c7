#pragma once

// Experiment grid {algorithm} x {function} x {seed}: runs every cell, records
// quality and wall-clock per evaluation, and aggregates runs per batch.

#include "optbench/bayesopt.hpp"
#include "optbench/evo.hpp"
#include "optbench/trace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>
#include <vector>

namespace optbench {

struct AlgorithmSettings {
  bo::BoConfig bo;
  evo::EsParams es;
  evo::CmaParams cma;
  evo::PsoParams pso;
};

inline std::unique_ptr<Optimizer> make_optimizer(Algorithm algorithm, const SearchSpace& space,
                                                 const AlgorithmSettings& settings = {}) {
  switch (algorithm) {
    case Algorithm::BO: return std::make_unique<bo::BayesOptimizer>(space, settings.bo);
    case Algorithm::CmaEs: return std::make_unique<evo::CmaEsOptimizer>(space, settings.cma);
    case Algorithm::Es: return std::make_unique<evo::EsOptimizer>(space, settings.es);
    case Algorithm::Pso: return std::make_unique<evo::PsoOptimizer>(space, settings.pso);
  }
  throw InvalidInput("unknown algorithm");
}

// Each (algorithm, function, seed) cell draws from its own stream.
inline Rng make_rng(Algorithm algorithm, FunctionId function, long seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(static_cast<std::uint64_t>(seed) >> 32),
                    static_cast<std::uint32_t>(algorithm), static_cast<std::uint32_t>(function)};
  return Rng(seq);
}

/// One run of `algorithm` on an arbitrary objective over `space`.
template <class Objective>
RunTrace run_single(Algorithm algorithm, FunctionId function, const Objective& objective, const SearchSpace& space,
                    long budget, long seed, bool timing, const AlgorithmSettings& settings = {}) {
  RunTrace trace;
  trace.algorithm = algorithm;
  trace.function = function;
  trace.seed = seed;
  Rng rng = make_rng(algorithm, function, seed);
  try {
    auto optimizer = make_optimizer(algorithm, space, settings);
    drive(*optimizer, objective, space, rng, DriveOptions{budget, timing}, trace);
  } catch (const InvalidInput& e) {
    trace.failed = true;
    trace.failure = e.what();
  }
  return trace;
}

inline RunTrace run_single(Algorithm algorithm, const ObjectiveSpec& objective, long budget, long seed, bool timing,
                           const AlgorithmSettings& settings = {}) {
  return run_single(algorithm, objective.id, objective, objective.space, budget, seed, timing, settings);
}

struct ExperimentPlan {
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<FunctionId> functions{kAllFunctions.begin(), kAllFunctions.end()};
  int dimension = 10;
  int runs = 10;
  long base_seed = 42;
  long budget = 1500;
  long bo_budget = 300;  // BO budget, capped at `budget`
  bool timing = true;
  int jobs = 1;  // worker threads in quality mode
  long warmup_budget = 50;
  AlgorithmSettings settings;

  long budget_for(Algorithm a) const { return a == Algorithm::BO ? std::min(budget, bo_budget) : budget; }

  void validate() const {
    if (algorithms.empty() || functions.empty()) throw InvalidInput("experiment needs algorithms and functions");
    if (runs < 1) throw InvalidInput("runs must be positive");
    if (dimension < 1) throw InvalidInput("dimension must be positive");
    if (budget < 1 || budget % kBatchSize != 0 || bo_budget < 1 || bo_budget % kBatchSize != 0)
      throw InvalidInput("evaluation budgets must be positive multiples of " + std::to_string(kBatchSize));
    if (jobs < 1) throw InvalidInput("jobs must be positive");
  }

  std::size_t size() const { return algorithms.size() * functions.size() * static_cast<std::size_t>(runs); }
};

struct ExperimentResult {
  std::vector<RunTrace> traces;  // ordered by (function, algorithm, run_id)
  int max_concurrent_runs = 0;
};

inline bool trace_order(const RunTrace& a, const RunTrace& b) {
  return std::tuple(static_cast<int>(a.function), static_cast<int>(a.algorithm), a.run_id) <
         std::tuple(static_cast<int>(b.function), static_cast<int>(b.algorithm), b.run_id);
}

/// Executes every cell. Timing mode runs strictly one at a time and discards a
/// short warm-up run per cell; quality mode fans runs out over `jobs` threads.
inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  struct Cell {
    Algorithm algorithm;
    FunctionId function;
    int run_id;
  };
  std::vector<Cell> cells;
  for (FunctionId f : plan.functions)
    for (Algorithm a : plan.algorithms)
      for (int r = 0; r < plan.runs; ++r) cells.push_back({a, f, r});

  ExperimentResult result;
  result.traces.resize(cells.size());
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  auto execute = [&](std::size_t i) {
    const Cell& c = cells[i];
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    const ObjectiveSpec objective = make_objective(c.function, plan.dimension);
    RunTrace t = run_single(c.algorithm, objective, plan.budget_for(c.algorithm), plan.base_seed + c.run_id,
                            plan.timing, plan.settings);
    t.run_id = c.run_id;
    result.traces[i] = std::move(t);
    --active;
  };

  if (plan.timing || plan.jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (plan.timing && cells[i].run_id == 0 && plan.warmup_budget > 0) {
        const ObjectiveSpec objective = make_objective(cells[i].function, plan.dimension);
        const long warm = std::min(plan.warmup_budget, plan.budget_for(cells[i].algorithm));
        (void)run_single(cells[i].algorithm, objective, warm, plan.base_seed - 1, true, plan.settings);
      }
      execute(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n = std::min<int>(plan.jobs, static_cast<int>(cells.size()));
    for (int w = 0; w < n; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) execute(i);
      });
    for (auto& w : workers) w.join();
  }
  result.max_concurrent_runs = peak.load();
  std::stable_sort(result.traces.begin(), result.traces.end(), trace_order);
  return result;
}

/// Per-batch wall seconds of a timed run; sums to the run's total time.
inline std::vector<double> measure_batch_time(const RunTrace& run) { return batch_times(run); }

struct AggregateSeries {
  Algorithm algorithm = Algorithm::BO;
  FunctionId function = FunctionId::Schwefel;
  int runs = 0;
  std::vector<long> batch_index;
  std::vector<long> eval_index;  // last evaluation of each batch
  std::vector<double> mean_quality;
  std::vector<double> quality_ci_half_width;
  std::vector<double> mean_cum_time_s;
  std::vector<double> time_ci_half_width;
  std::vector<double> mean_log10_time;
  std::vector<double> log10_time_ci_half_width;
  std::vector<double> mean_batch_time_s;
  std::vector<double> median_batch_time_s;

  std::size_t size() const { return batch_index.size(); }
};

inline constexpr double kCiZ = 1.96;
inline constexpr const char* kCiDescription = "95% normal-approximation CI of the mean: 1.96 * sample stddev / sqrt(runs)";

struct Moments {
  double mean;
  double ci_half_width;
};

/// Mean and 1.96 * standard error; a single sample has zero half-width.
inline Moments mean_ci(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, kCiZ * sd / std::sqrt(n)};
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw InvalidInput("median of an empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

/// Cross-run statistics per batch for one algorithm x function cell. Requires
/// at least two runs unless `allow_single_run` is set (plots then have no band).
inline AggregateSeries aggregate(const std::vector<RunTrace>& traces, bool allow_single_run = false) {
  if (traces.empty() || (traces.size() < 2 && !allow_single_run))
    throw InvalidInput("aggregation needs at least two runs, got " + std::to_string(traces.size()));
  const std::size_t len = traces.front().records.size();
  for (const RunTrace& t : traces) {
    if (t.records.size() != len) throw InvalidInput("aggregation needs traces of equal length");
    if (t.algorithm != traces.front().algorithm || t.function != traces.front().function)
      throw InvalidInput("aggregation mixes algorithms or functions");
  }
  if (len == 0) throw InvalidInput("aggregation needs nonempty traces");

  AggregateSeries out;
  out.algorithm = traces.front().algorithm;
  out.function = traces.front().function;
  out.runs = static_cast<int>(traces.size());
  std::vector<std::vector<double>> per_run_batches;
  for (const RunTrace& t : traces) per_run_batches.push_back(batch_times(t));

  std::size_t batch = 0;
  std::vector<double> q, tm, lg, bt;
  for (std::size_t i = 0; i < len; ++i) {
    const EvalRecord& head = traces.front().records[i];
    if (head.eval_index % kBatchSize != 0 && i + 1 != len) continue;
    q.clear();
    tm.clear();
    lg.clear();
    bt.clear();
    for (std::size_t r = 0; r < traces.size(); ++r) {
      const EvalRecord& rec = traces[r].records[i];
      q.push_back(rec.best_so_far);
      tm.push_back(rec.cum_time_s);
      lg.push_back(std::log10(rec.cum_time_s));
      bt.push_back(per_run_batches[r][batch]);
    }
    const Moments mq = mean_ci(q), mt = mean_ci(tm), ml = mean_ci(lg), mb = mean_ci(bt);
    out.batch_index.push_back(head.batch_index);
    out.eval_index.push_back(head.eval_index);
    out.mean_quality.push_back(mq.mean);
    out.quality_ci_half_width.push_back(mq.ci_half_width);
    out.mean_cum_time_s.push_back(mt.mean);
    out.time_ci_half_width.push_back(mt.ci_half_width);
    out.mean_log10_time.push_back(ml.mean);
    out.log10_time_ci_half_width.push_back(ml.ci_half_width);
    out.mean_batch_time_s.push_back(mb.mean);
    out.median_batch_time_s.push_back(median(bt));
    ++batch;
  }
  return out;
}

}  // namespace optbench
