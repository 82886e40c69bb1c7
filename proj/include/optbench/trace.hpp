#pragma once

// Per-run evaluation log and the generic ask/tell driver that fills it.

#include "optbench/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace optbench {

inline constexpr int kBatchSize = 10;

inline long batch_of(long eval_index) { return (eval_index + kBatchSize - 1) / kBatchSize; }

struct EvalRecord {
  long eval_index = 0;  // 1-based
  double value = 0.0;
  double best_so_far = 0.0;
  long batch_index = 0;
  double cum_time_s = 0.0;            // wall time since run start, objective included
  double cum_objective_time_s = 0.0;  // share of cum_time_s spent inside the objective

  double cum_optimizer_time_s() const { return cum_time_s - cum_objective_time_s; }
};

struct RunTrace {
  Algorithm algorithm = Algorithm::BO;
  FunctionId function = FunctionId::Schwefel;
  long seed = 0;
  int run_id = 0;
  std::vector<EvalRecord> records;
  bool failed = false;
  std::string failure;

  double final_best() const {
    return records.empty() ? std::numeric_limits<double>::infinity() : records.back().best_so_far;
  }
  double best_at(long eval_index) const { return records.at(static_cast<std::size_t>(eval_index - 1)).best_so_far; }
  double total_time_s() const { return records.empty() ? 0.0 : records.back().cum_time_s; }
};

/// Wall time of each batch of ten evaluations, from the cumulative clock.
inline std::vector<double> batch_times(const RunTrace& trace) {
  std::vector<double> out;
  double prev = 0.0;
  for (const EvalRecord& r : trace.records) {
    if (r.eval_index % kBatchSize == 0 || &r == &trace.records.back()) {
      out.push_back(r.cum_time_s - prev);
      prev = r.cum_time_s;
    }
  }
  return out;
}

inline double batch_time_at(const RunTrace& trace, std::size_t record) {
  const long batch = trace.records[record].batch_index;
  const std::size_t start = static_cast<std::size_t>((batch - 1) * kBatchSize);
  const double prev = start == 0 ? 0.0 : trace.records[start - 1].cum_time_s;
  return trace.records[record].cum_time_s - prev;
}

struct DriveOptions {
  long budget = 1500;
  bool timing = true;
};

/// Runs ask/tell until the evaluation budget is spent. A generation cut short
/// by the budget is evaluated but never told back to the optimizer.
/// Optimizer failures mark the trace failed and keep the partial record list.
template <class Objective>
void drive(Optimizer& optimizer, const Objective& objective, const SearchSpace& space, Rng& rng,
           const DriveOptions& options, RunTrace& trace) {
  using Clock = std::chrono::steady_clock;
  EvalCounter counter(options.budget);
  trace.records.clear();
  trace.records.reserve(static_cast<std::size_t>(options.budget));
  double best = std::numeric_limits<double>::infinity();
  double objective_s = 0.0;
  const auto start = Clock::now();
  auto seconds_since = [](Clock::time_point from, Clock::time_point to) {
    return std::chrono::duration<double>(to - from).count();
  };
  try {
    while (!counter.exhausted()) {
      std::vector<Vector> candidates = optimizer.ask(rng);
      std::vector<double> fitnesses;
      fitnesses.reserve(candidates.size());
      for (const Vector& x : candidates) {
        if (counter.exhausted()) break;
        const auto before = Clock::now();
        const double value = counted_evaluate(objective, space, counter, x);
        const auto after = Clock::now();
        objective_s += seconds_since(before, after);
        fitnesses.push_back(value);
        if (value < best) best = value;
        EvalRecord rec;
        rec.eval_index = counter.total();
        rec.value = value;
        rec.best_so_far = best;
        rec.batch_index = batch_of(rec.eval_index);
        if (options.timing) {
          rec.cum_time_s = seconds_since(start, after);
          rec.cum_objective_time_s = objective_s;
        }
        trace.records.push_back(rec);
      }
      if (fitnesses.size() == candidates.size()) optimizer.tell(candidates, fitnesses);
    }
  } catch (const BudgetExhausted&) {
  } catch (const NumericalFailure& e) {
    trace.failed = true;
    trace.failure = e.what();
  }
}

}  // namespace optbench
