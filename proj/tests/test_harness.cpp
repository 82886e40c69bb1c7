#include "optbench/harness.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <set>
#include <thread>

using namespace optbench;

namespace {

RunTrace synthetic(std::vector<double> values, std::vector<double> cum_times) {
  RunTrace t;
  t.algorithm = Algorithm::Es;
  t.function = FunctionId::Griewank;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    EvalRecord r;
    r.eval_index = static_cast<long>(i) + 1;
    r.batch_index = batch_of(r.eval_index);
    r.value = values[i];
    best = std::min(best, values[i]);
    r.best_so_far = best;
    r.cum_time_s = cum_times[i];
    t.records.push_back(r);
  }
  return t;
}

ExperimentPlan small_plan() {
  ExperimentPlan p;
  p.algorithms = {Algorithm::CmaEs};
  p.functions = {FunctionId::Rastrigin};
  p.runs = 1;
  p.budget = 10;
  p.dimension = 4;
  p.timing = false;
  return p;
}

}  // namespace

TEST(RunExperiment, SmallestGrid) {
  const ExperimentResult r = run_experiment(small_plan());
  ASSERT_EQ(r.traces.size(), 1u);
  EXPECT_EQ(r.traces[0].records.size(), 10u);
  EXPECT_EQ(r.traces[0].seed, 42);
}

TEST(RunExperiment, FullGridCountsAndSeeds) {
  ExperimentPlan p;
  p.budget = 20;
  p.bo_budget = 10;
  p.dimension = 3;
  p.timing = false;
  const ExperimentResult r = run_experiment(p);
  ASSERT_EQ(r.traces.size(), 120u);
  ASSERT_EQ(r.traces.size(), p.size());
  std::map<std::pair<int, int>, std::set<long>> seeds;
  for (const RunTrace& t : r.traces) {
    EXPECT_FALSE(t.failed);
    EXPECT_EQ(t.records.size(), t.algorithm == Algorithm::BO ? 10u : 20u);
    seeds[{static_cast<int>(t.function), static_cast<int>(t.algorithm)}].insert(t.seed);
  }
  EXPECT_EQ(seeds.size(), 12u);
  for (const auto& [cell, s] : seeds) EXPECT_EQ(s.size(), 10u);
  EXPECT_TRUE(std::is_sorted(r.traces.begin(), r.traces.end(), trace_order));
}

TEST(RunExperiment, DeterministicValuesAcrossExecutionModes) {
  ExperimentPlan p;
  p.algorithms = {Algorithm::BO, Algorithm::Pso, Algorithm::Es, Algorithm::CmaEs};
  p.functions = {FunctionId::Schwefel, FunctionId::Griewank};
  p.runs = 3;
  p.budget = 30;
  p.bo_budget = 20;
  p.dimension = 3;
  p.timing = false;
  const ExperimentResult a = run_experiment(p);
  p.jobs = 4;
  const ExperimentResult b = run_experiment(p);
  p.timing = true;
  p.jobs = 1;
  const ExperimentResult c = run_experiment(p);
  ASSERT_EQ(a.traces.size(), b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    ASSERT_EQ(a.traces[i].records.size(), b.traces[i].records.size());
    for (std::size_t k = 0; k < a.traces[i].records.size(); ++k) {
      EXPECT_EQ(a.traces[i].records[k].value, b.traces[i].records[k].value);
      EXPECT_EQ(a.traces[i].records[k].value, c.traces[i].records[k].value);
      EXPECT_EQ(a.traces[i].records[k].cum_time_s, 0.0);
    }
  }
}

TEST(RunExperiment, TimingModeRunsOneAtATime) {
  ExperimentPlan p = small_plan();
  p.runs = 4;
  p.timing = true;
  p.jobs = 8;
  EXPECT_EQ(run_experiment(p).max_concurrent_runs, 1);
}

TEST(RunExperiment, RejectsBudgetsOffTheBatchGrid) {
  ExperimentPlan p = small_plan();
  p.budget = 15;
  EXPECT_THROW(run_experiment(p), InvalidInput);
}

TEST(RunSingle, FailedRunKeepsPartialTrace) {
  const SearchSpace space = SearchSpace::uniform(2, -1, 1);
  auto nan_objective = [](const Vector&) { return std::numeric_limits<double>::quiet_NaN(); };
  const RunTrace t = run_single(Algorithm::BO, FunctionId::Griewank, nan_objective, space, 30, 1, false);
  EXPECT_TRUE(t.failed);
  EXPECT_FALSE(t.failure.empty());
  EXPECT_EQ(t.records.size(), 10u);
}

TEST(RunSingle, BestSoFarIsPrefixMinimum) {
  for (Algorithm a : kAllAlgorithms) {
    const RunTrace t = run_single(a, make_objective(FunctionId::Schwefel, 4), a == Algorithm::BO ? 30 : 200, 5, false);
    double m = std::numeric_limits<double>::infinity();
    for (const EvalRecord& r : t.records) {
      m = std::min(m, r.value);
      EXPECT_EQ(r.best_so_far, m);
      EXPECT_EQ(r.batch_index, (r.eval_index + 9) / 10);
    }
  }
}

TEST(MeasureBatchTime, PartitionsTheRun) {
  const RunTrace t = run_single(Algorithm::Pso, make_objective(FunctionId::Rastrigin, 10), 200, 3, true);
  const auto bt = measure_batch_time(t);
  ASSERT_EQ(bt.size(), 20u);
  double sum = 0.0;
  for (std::size_t b = 0; b < bt.size(); ++b) {
    EXPECT_GE(bt[b], 0.0);
    sum += bt[b];
    EXPECT_NEAR(t.records[(b + 1) * 10 - 1].cum_time_s, sum, 1e-9);
  }
  EXPECT_NEAR(sum, t.total_time_s(), 1e-6);
  for (const EvalRecord& r : t.records) EXPECT_LE(r.cum_objective_time_s, r.cum_time_s);
}

TEST(MeasureBatchTime, SleepingObjectiveShowsInObjectiveChannel) {
  const SearchSpace space = SearchSpace::uniform(2, -1, 1);
  auto sleepy = [](const Vector& x) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    return x.squaredNorm();
  };
  const RunTrace t = run_single(Algorithm::Es, FunctionId::Griewank, sleepy, space, 30, 1, true);
  double prev = 0.0;
  for (long b = 1; b <= 3; ++b) {
    const EvalRecord& last = t.records[static_cast<std::size_t>(b * 10 - 1)];
    const double batch_objective = last.cum_objective_time_s - prev;
    prev = last.cum_objective_time_s;
    EXPECT_GE(batch_objective, 0.010);
    EXPECT_LE(batch_objective, 0.050);
  }
}

TEST(Aggregate, IdenticalTracesHaveZeroWidth) {
  std::vector<double> v(20), tm(20);
  for (int i = 0; i < 20; ++i) {
    v[static_cast<std::size_t>(i)] = 30.0 - i;
    tm[static_cast<std::size_t>(i)] = 0.5 * (i + 1);
  }
  const RunTrace t = synthetic(v, tm);
  const AggregateSeries s = aggregate({t, t, t});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.eval_index, (std::vector<long>{10, 20}));
  EXPECT_EQ(s.mean_quality[0], 21.0);
  EXPECT_EQ(s.mean_quality[1], 11.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s.quality_ci_half_width[i], 0.0);
    EXPECT_EQ(s.time_ci_half_width[i], 0.0);
  }
  EXPECT_EQ(s.mean_cum_time_s[1], 10.0);
}

TEST(Aggregate, HandComputedConfidenceInterval) {
  std::vector<RunTrace> ts;
  for (double c : {1.0, 2.0, 3.0}) ts.push_back(synthetic(std::vector<double>(10, 1.0), std::vector<double>(10, c)));
  const AggregateSeries s = aggregate(ts);
  EXPECT_DOUBLE_EQ(s.mean_cum_time_s[0], 2.0);
  // sample stddev 1, standard error 1/sqrt(3) = 0.57735
  EXPECT_NEAR(s.time_ci_half_width[0], 1.1316, 1e-4);
  EXPECT_NEAR(s.time_ci_half_width[0], 1.96 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(s.mean_log10_time[0], (0.0 + std::log10(2.0) + std::log10(3.0)) / 3.0, 1e-15);
}

TEST(Aggregate, LogChannelSpotCheck) {
  const RunTrace t = synthetic(std::vector<double>(10, 1.0), std::vector<double>(10, 100.0));
  const AggregateSeries s = aggregate({t, t});
  EXPECT_EQ(s.mean_log10_time[0], 2.0);
}

TEST(Aggregate, Preconditions) {
  const RunTrace t = synthetic(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0));
  EXPECT_THROW(aggregate({t}), InvalidInput);
  EXPECT_NO_THROW(aggregate({t}, true));
  const RunTrace shorter = synthetic(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0));
  EXPECT_THROW(aggregate({t, shorter}), InvalidInput);
}

TEST(Aggregate, BatchTimeChannels) {
  std::vector<double> tm(20);
  for (int i = 0; i < 20; ++i) tm[static_cast<std::size_t>(i)] = i < 10 ? 0.1 * (i + 1) : 1.0 + 0.3 * (i - 9);
  const RunTrace t = synthetic(std::vector<double>(20, 1.0), tm);
  const AggregateSeries s = aggregate({t, t});
  EXPECT_NEAR(s.mean_batch_time_s[0], 1.0, 1e-12);
  EXPECT_NEAR(s.median_batch_time_s[1], 3.0, 1e-12);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), InvalidInput);
}
