// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "optbench/cli.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

using namespace optbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

std::vector<oracle::Real> to_real(const Vector& x) { return {x.begin(), x.end()}; }

oracle::Real oracle_eval(FunctionId id, const std::vector<oracle::Real>& x) {
  switch (id) {
    case FunctionId::Schwefel: return oracle::schwefel(x);
    case FunctionId::Griewank: return oracle::griewank(x);
    case FunctionId::Rastrigin: return oracle::rastrigin(x);
  }
  return 0;
}

Outcome functions_match_oracle() {
  std::mt19937_64 gen(20240601);
  double worst_opt = 0.0, worst_rel = 0.0;
  for (int d : {1, 2, 10}) {
    for (FunctionId id : kAllFunctions) {
      const ObjectiveSpec spec = make_objective(id, d);
      worst_opt = std::max(worst_opt, std::abs(spec(spec.optimum_location)));
      for (int i = 0; i < 100; ++i) {
        Vector x(d);
        for (int j = 0; j < d; ++j)
          x[j] = std::uniform_real_distribution<double>(spec.space.lower()[j], spec.space.upper()[j])(gen);
        const oracle::Real ref = oracle_eval(id, to_real(x));
        const double rel = static_cast<double>(std::fabs(spec(x) - ref) / std::max<oracle::Real>(1, std::fabs(ref)));
        worst_rel = std::max(worst_rel, rel);
      }
    }
  }
  return {worst_opt <= 1e-2 && worst_rel <= 1e-10,
          "max |f(x*)| " + fmt(worst_opt) + ", max relative oracle error " + fmt(worst_rel)};
}

Outcome gp_matches_dense_inverse() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_pred = 0.0, worst_interp = 0.0;
  for (int c = 0; c < 50; ++c) {
    const int n = 1 + c % 5;
    const int d = 1 + c % 3;
    Matrix x(n, d);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = u(gen);
      y[i] = 10.0 * u(gen) - 5.0;
    }
    gp::KernelParams params;
    params.signal_variance = 0.5 + 1.5 * u(gen);
    params.length_scales = Vector(d);
    for (int j = 0; j < d; ++j) params.length_scales[j] = 0.05 + 0.75 * u(gen);
    params.noise_variance = c % 2 == 0 ? 0.0 : 1e-6;
    const gp::Posterior post = gp::fit(x, y, params);
    std::vector<oracle::Real> ys(post.train_targets.begin(), post.train_targets.end());
    for (int q = 0; q < 5; ++q) {
      Vector xq(d);
      for (int j = 0; j < d; ++j) xq[j] = u(gen);
      const gp::Prediction got = gp::predict_standardized(post, xq);
      const oracle::GpPrediction ref =
          oracle::gp_predict(x, ys, params, static_cast<oracle::Real>(params.noise_variance + post.jitter), xq);
      worst_pred = std::max({worst_pred, static_cast<double>(std::fabs(got.mean - ref.mean)),
                             static_cast<double>(std::fabs(got.variance - ref.variance))});
    }
    if (params.noise_variance == 0.0) {
      for (int i = 0; i < n; ++i)
        worst_interp = std::max(worst_interp, std::abs(gp::predict(post, x.row(i).transpose()).mean - y[i]));
    }
  }
  return {worst_pred <= 1e-8 && worst_interp <= 1e-6,
          "max prediction gap " + fmt(worst_pred) + ", max interpolation error " + fmt(worst_interp)};
}

// Median final best per (algorithm, function) over seeds base..base+runs-1 at a given evaluation.
double median_best(const std::vector<RunTrace>& traces, Algorithm a, FunctionId f, long at) {
  std::vector<double> v;
  for (const RunTrace& t : traces)
    if (t.algorithm == a && t.function == f && !t.failed) v.push_back(t.best_at(at));
  return median(v);
}

Outcome bo_leads_early() {
  ExperimentPlan p;
  p.algorithms = {Algorithm::BO, Algorithm::Es};
  p.budget = 100;
  p.bo_budget = 100;
  p.timing = false;
  const auto traces = run_experiment(p).traces;
  int wins = 0;
  std::string detail;
  for (FunctionId f : kAllFunctions) {
    const double bo = median_best(traces, Algorithm::BO, f, 100), es = median_best(traces, Algorithm::Es, f, 100);
    wins += bo <= es;
    detail += std::string(to_string(f)) + " BO " + fmt(bo) + " vs EA " + fmt(es) + "; ";
  }
  return {wins >= 2, detail + std::to_string(wins) + "/3 functions"};
}

Outcome cma_converges() {
  ExperimentPlan p;
  p.algorithms = {Algorithm::CmaEs};
  p.timing = false;
  const auto traces = run_experiment(p).traces;
  bool ok = true;
  std::string detail;
  for (FunctionId f : kAllFunctions) {
    const double early = median_best(traces, Algorithm::CmaEs, f, 100);
    const double late = median_best(traces, Algorithm::CmaEs, f, 1500);
    ok = ok && late <= 0.1 * early;
    detail += std::string(to_string(f)) + " " + fmt(early) + " -> " + fmt(late) + " (ratio " + fmt(late / early) + "); ";
  }
  return {ok, detail};
}

// Last batch over the mean of the first three, on the per-batch median across runs.
double growth_ratio(const std::vector<RunTrace>& cell) {
  std::vector<std::vector<double>> per_run;
  for (const RunTrace& t : cell) per_run.push_back(measure_batch_time(t));
  const std::size_t batches = per_run.front().size();
  std::vector<double> med(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<double> v;
    for (const auto& r : per_run) v.push_back(r[b]);
    med[b] = median(v);
  }
  return med.back() / ((med[0] + med[1] + med[2]) / 3.0);
}

Outcome time_grows_for_bo_only() {
  ExperimentPlan bo;
  bo.algorithms = {Algorithm::BO};
  bo.functions = {FunctionId::Rastrigin};
  bo.runs = 1;
  const double bo_ratio = growth_ratio(run_experiment(bo).traces);
  bool ok = bo_ratio >= 5.0;
  std::string detail = "BO " + fmt(bo_ratio);
  ExperimentPlan ea = bo;
  ea.algorithms = {Algorithm::CmaEs, Algorithm::Es, Algorithm::Pso};
  ea.runs = 10;
  const auto traces = run_experiment(ea).traces;
  for (Algorithm a : ea.algorithms) {
    std::vector<RunTrace> cell;
    for (const RunTrace& t : traces)
      if (t.algorithm == a) cell.push_back(t);
    const double r = growth_ratio(cell);
    ok = ok && r <= 3.0;
    detail += ", " + std::string(display_name(a)) + " " + fmt(r);
  }
  return {ok, detail};
}

Outcome log_channel_identity() {
  ExperimentPlan p;
  p.algorithms = {Algorithm::Pso};
  p.functions = {FunctionId::Griewank};
  p.runs = 4;
  p.budget = 200;
  const auto traces = run_experiment(p).traces;
  const AggregateSeries s = aggregate(traces);
  double worst = 0.0;
  for (std::size_t b = 0; b < s.size(); ++b) {
    double sum = 0.0;
    for (const RunTrace& t : traces) sum += std::log10(t.records[(b + 1) * kBatchSize - 1].cum_time_s);
    worst = std::max(worst, std::abs(s.mean_log10_time[b] - sum / static_cast<double>(traces.size())));
  }
  RunTrace fixed;
  for (long i = 1; i <= 10; ++i) fixed.records.push_back(EvalRecord{i, 1.0, 1.0, 1, 100.0, 0.0});
  const double spot = aggregate({fixed, fixed}).mean_log10_time[0];
  return {worst <= 1e-12 && spot == 2.0, "max deviation " + fmt(worst) + ", 100 s maps to " + fmt(spot)};
}

Outcome deterministic_traces() {
  const fs::path base = fs::temp_directory_path() / "optbench_acceptance_determinism";
  fs::remove_all(base);
  cli::Config c;
  c.dim = 10;
  c.evaluations = 200;
  c.bo_evaluations = 40;
  c.runs = 3;
  c.timing_mode = false;
  c.jobs = 2;
  std::ostringstream sink;
  std::string text[2];
  for (int i = 0; i < 2; ++i) {
    c.out_dir = base / std::to_string(i);
    if (cli::cmd_run(c, sink, sink) != 0) return {false, "run failed: " + sink.str()};
    std::ifstream f(c.out_dir / "traces.csv", std::ios::binary);
    text[i].assign(std::istreambuf_iterator<char>(f), {});
  }
  return {!text[0].empty() && text[0] == text[1], std::to_string(text[0].size()) + " bytes compared"};
}

Outcome invariants_hold() {
  std::string broken;
  for (long seed : {1L, 2L, 3L}) {
    ExperimentPlan p;
    p.budget = 300;
    p.bo_budget = 40;
    p.runs = 2;
    p.base_seed = seed;
    p.timing = false;
    for (const RunTrace& t : run_experiment(p).traces) {
      double m = INFINITY;
      for (const EvalRecord& r : t.records) {
        m = std::min(m, r.value);
        if (r.best_so_far != m || t.failed) broken += "best-so-far;";
      }
    }
    const ObjectiveSpec ras = make_objective(FunctionId::Rastrigin, 10);
    evo::CmaEsOptimizer cma(ras.space);
    Rng rng(static_cast<std::uint64_t>(seed));
    for (int g = 0; g < 500; ++g) {
      auto xs = cma.ask(rng);
      std::vector<double> f;
      for (const auto& x : xs) f.push_back(ras(x));
      cma.tell(xs, f);
      const Matrix& cov = cma.state().covariance;
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 || Eigen::LLT<Matrix>(cov).info() != Eigen::Success) {
        broken += "cma-spd;";
        break;
      }
    }
    const ObjectiveSpec gri = make_objective(FunctionId::Griewank, 10);
    evo::PsoOptimizer pso(gri.space);
    double prev = INFINITY;
    for (int g = 0; g < 150; ++g) {
      auto xs = pso.ask(rng);
      std::vector<double> f;
      for (const auto& x : xs) f.push_back(gri(x));
      pso.tell(xs, f);
      const evo::SwarmState& st = pso.state();
      if (st.global_best_val > prev || st.global_best_val != st.personal_best_val.minCoeff()) broken += "pso;";
      prev = st.global_best_val;
    }
  }
  return {broken.empty(), broken.empty() ? "3 base seeds" : broken};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"function correctness", functions_match_oracle},
      {"GP oracle equivalence", gp_matches_dense_inverse},
      {"early-quality trend", bo_leads_early},
      {"late-quality convergence", cma_converges},
      {"time-growth trend", time_grows_for_bo_only},
      {"log-channel identity", log_channel_identity},
      {"determinism", deterministic_traces},
      {"invariant suites", invariants_hold},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << criteria[i].first << " [" << fmt(secs)
              << " s]: " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
