#pragma once

// Command-line front end: configuration (file + flags), and the run, plot and
// list commands. Commands write to caller-supplied streams so they can be
// driven from tests.

#include "optbench/harness.hpp"
#include "optbench/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace optbench::cli {

struct Config {
  std::vector<FunctionId> functions{kAllFunctions.begin(), kAllFunctions.end()};
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  int dim = 10;
  long evaluations = 1500;
  long bo_evaluations = 300;
  int runs = 10;
  long base_seed = 42;
  bool timing_mode = true;
  int jobs = 1;
  std::filesystem::path out_dir;

  void validate() const {
    if (functions.empty()) throw UsageError("no functions selected");
    if (algorithms.empty()) throw UsageError("no algorithms selected");
    if (dim < 1) throw UsageError("dim must be positive");
    if (evaluations < 1 || evaluations % kBatchSize != 0)
      throw UsageError("evaluations must be a positive multiple of 10");
    if (bo_evaluations < 1 || bo_evaluations % kBatchSize != 0)
      throw UsageError("bo_evaluations must be a positive multiple of 10");
    if (runs < 1) throw UsageError("runs must be positive");
    if (jobs < 1) throw UsageError("jobs must be positive");
  }

  ExperimentPlan plan() const {
    ExperimentPlan p;
    p.algorithms = algorithms;
    p.functions = functions;
    p.dimension = dim;
    p.runs = runs;
    p.base_seed = base_seed;
    p.budget = evaluations;
    p.bo_budget = bo_evaluations;
    p.timing = timing_mode;
    p.jobs = jobs;
    return p;
  }
};

inline std::string valid_functions() {
  std::string s;
  for (FunctionId f : kAllFunctions) s += (s.empty() ? "" : ", ") + std::string(to_string(f));
  return s;
}

inline std::string valid_algorithms() {
  std::string s;
  for (Algorithm a : kAllAlgorithms) s += (s.empty() ? "" : ", ") + std::string(to_string(a));
  return s;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<FunctionId> parse_function_list(const std::vector<std::string>& names) {
  std::vector<FunctionId> out;
  for (const auto& n : names) {
    const auto f = parse_function(n);
    if (!f) throw UsageError("unknown function '" + n + "'; valid names: " + valid_functions());
    if (std::find(out.begin(), out.end(), *f) == out.end()) out.push_back(*f);
  }
  return out;
}

inline std::vector<Algorithm> parse_algorithm_list(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& n : names) {
    const auto a = parse_algorithm(n);
    if (!a) throw UsageError("unknown algorithm '" + n + "'; valid names: " + valid_algorithms());
    if (std::find(out.begin(), out.end(), *a) == out.end()) out.push_back(*a);
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

template <class T>
T parse_int(const std::string& v, const std::string& where) {
  T out{};
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) throw UsageError(where + ": expected an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw UsageError(where + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail

/// Applies a flat `key = value` config text on top of `config`. Blank lines and
/// lines starting with '#' are ignored; list values are comma-separated.
inline void apply_config_text(Config& config, std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "functions") config.functions = parse_function_list(detail::split_list(value));
    else if (key == "algorithms") config.algorithms = parse_algorithm_list(detail::split_list(value));
    else if (key == "dim") config.dim = detail::parse_int<int>(value, where);
    else if (key == "evaluations") config.evaluations = detail::parse_int<long>(value, where);
    else if (key == "bo_evaluations") config.bo_evaluations = detail::parse_int<long>(value, where);
    else if (key == "runs") config.runs = detail::parse_int<int>(value, where);
    else if (key == "base_seed") config.base_seed = detail::parse_int<long>(value, where);
    else if (key == "timing_mode") config.timing_mode = detail::parse_bool(value, where);
    else if (key == "jobs") config.jobs = detail::parse_int<int>(value, where);
    else if (key == "out_dir") config.out_dir = value;
    else throw UsageError(where + ": unknown key '" + key + "'");
  }
}

inline void load_config_file(Config& config, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path.string());
  apply_config_text(config, f, path.string());
}

inline std::filesystem::path resolve_out_dir(const Config& config) {
  if (!config.out_dir.empty()) return config.out_dir;
  if (const char* env = std::getenv("OPTBENCH_OUT_DIR"); env && *env) return env;
  return "results";
}

// ---------------------------------------------------------------------------

namespace detail {

// Aggregatable traces of one cell: non-failed runs of the cell's full length.
inline std::vector<RunTrace> complete_runs(const std::vector<RunTrace>& cell) {
  std::size_t full = 0;
  for (const RunTrace& t : cell) full = std::max(full, t.records.size());
  std::vector<RunTrace> out;
  for (const RunTrace& t : cell)
    if (!t.failed && t.records.size() == full && full > 0) out.push_back(t);
  return out;
}

inline std::vector<std::vector<RunTrace>> cells_of(const std::vector<RunTrace>& traces) {
  std::vector<RunTrace> sorted = traces;
  std::stable_sort(sorted.begin(), sorted.end(), trace_order);
  std::vector<std::vector<RunTrace>> groups;
  for (RunTrace& t : sorted) {
    if (groups.empty() || groups.back().front().algorithm != t.algorithm ||
        groups.back().front().function != t.function)
      groups.emplace_back();
    groups.back().push_back(std::move(t));
  }
  return groups;
}

inline bool time_channel_recorded(const std::vector<AggregateSeries>& series, FunctionId f) {
  for (const AggregateSeries& s : series)
    if (s.function == f)
      for (double t : s.mean_cum_time_s)
        if (t > 0.0) return true;
  return false;
}

}  // namespace detail

struct ReportOutput {
  std::vector<AggregateSeries> aggregates;
  std::vector<std::string> warnings;
};

/// Aggregates every cell and writes aggregates.csv, metadata.json and the SVG
/// triplet per function. Output is a pure function of `traces`.
inline ReportOutput write_reports(const std::vector<RunTrace>& traces, const std::filesystem::path& out_dir,
                                  const nlohmann::json& extra_metadata = {}) {
  ReportOutput out;
  nlohmann::json single_run = nlohmann::json::array();
  std::vector<FunctionId> functions;
  for (const auto& cell : detail::cells_of(traces)) {
    const auto usable = detail::complete_runs(cell);
    const std::string name =
        std::string(to_string(cell.front().function)) + "/" + std::string(to_string(cell.front().algorithm));
    if (usable.empty()) {
      out.warnings.push_back(name + ": no complete runs, nothing to plot");
      continue;
    }
    if (usable.size() == 1) {
      out.warnings.push_back(name + ": single run, plotted without confidence band");
      single_run.push_back(name);
    }
    out.aggregates.push_back(aggregate(usable, true));
    if (std::find(functions.begin(), functions.end(), cell.front().function) == functions.end())
      functions.push_back(cell.front().function);
  }
  std::filesystem::create_directories(out_dir);
  report::write_text(out_dir / "aggregates.csv", report::aggregates_to_csv(out.aggregates));

  for (FunctionId f : functions) {
    const std::string base(to_string(f));
    report::render_plot(report::make_plot_spec(report::PlotKind::Quality, f, out.aggregates),
                        out_dir / (base + "_quality.svg"));
    if (!detail::time_channel_recorded(out.aggregates, f)) {
      out.warnings.push_back(base + ": timing disabled, time plots skipped");
      continue;
    }
    report::render_plot(report::make_plot_spec(report::PlotKind::Time, f, out.aggregates),
                        out_dir / (base + "_time.svg"));
    report::render_plot(report::make_plot_spec(report::PlotKind::LogTime, f, out.aggregates),
                        out_dir / (base + "_logtime.svg"));
  }

  nlohmann::json meta = extra_metadata.is_object() ? extra_metadata : nlohmann::json::object();
  meta["batch_size"] = kBatchSize;
  meta["confidence_band"] = kCiDescription;
  meta["quality_channel"] = "best-so-far objective value at the last evaluation of each batch";
  meta["time_channel"] = "cumulative wall-clock seconds including objective evaluation";
  meta["log_time_channel"] = "mean over runs of log10(cumulative seconds)";
  meta["single_run_cells"] = single_run;
  meta["warnings"] = out.warnings;
  report::write_text(out_dir / "metadata.json", meta.dump(2) + "\n");
  return out;
}

inline nlohmann::json config_json(const Config& c) {
  nlohmann::json j;
  for (FunctionId f : c.functions) j["functions"].push_back(std::string(to_string(f)));
  for (Algorithm a : c.algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  j["dim"] = c.dim;
  j["evaluations"] = c.evaluations;
  j["bo_evaluations"] = c.bo_evaluations;
  j["runs"] = c.runs;
  j["base_seed"] = c.base_seed;
  j["timing_mode"] = c.timing_mode;
  return j;
}

inline int cmd_run(const Config& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    const std::filesystem::path dir = resolve_out_dir(config);
    const ExperimentResult result = run_experiment(config.plan());
    std::filesystem::create_directories(dir);
    report::write_csv(result.traces, dir / "traces.csv");
    nlohmann::json meta;
    meta["config"] = config_json(config);
    const ReportOutput rep = write_reports(result.traces, dir, meta);
    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';

    bool any_cell_dead = false;
    for (const auto& cell : detail::cells_of(result.traces)) {
      std::vector<double> finals, times;
      for (const RunTrace& t : cell) {
        if (t.failed) {
          err << "run failed: " << to_string(t.function) << '/' << to_string(t.algorithm) << " run " << t.run_id
              << ": " << t.failure << '\n';
          continue;
        }
        finals.push_back(t.final_best());
        times.push_back(t.total_time_s());
      }
      if (finals.empty()) {
        any_cell_dead = true;
        out << to_string(cell.front().function) << ' ' << to_string(cell.front().algorithm) << ": all "
            << cell.size() << " runs failed\n";
        continue;
      }
      const double total_time = std::accumulate(times.begin(), times.end(), 0.0);
      out << std::left << std::setw(10) << to_string(cell.front().function) << ' ' << std::setw(6)
          << to_string(cell.front().algorithm) << " evals=" << cell.front().records.size()
          << " median_best=" << report::format_double(median(finals)) << " total_time_s="
          << report::format_double(total_time) << " runs=" << finals.size() << '/' << cell.size() << '\n';
    }
    out << "wrote " << result.traces.size() << " traces to " << (dir / "traces.csv").string() << '\n';
    return any_cell_dead ? 1 : 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_plot(const Config& config, const std::filesystem::path& traces_path, std::ostream& out,
                    std::ostream& err) {
  try {
    if (!std::filesystem::exists(traces_path)) throw FileError("traces file not found: " + traces_path.string());
    const auto traces = report::read_csv(traces_path);
    const std::filesystem::path dir = resolve_out_dir(config);
    const ReportOutput rep = write_reports(traces, dir);
    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
    out << "plotted " << rep.aggregates.size() << " series from " << traces.size() << " traces into " << dir.string()
        << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_list(std::ostream& out) {
  out << "functions:\n";
  for (FunctionId f : kAllFunctions) {
    const DomainInfo info = domain_info(f);
    out << "  " << std::left << std::setw(10) << to_string(f) << " domain [" << info.lower << ", " << info.upper
        << "]  minimum f(x*) = 0 at x* = (" << info.optimum_coordinate << ", ..., " << info.optimum_coordinate
        << ")\n";
  }
  const AlgorithmSettings d;
  out << "algorithms:\n";
  out << "  bo     Bayesian optimization, Matern-5/2 GP, UCB beta=" << d.bo.ucb_beta
      << " initial_design=" << d.bo.initial_design_size << " acq_restarts=" << d.bo.acq_restarts
      << " acq_local_steps=" << d.bo.acq_local_steps << " refit_every=" << d.bo.refit_every << '\n';
  out << "  cmaes  CMA-ES, lambda=4+floor(3 ln d) (10 at d=10) mu=lambda/2 sigma0=" << d.cma.sigma_fraction
      << "*domain width\n";
  out << "  es     (mu+lambda) evolution strategy, mu=" << d.es.mu << " lambda=" << d.es.lambda
      << " sigma=" << d.es.sigma_fraction << "*half-width decay=" << d.es.sigma_decay << '\n';
  out << "  pso    global-best PSO, swarm=" << d.pso.swarm_size << " w=" << d.pso.inertia << " c1=" << d.pso.cognitive
      << " c2=" << d.pso.social << " vmax=" << d.pso.velocity_clamp_fraction << "*domain width\n";
  return 0;
}

// ---------------------------------------------------------------------------

enum class Command { None, Run, Plot, List };

struct Invocation {
  Command command = Command::None;
  Config config;
  std::filesystem::path traces_path;
  std::optional<int> exit_code;  // set when parsing already decided the outcome (help, usage error)
};

/// Parses argv. Config-file values are applied first; flags given on the
/// command line override them.
inline Invocation parse_args(int argc, const char* const* argv, std::ostream& out = std::cout,
                             std::ostream& err = std::cerr) {
  CLI::App app{"Benchmark Bayesian optimization and evolutionary algorithms on scalable test functions", "optbench"};
  app.require_subcommand(1);

  std::vector<std::string> functions, algorithms;
  int dim = 0, runs = 0, jobs = 0;
  long evals = 0, bo_evals = 0, seed = 0;
  bool timing = true;
  std::string out_dir, config_file, traces;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "Flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (fallback: $OPTBENCH_OUT_DIR, then ./results)");
  };

  CLI::App* run = app.add_subcommand("run", "Run the experiment grid and write traces, aggregates and plots");
  add_common(run);
  auto* o_fn = run->add_option("--function", functions, "Function name (repeatable): " + valid_functions());
  auto* o_alg = run->add_option("--algorithm", algorithms, "Algorithm name (repeatable): " + valid_algorithms());
  auto* o_dim = run->add_option("--dim", dim, "Problem dimension (default 10)");
  auto* o_evals = run->add_option("--evals", evals, "Evaluations per run (default 1500)");
  auto* o_bo = run->add_option("--bo-evals", bo_evals, "Evaluations per BO run (default 300)");
  auto* o_runs = run->add_option("--runs", runs, "Independent runs per cell (default 10)");
  auto* o_seed = run->add_option("--seed", seed, "Base seed; run i uses seed + i (default 42)");
  auto* o_timing = run->add_flag("--timing,!--no-timing", timing, "Sequential timed execution (default on)");
  auto* o_jobs = run->add_option("--jobs", jobs, "Worker threads when timing is off");

  CLI::App* plot = app.add_subcommand("plot", "Regenerate aggregates and plots from a traces CSV");
  add_common(plot);
  plot->add_option("--traces", traces, "Traces CSV written by run")->required();

  CLI::App* list = app.add_subcommand("list", "List functions and algorithms");

  Invocation inv;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    inv.exit_code = app.exit(e, out, err);
    if (*inv.exit_code != 0) inv.exit_code = 2;
    return inv;
  }

  Config& c = inv.config;
  c.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (!config_file.empty()) load_config_file(c, config_file);
  if (!out_dir.empty()) c.out_dir = out_dir;
  if (run->parsed()) {
    inv.command = Command::Run;
    if (o_fn->count()) c.functions = parse_function_list(functions);
    if (o_alg->count()) c.algorithms = parse_algorithm_list(algorithms);
    if (o_dim->count()) c.dim = dim;
    if (o_evals->count()) c.evaluations = evals;
    if (o_bo->count()) c.bo_evaluations = bo_evals;
    if (o_runs->count()) c.runs = runs;
    if (o_seed->count()) c.base_seed = seed;
    if (o_timing->count()) c.timing_mode = timing;
    if (o_jobs->count()) c.jobs = jobs;
  } else if (plot->parsed()) {
    inv.command = Command::Plot;
    inv.traces_path = traces;
  } else if (list->parsed()) {
    inv.command = Command::List;
  }
  return inv;
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Invocation inv;
  try {
    inv = parse_args(argc, argv, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  if (inv.exit_code) return *inv.exit_code;
  switch (inv.command) {
    case Command::Run: return cmd_run(inv.config, out, err);
    case Command::Plot: return cmd_plot(inv.config, inv.traces_path, out, err);
    case Command::List: return cmd_list(out);
    case Command::None: break;
  }
  return 2;
}

}  // namespace optbench::cli
