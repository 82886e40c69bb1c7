#pragma once

// CSV serialization of traces and aggregates, and standalone SVG line charts
// with confidence bands.

#include "optbench/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace optbench::report {

inline constexpr std::string_view kTraceHeader =
    "function,algorithm,run_id,eval_index,batch_index,value,best_value,batch_time_s,cum_time_s,objective_time_s";

inline constexpr std::string_view kAggregateHeader =
    "function,algorithm,runs,batch_index,eval_index,mean_best,best_ci95,mean_cum_time_s,cum_time_ci95,"
    "mean_log10_time,log10_time_ci95,mean_batch_time_s,median_batch_time_s";

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InvalidInput("cannot format number");
  return {buf, end};
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits one CSV line; quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

inline std::string traces_to_csv(const std::vector<RunTrace>& traces) {
  std::vector<const RunTrace*> order;
  for (const RunTrace& t : traces) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const RunTrace* a, const RunTrace* b) { return trace_order(*a, *b); });
  std::string out(kTraceHeader);
  out += '\n';
  for (const RunTrace* t : order) {
    const std::string prefix = csv_field(to_string(t->function)) + ',' + csv_field(to_string(t->algorithm)) + ',' +
                               std::to_string(t->run_id) + ',';
    for (std::size_t i = 0; i < t->records.size(); ++i) {
      const EvalRecord& r = t->records[i];
      out += prefix;
      out += std::to_string(r.eval_index) + ',' + std::to_string(r.batch_index) + ',' + format_double(r.value) + ',' +
             format_double(r.best_so_far) + ',' + format_double(batch_time_at(*t, i)) + ',' +
             format_double(r.cum_time_s) + ',' + format_double(r.cum_objective_time_s) + '\n';
    }
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f.flush()) throw FileError("write failed for " + path.string());
}

/// One row per evaluation, ordered by (function, algorithm, run_id, eval_index).
inline void write_csv(const std::vector<RunTrace>& traces, const std::filesystem::path& path) {
  write_text(path, traces_to_csv(traces));
}

namespace detail {

template <class T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw FileError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Parses a traces CSV back into runs, in file order.
inline std::vector<RunTrace> parse_traces_csv(std::istream& in, const std::string& source) {
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw FileError(source + ":1: missing or unexpected header");
  std::vector<RunTrace> traces;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw FileError(where + ": expected 10 fields, got " + std::to_string(f.size()));
    const auto fn = parse_function(f[0]);
    const auto alg = parse_algorithm(f[1]);
    if (!fn) throw FileError(where + ": unknown function '" + f[0] + "'");
    if (!alg) throw FileError(where + ": unknown algorithm '" + f[1] + "'");
    const int run_id = detail::parse_number<int>(f[2], where);
    EvalRecord r;
    r.eval_index = detail::parse_number<long>(f[3], where);
    r.batch_index = detail::parse_number<long>(f[4], where);
    r.value = detail::parse_number<double>(f[5], where);
    r.best_so_far = detail::parse_number<double>(f[6], where);
    r.cum_time_s = detail::parse_number<double>(f[8], where);
    r.cum_objective_time_s = detail::parse_number<double>(f[9], where);
    if (traces.empty() || traces.back().function != *fn || traces.back().algorithm != *alg ||
        traces.back().run_id != run_id) {
      RunTrace t;
      t.function = *fn;
      t.algorithm = *alg;
      t.run_id = run_id;
      traces.push_back(std::move(t));
    }
    RunTrace& t = traces.back();
    if (r.eval_index != static_cast<long>(t.records.size()) + 1 || r.batch_index != batch_of(r.eval_index))
      throw FileError(where + ": evaluation indices are not contiguous");
    t.records.push_back(r);
  }
  return traces;
}

inline std::vector<RunTrace> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot open traces file " + path.string());
  return parse_traces_csv(f, path.string());
}

inline std::string aggregates_to_csv(const std::vector<AggregateSeries>& series) {
  std::string out(kAggregateHeader);
  out += '\n';
  for (const AggregateSeries& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += csv_field(to_string(s.function)) + ',' + csv_field(to_string(s.algorithm)) + ',' + std::to_string(s.runs) +
             ',' + std::to_string(s.batch_index[i]) + ',' + std::to_string(s.eval_index[i]) + ',' +
             format_double(s.mean_quality[i]) + ',' + format_double(s.quality_ci_half_width[i]) + ',' +
             format_double(s.mean_cum_time_s[i]) + ',' + format_double(s.time_ci_half_width[i]) + ',' +
             format_double(s.mean_log10_time[i]) + ',' + format_double(s.log10_time_ci_half_width[i]) + ',' +
             format_double(s.mean_batch_time_s[i]) + ',' + format_double(s.median_batch_time_s[i]) + '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG charts

enum class PlotKind { Quality, Time, LogTime };

inline std::string_view to_string(PlotKind k) {
  switch (k) {
    case PlotKind::Quality: return "quality";
    case PlotKind::Time: return "time";
    case PlotKind::LogTime: return "logtime";
  }
  return "unknown";
}

inline std::string_view palette(Algorithm a) {
  switch (a) {
    case Algorithm::BO: return "#1f77b4";
    case Algorithm::CmaEs: return "#d62728";
    case Algorithm::Es: return "#2ca02c";
    case Algorithm::Pso: return "#9467bd";
  }
  return "#000000";
}

struct PlotSeries {
  std::string label;
  std::string color;
  double band_opacity = 0.2;
  bool show_band = true;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> half_width;
};

struct PlotSpec {
  PlotKind kind = PlotKind::Quality;
  std::string title;
  std::string x_label = "Function evaluations";
  std::string y_label;
  std::string description;
  std::vector<PlotSeries> series;
};

inline PlotSpec make_plot_spec(PlotKind kind, FunctionId function, const std::vector<AggregateSeries>& aggregates) {
  PlotSpec spec;
  spec.kind = kind;
  std::string name(to_string(function));
  if (!name.empty()) name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  switch (kind) {
    case PlotKind::Quality:
      spec.title = name + ": best objective value";
      spec.y_label = "Best objective value";
      break;
    case PlotKind::Time:
      spec.title = name + ": computation time";
      spec.y_label = "Time (s)";
      break;
    case PlotKind::LogTime:
      spec.title = name + ": log10 computation time";
      spec.y_label = "log10(Time (s))";
      break;
  }
  spec.description = std::string("Solid lines: mean over runs. Bands: ") + kCiDescription + ".";
  for (const AggregateSeries& a : aggregates) {
    if (a.function != function) continue;
    PlotSeries s;
    s.label = std::string(display_name(a.algorithm));
    s.color = std::string(palette(a.algorithm));
    s.show_band = a.runs >= 2;
    for (std::size_t i = 0; i < a.size(); ++i) {
      s.x.push_back(static_cast<double>(a.eval_index[i]));
      switch (kind) {
        case PlotKind::Quality:
          s.y.push_back(a.mean_quality[i]);
          s.half_width.push_back(a.quality_ci_half_width[i]);
          break;
        case PlotKind::Time:
          s.y.push_back(a.mean_cum_time_s[i]);
          s.half_width.push_back(a.time_ci_half_width[i]);
          break;
        case PlotKind::LogTime:
          s.y.push_back(a.mean_log10_time[i]);
          s.half_width.push_back(a.log10_time_ci_half_width[i]);
          break;
      }
    }
    spec.series.push_back(std::move(s));
  }
  return spec;
}

struct PlotFrame {
  double width = 800, height = 500;
  double left = 90, right = 650, top = 50, bottom = 430;
};

struct AxisRange {
  double lo, hi;
};

/// Data extent [min(y - hw), max(y + hw)] widened by 5% of its span on each side.
inline AxisRange y_range(const PlotSpec& spec) {
  double lo = INFINITY, hi = -INFINITY;
  for (const PlotSeries& s : spec.series)
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double hw = s.show_band ? s.half_width[i] : 0.0;
      lo = std::min(lo, s.y[i] - hw);
      hi = std::max(hi, s.y[i] + hw);
    }
  double pad = 0.05 * (hi - lo);
  if (pad == 0.0) pad = std::max(std::abs(hi) * 0.05, 1e-12);
  return {lo - pad, hi + pad};
}

inline AxisRange x_range(const PlotSpec& spec) {
  double lo = INFINITY, hi = -INFINITY;
  for (const PlotSeries& s : spec.series)
    for (double x : s.x) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  return {lo, hi};
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

inline void validate_plot(const PlotSpec& spec) {
  if (spec.series.empty()) throw PlotDataError("plot '" + spec.title + "' has no series");
  for (const PlotSeries& s : spec.series) {
    if (s.x.empty() || s.x.size() != s.y.size() || s.y.size() != s.half_width.size())
      throw PlotDataError("series '" + s.label + "' has mismatched or empty data");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || !std::isfinite(s.half_width[i]) || s.half_width[i] < 0)
        throw PlotDataError("series '" + s.label + "' has non-finite values in plot '" + spec.title + "'");
  }
}

inline std::string render_svg(const PlotSpec& spec, const PlotFrame& frame = {}) {
  validate_plot(spec);
  const AxisRange xr = x_range(spec);
  const AxisRange yr = y_range(spec);
  auto map_x = [&](double x) { return frame.left + (x - xr.lo) / (xr.hi - xr.lo) * (frame.right - frame.left); };
  auto map_y = [&](double y) { return frame.bottom - (y - yr.lo) / (yr.hi - yr.lo) * (frame.bottom - frame.top); };
  using detail::px;
  using detail::xml_escape;

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << frame.width << "\" height=\""
    << frame.height << "\" viewBox=\"0 0 " << frame.width << ' ' << frame.height << "\">\n";
  o << "<title>" << xml_escape(spec.title) << "</title>\n";
  o << "<desc>" << xml_escape(spec.description) << "</desc>\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << frame.width << "\" height=\"" << frame.height << "\" fill=\"#ffffff\"/>\n";
  o << "<g id=\"plot-area\" data-x-min=\"" << format_double(xr.lo) << "\" data-x-max=\"" << format_double(xr.hi)
    << "\" data-y-min=\"" << format_double(yr.lo) << "\" data-y-max=\"" << format_double(yr.hi) << "\" data-left=\""
    << frame.left << "\" data-right=\"" << frame.right << "\" data-top=\"" << frame.top << "\" data-bottom=\""
    << frame.bottom << "\">\n";

  // axes and ticks
  o << "<line x1=\"" << frame.left << "\" y1=\"" << frame.bottom << "\" x2=\"" << frame.right << "\" y2=\""
    << frame.bottom << "\" stroke=\"#000000\"/>\n";
  o << "<line x1=\"" << frame.left << "\" y1=\"" << frame.top << "\" x2=\"" << frame.left << "\" y2=\"" << frame.bottom
    << "\" stroke=\"#000000\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    const double tx = map_x(xv), ty = map_y(yv);
    o << "<line class=\"tick\" x1=\"" << px(tx) << "\" y1=\"" << frame.bottom << "\" x2=\"" << px(tx) << "\" y2=\""
      << frame.bottom + 5 << "\" stroke=\"#000000\"/>\n";
    o << "<text x=\"" << px(tx) << "\" y=\"" << frame.bottom + 20
      << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" << detail::tick_label(xv)
      << "</text>\n";
    o << "<line class=\"tick\" x1=\"" << frame.left - 5 << "\" y1=\"" << px(ty) << "\" x2=\"" << frame.left
      << "\" y2=\"" << px(ty) << "\" stroke=\"#000000\"/>\n";
    o << "<text x=\"" << frame.left - 8 << "\" y=\"" << px(ty + 4)
      << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << detail::tick_label(yv) << "</text>\n";
  }
  o << "<text x=\"" << (frame.left + frame.right) / 2 << "\" y=\"" << frame.height - 25
    << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">" << xml_escape(spec.x_label)
    << "</text>\n";
  o << "<text x=\"20\" y=\"" << (frame.top + frame.bottom) / 2 << "\" font-size=\"14\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" transform=\"rotate(-90 20 " << (frame.top + frame.bottom) / 2 << ")\">"
    << xml_escape(spec.y_label) << "</text>\n";
  o << "<text x=\"" << frame.width / 2 << "\" y=\"30\" font-size=\"16\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\">" << xml_escape(spec.title) << "</text>\n";

  for (const PlotSeries& s : spec.series) {
    if (s.show_band) {
      o << "<polygon class=\"band\" data-series=\"" << xml_escape(s.label) << "\" fill=\"" << s.color
        << "\" fill-opacity=\"" << s.band_opacity << "\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        o << px(map_x(s.x[i])) << ',' << px(map_y(s.y[i] + s.half_width[i])) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;)
        o << px(map_x(s.x[i])) << ',' << px(map_y(s.y[i] - s.half_width[i])) << (i ? " " : "");
      o << "\"/>\n";
    }
  }
  for (const PlotSeries& s : spec.series) {
    o << "<polyline class=\"mean\" data-series=\"" << xml_escape(s.label) << "\" fill=\"none\" stroke=\"" << s.color
      << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      o << px(map_x(s.x[i])) << ',' << px(map_y(s.y[i])) << (i + 1 < s.x.size() ? " " : "");
    o << "\"/>\n";
  }

  // legend
  double ly = frame.top + 10;
  for (const PlotSeries& s : spec.series) {
    o << "<rect x=\"" << frame.right + 20 << "\" y=\"" << ly - 8 << "\" width=\"20\" height=\"10\" fill=\"" << s.color
      << "\"/>\n";
    o << "<text x=\"" << frame.right + 48 << "\" y=\"" << ly + 2 << "\" font-size=\"13\" font-family=\"sans-serif\">"
      << xml_escape(s.label) << "</text>\n";
    ly += 22;
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

inline void render_plot(const PlotSpec& spec, const std::filesystem::path& path) {
  write_text(path, render_svg(spec));
}

}  // namespace optbench::report
