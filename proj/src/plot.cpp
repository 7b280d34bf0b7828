#include "gma/plot.hpp"

#include "gma/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gma {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginBottom = 50;
constexpr int kMarginTop = 30;
constexpr int kMarginRight = 20;

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759",
                          "#b07aa1", "#76b7b2", "#edc948"};

struct Canvas {
  std::ostringstream body;

  std::string finish(const std::string& title) {
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\">"
        << title << "</text>\n"
        << body.str() << "</svg>\n";
    return svg.str();
  }
};

double plot_x(double frac) {
  return kMarginLeft + frac * (kWidth - kMarginLeft - kMarginRight);
}
double plot_y(double frac) {
  return kHeight - kMarginBottom -
         frac * (kHeight - kMarginBottom - kMarginTop);
}

void draw_axes(Canvas& c, double y_min, double y_max,
               const std::string& y_label) {
  c.body << "<line x1=\"" << plot_x(0) << "\" y1=\"" << plot_y(0)
         << "\" x2=\"" << plot_x(1) << "\" y2=\"" << plot_y(0)
         << "\" stroke=\"black\"/>\n";
  c.body << "<line x1=\"" << plot_x(0) << "\" y1=\"" << plot_y(0)
         << "\" x2=\"" << plot_x(0) << "\" y2=\"" << plot_y(1)
         << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double frac = tick / 4.0;
    const double value = y_min + frac * (y_max - y_min);
    c.body << "<text x=\"" << plot_x(0) - 8 << "\" y=\"" << plot_y(frac) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"10\">"
           << format_double(std::round(value * 1000.0) / 1000.0)
           << "</text>\n";
    c.body << "<line x1=\"" << plot_x(0) - 4 << "\" y1=\"" << plot_y(frac)
           << "\" x2=\"" << plot_x(0) << "\" y2=\"" << plot_y(frac)
           << "\" stroke=\"black\"/>\n";
  }
  c.body << "<text x=\"14\" y=\"" << kHeight / 2
         << "\" font-family=\"sans-serif\" font-size=\"11\" "
            "transform=\"rotate(-90 14 "
         << kHeight / 2 << ")\" text-anchor=\"middle\">" << y_label
         << "</text>\n";
}

void write_svg(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write SVG: " + path);
  }
  out << content;
}

struct Series {
  std::map<double, std::vector<double>> by_x;  // x -> samples
};

}  // namespace

void plot_lambda_sweep(const ExperimentReport& report,
                       const std::string& svg_path) {
  std::map<std::string, Series> by_method;
  std::set<double> lambdas;
  for (const auto& row : report.rows) {
    if (row.metric != "mantel_r" || !std::isfinite(row.value)) continue;
    by_method[row.method].by_x[row.lambda].push_back(row.value);
    lambdas.insert(row.lambda);
  }
  if (by_method.empty()) {
    throw DataError("plot_lambda_sweep: no mantel_r rows in report");
  }

  Canvas c;
  draw_axes(c, 0.0, 1.0, "Mantel r (mean)");

  // Lambda axis is ordinal: 0, then increasing positive values.
  std::vector<double> xs(lambdas.begin(), lambdas.end());
  auto x_frac = [&](double lambda) {
    const auto it = std::find(xs.begin(), xs.end(), lambda);
    const double idx = static_cast<double>(it - xs.begin());
    return xs.size() > 1 ? idx / static_cast<double>(xs.size() - 1) : 0.5;
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fx = x_frac(xs[i]);
    std::ostringstream label;
    label << xs[i];
    c.body << "<text x=\"" << plot_x(fx) << "\" y=\"" << plot_y(0) + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"10\">"
           << label.str() << "</text>\n";
  }
  c.body << "<text x=\"" << plot_x(0.5) << "\" y=\"" << kHeight - 12
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"11\">lambda</text>\n";

  int color = 0;
  for (const auto& [method, series] : by_method) {
    const char* col = kPalette[color % 7];
    std::ostringstream points;
    for (const auto& [lambda, values] : series.by_x) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      const double px = plot_x(x_frac(lambda));
      const double py = plot_y(std::clamp(mean, 0.0, 1.0));
      points << px << "," << py << " ";
      c.body << "<circle cx=\"" << px << "\" cy=\"" << py
             << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    c.body << "<polyline points=\"" << points.str()
           << "\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    c.body << "<text x=\"" << plot_x(1) - 4 << "\" y=\""
           << kMarginTop + 14 * (color + 1)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"11\" fill=\""
           << col << "\">" << method << "</text>\n";
    ++color;
  }
  write_svg(svg_path, c.finish("Mantel correlation vs lambda"));
}

void plot_method_summary(const ExperimentReport& report,
                         const std::string& metric,
                         const std::string& svg_path) {
  const auto summary = summarize_by_method(report, metric);
  if (summary.empty()) {
    throw DataError("plot_method_summary: no rows for metric " + metric);
  }
  Canvas c;
  draw_axes(c, 0.0, 1.0, metric + " (mean +- SD)");
  const double n = static_cast<double>(summary.size());
  int i = 0;
  for (const auto& [method, s] : summary) {
    const double cx = plot_x((i + 0.5) / n);
    const double w = 0.6 * (plot_x(1.0 / n) - plot_x(0.0));
    const double top = plot_y(std::clamp(s.mean, 0.0, 1.0));
    c.body << "<rect x=\"" << cx - w / 2 << "\" y=\"" << top << "\" width=\""
           << w << "\" height=\"" << plot_y(0) - top << "\" fill=\""
           << kPalette[i % 7] << "\"/>\n";
    const double lo = plot_y(std::clamp(s.mean - s.sd, 0.0, 1.0));
    const double hi = plot_y(std::clamp(s.mean + s.sd, 0.0, 1.0));
    c.body << "<line x1=\"" << cx << "\" y1=\"" << lo << "\" x2=\"" << cx
           << "\" y2=\"" << hi << "\" stroke=\"black\"/>\n";
    c.body << "<text x=\"" << cx << "\" y=\"" << plot_y(0) + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"11\">"
           << method << "</text>\n";
    ++i;
  }
  write_svg(svg_path, c.finish("Per-method summary: " + metric));
}

void plot_baseline(const ExperimentReport& report,
                   const std::string& svg_path) {
  // Mean baseline vs treatment per (dataset, method).
  struct Pair {
    std::vector<double> baseline, treatment;
  };
  std::map<std::string, Pair> groups;
  for (const auto& row : report.rows) {
    if (!std::isfinite(row.value)) continue;
    const std::string key = row.dataset + "/" + row.method;
    if (row.metric == "baseline_score") {
      groups[key].baseline.push_back(row.value);
    } else if (row.metric == "treatment_score") {
      groups[key].treatment.push_back(row.value);
    }
  }
  if (groups.empty()) {
    throw DataError("plot_baseline: no score rows in report");
  }
  Canvas c;
  draw_axes(c, 0.0, 1.0, "score");
  const double n = static_cast<double>(groups.size());
  int i = 0;
  auto mean_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
  };
  for (const auto& [key, pair] : groups) {
    const double x0 = (i + 0.15) / n;
    const double x1 = (i + 0.55) / n;
    const double w = 0.3 * (plot_x(1.0 / n) - plot_x(0.0));
    const double base_top = plot_y(std::clamp(mean_of(pair.baseline), 0.0, 1.0));
    const double treat_top =
        plot_y(std::clamp(mean_of(pair.treatment), 0.0, 1.0));
    c.body << "<rect x=\"" << plot_x(x0) << "\" y=\"" << base_top
           << "\" width=\"" << w << "\" height=\"" << plot_y(0) - base_top
           << "\" fill=\"#9aa0a6\"/>\n";
    c.body << "<rect x=\"" << plot_x(x1) << "\" y=\"" << treat_top
           << "\" width=\"" << w << "\" height=\"" << plot_y(0) - treat_top
           << "\" fill=\"#4e79a7\"/>\n";
    c.body << "<text x=\"" << plot_x((i + 0.5) / n) << "\" y=\""
           << plot_y(0) + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"9\">"
           << key << "</text>\n";
    ++i;
  }
  c.body << "<text x=\"" << plot_x(1) - 4 << "\" y=\"" << kMarginTop + 14
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            "font-size=\"11\" fill=\"#9aa0a6\">baseline</text>\n";
  c.body << "<text x=\"" << plot_x(1) - 4 << "\" y=\"" << kMarginTop + 28
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            "font-size=\"11\" fill=\"#4e79a7\">aligned</text>\n";
  write_svg(svg_path, c.finish("Weaker-domain kNN: baseline vs aligned"));
}

void plot_mapping(const ExperimentReport& report,
                  const std::string& svg_path) {
  std::map<std::string, std::vector<double>> by_metric;
  for (const auto& row : report.rows) {
    if (!std::isfinite(row.value)) continue;
    if (row.metric.rfind("mse_", 0) == 0) {
      by_metric[row.metric].push_back(row.value);
    }
  }
  if (by_metric.empty()) {
    throw DataError("plot_mapping: no mse rows in report");
  }
  // Log-scale means: the spread across methods is multiplicative.
  double lo = 1e300, hi = -1e300;
  std::map<std::string, double> log_mean;
  for (const auto& [metric, values] : by_metric) {
    double acc = 0.0;
    for (double v : values) acc += std::log10(std::max(v, 1e-12));
    const double m = acc / static_cast<double>(values.size());
    log_mean[metric] = m;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  lo = std::floor(lo) - 0.5;
  hi = std::ceil(hi) + 0.5;

  Canvas c;
  draw_axes(c, lo, hi, "log10 MSE (mean)");
  const double n = static_cast<double>(log_mean.size());
  int i = 0;
  for (const auto& [metric, m] : log_mean) {
    const double frac = (m - lo) / (hi - lo);
    const double cx = plot_x((i + 0.5) / n);
    const double w = 0.6 * (plot_x(1.0 / n) - plot_x(0.0));
    const double top = plot_y(std::clamp(frac, 0.0, 1.0));
    c.body << "<rect x=\"" << cx - w / 2 << "\" y=\"" << top << "\" width=\""
           << w << "\" height=\"" << plot_y(0) - top << "\" fill=\""
           << kPalette[i % 7] << "\"/>\n";
    c.body << "<text x=\"" << cx << "\" y=\"" << plot_y(0) + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"10\">"
           << metric << "</text>\n";
    ++i;
  }
  write_svg(svg_path, c.finish("Cross-domain mapping error"));
}

}  // namespace gma
