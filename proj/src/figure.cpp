#include "dialogic/figure.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "dialogic/error.hpp"

namespace dialogic {

namespace {

constexpr int kWidth = 800;
constexpr int kHeight = 560;
constexpr double kLeft = 70;
constexpr double kRight = 650;  // legend sits to the right
constexpr std::array<std::string_view, 2> kSeriesColors = {"#1f77b4", "#d62728"};
constexpr std::array<std::string_view, 8> kCategoryColors = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
    "#59a14f", "#edc948", "#b07aa1", "#9c755f"};

[[noreturn]] void spec_error(const std::string& what) {
  throw Error(ErrorCode::SpecError, what);
}

std::string esc(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double x) {
  std::string s = fmt::format("{:.1f}", x);
  return s == "-0.0" ? "0.0" : s;
}

// Smallest 1, 2, 2.5 or 5 times a power of ten that is >= x.
double nice_ceil(double x) {
  if (!(x > 0.0)) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(x)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * p >= x * (1.0 - 1e-12)) return m * p;
  }
  return 10.0 * p;
}

std::string tick_label(double v, double step) {
  int decimals = 0;
  if (step < 1.0) decimals = static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  if (std::abs(step * std::pow(10.0, decimals) - std::round(step * std::pow(10.0, decimals))) > 1e-9) {
    ++decimals;
  }
  std::string s = fmt::format("{:.{}f}", v, decimals);
  return s.starts_with("-") && std::stod(s) == 0.0 ? s.substr(1) : s;
}

struct Panel {
  double top, bottom, lo, hi;
  double y(double v) const { return bottom - (v - lo) / (hi - lo) * (bottom - top); }
};

std::string header(const std::string& title) {
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
      kWidth, kHeight);
  out += fmt::format(
      "<text x=\"{}\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
      num((kLeft + kRight) / 2), esc(title));
  return out;
}

std::string y_axis(const Panel& p, const std::string& label) {
  std::string out = fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"#000000\"/>\n",
      num(kLeft), num(p.top), num(p.bottom), num(kRight));
  const double step = (p.hi - p.lo) / 5.0;
  for (int i = 0; i <= 5; ++i) {
    const double v = p.lo + step * i;
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5}</text>\n",
        num(kLeft), num(p.y(v)), num(kRight), num(kLeft - 6), num(p.y(v) + 4),
        tick_label(v, step));
  }
  const double mid = (p.top + p.bottom) / 2;
  out += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      num(mid), esc(label));
  return out;
}

double slot_x(std::size_t i, std::size_t n) {
  return kLeft + (static_cast<double>(i) + 0.5) * (kRight - kLeft) /
                     static_cast<double>(n);
}

std::string x_labels(std::size_t n, double y, const std::string& caption) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       num(slot_x(i, n)), num(y + 16), i + 1);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     num((kLeft + kRight) / 2), num(y + 34), esc(caption));
  return out;
}

std::string legend(const std::vector<std::pair<std::string, std::string_view>>& items,
                   double top) {
  std::string out;
  double y = top;
  for (const auto& [label, color] : items) {
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n"
        "<text x=\"{}\" y=\"{}\">{}</text>\n",
        num(kRight + 20), num(y), color, num(kRight + 38), num(y + 10), esc(label));
    y += 20;
  }
  return out;
}

// Polylines over runs of present values, plus a marker per point.
std::string line_series(const std::vector<std::optional<double>>& values,
                        const Panel& p, std::string_view color) {
  std::string out;
  std::string points;
  auto flush = [&] {
    if (!points.empty()) {
      out += fmt::format(
          "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
          points, color);
      points.clear();
    }
  };
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) {
      flush();
      continue;
    }
    if (!points.empty()) points.push_back(' ');
    points += num(slot_x(i, values.size())) + "," + num(p.y(*values[i]));
  }
  flush();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                       num(slot_x(i, values.size())), num(p.y(*values[i])), color);
  }
  return out;
}

}  // namespace

FigureSpec figure_from_report(const ComparisonReport& r, std::string title,
                              std::string y_label) {
  FigureSpec spec;
  spec.title = std::move(title);
  spec.metric = r.metric_name;
  spec.y_label = std::move(y_label);
  FigureSeries a{r.label_a, {}, {}, r.overall_mean_a};
  FigureSeries b{r.label_b, {}, {}, r.overall_mean_b};
  for (const auto& s : r.segments) {
    a.mean.push_back(s.mean_a);
    a.sd.push_back(s.sd_a);
    b.mean.push_back(s.mean_b);
    b.sd.push_back(s.sd_b);
  }
  spec.series = {std::move(a), std::move(b)};
  spec.significant = r.significant_segments();
  return spec;
}

std::string render_figure(const FigureSpec& spec) {
  if (spec.series.empty()) spec_error("figure has no series");
  if (spec.series.size() > kSeriesColors.size()) spec_error("figure has too many series");
  const std::size_t k = spec.series.front().mean.size();
  if (k == 0) spec_error("figure series are empty");
  double max_mean = 0.0, min_mean = 0.0, max_sd = 0.0;
  for (const auto& s : spec.series) {
    if (s.mean.size() != k || s.sd.size() != k) {
      spec_error("figure series differ in length");
    }
    for (const auto& m : s.mean) {
      if (m) {
        max_mean = std::max(max_mean, *m);
        min_mean = std::min(min_mean, *m);
      }
    }
    if (s.overall_mean) {
      max_mean = std::max(max_mean, *s.overall_mean);
      min_mean = std::min(min_mean, *s.overall_mean);
    }
    for (double sd : s.sd) max_sd = std::max(max_sd, sd);
  }
  for (auto seg : spec.significant) {
    if (seg >= k) spec_error(fmt::format("significant segment {} out of range", seg));
  }

  const Panel top{60, 320, min_mean < 0 ? -nice_ceil(-min_mean) : 0.0,
                  nice_ceil(max_mean * 1.08)};
  const Panel bottom{380, 500, 0.0, nice_ceil(max_sd * 1.05)};
  std::string out = header(spec.title);
  out += y_axis(top, spec.y_label);
  out += y_axis(bottom, "SD");
  out += x_labels(k, bottom.bottom, "Segment");

  std::vector<std::pair<std::string, std::string_view>> items;
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const auto color = kSeriesColors[i];
    items.emplace_back(s.label, color);
    if (s.overall_mean) {
      out += fmt::format(
          "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"{3}\" "
          "stroke-dasharray=\"6 4\"/>\n",
          num(kLeft), num(kRight), num(top.y(*s.overall_mean)), color);
    }
    out += line_series(s.mean, top, color);
    std::vector<std::optional<double>> sds(s.sd.begin(), s.sd.end());
    for (std::size_t j = 0; j < k; ++j) {
      if (!s.mean[j]) sds[j].reset();
    }
    out += line_series(sds, bottom, color);
  }
  std::vector<std::size_t> marks = spec.significant;
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  for (auto seg : marks) {
    double peak = top.lo;
    for (const auto& s : spec.series) {
      if (s.mean[seg]) peak = std::max(peak, *s.mean[seg]);
    }
    out += fmt::format(
        "<text class=\"sig\" x=\"{}\" y=\"{}\" font-size=\"18\" "
        "text-anchor=\"middle\">*</text>\n",
        num(slot_x(seg, k)), num(top.y(peak) - 8));
  }
  out += legend(items, top.top);
  out += "</svg>\n";
  return out;
}

std::string render_bar_chart(const BarChartSpec& spec) {
  if (spec.categories.empty() || spec.series.empty()) {
    spec_error("bar chart has no data");
  }
  if (spec.series.size() > kSeriesColors.size()) spec_error("bar chart has too many series");
  double hi = 0.0;
  for (const auto& [label, values] : spec.series) {
    if (values.size() != spec.categories.size()) {
      spec_error("bar chart series differ in length");
    }
    for (double v : values) {
      if (!(v >= 0.0)) spec_error("bar chart values must be non-negative");
      hi = std::max(hi, v);
    }
  }
  const Panel p{60, 460, 0.0, nice_ceil(hi * 1.05)};
  std::string out = header(spec.title);
  out += y_axis(p, spec.y_label);
  const std::size_t n = spec.categories.size();
  const double slot = (kRight - kLeft) / static_cast<double>(n);
  const double bar = slot * 0.8 / static_cast<double>(spec.series.size());
  std::vector<std::pair<std::string, std::string_view>> items;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& [label, values] = spec.series[s];
    items.emplace_back(label, kSeriesColors[s]);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = kLeft + slot * static_cast<double>(i) + slot * 0.1 +
                       bar * static_cast<double>(s);
      out += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
          num(x), num(p.y(values[i])), num(bar), num(p.bottom - p.y(values[i])),
          kSeriesColors[s]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       num(slot_x(i, n)), num(p.bottom + 16), esc(spec.categories[i]));
  }
  out += legend(items, p.top);
  out += "</svg>\n";
  return out;
}

std::string render_stacked(const StackedSpec& spec) {
  if (spec.categories.empty() || spec.columns.empty()) {
    spec_error("stacked chart has no data");
  }
  if (spec.categories.size() > kCategoryColors.size()) {
    spec_error("stacked chart has too many categories");
  }
  for (const auto& c : spec.columns) {
    if (c && c->size() != spec.categories.size()) {
      spec_error("stacked column size differs from categories");
    }
  }
  const Panel p{60, 460, 0.0, 1.0};
  std::string out = header(spec.title);
  out += y_axis(p, "Share");
  const std::size_t n = spec.columns.size();
  const double slot = (kRight - kLeft) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!spec.columns[i]) continue;
    double acc = 0.0;
    for (std::size_t c = 0; c < spec.categories.size(); ++c) {
      const double v = (*spec.columns[i])[c];
      if (!(v >= 0.0)) spec_error("stacked shares must be non-negative");
      out += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
          num(kLeft + slot * static_cast<double>(i) + slot * 0.1), num(p.y(acc + v)),
          num(slot * 0.8), num(p.y(acc) - p.y(acc + v)), kCategoryColors[c]);
      acc += v;
    }
  }
  out += x_labels(n, p.bottom, "Segment");
  std::vector<std::pair<std::string, std::string_view>> items;
  for (std::size_t c = 0; c < spec.categories.size(); ++c) {
    items.emplace_back(spec.categories[c], kCategoryColors[c]);
  }
  out += legend(items, p.top);
  out += "</svg>\n";
  return out;
}

BarChartSpec qtype_bars(
    const std::vector<std::pair<std::string, TypeDistribution>>& dists) {
  BarChartSpec spec;
  spec.title = "Question types";
  spec.y_label = "% of questions";
  for (auto t : kQuestionTypes) spec.categories.emplace_back(to_string(t));
  for (const auto& [label, d] : dists) {
    std::vector<double> pct(kQuestionTypeCount, 0.0);
    if (d.overall) {
      for (std::size_t i = 0; i < kQuestionTypeCount; ++i) pct[i] = 100.0 * (*d.overall)[i];
    }
    spec.series.emplace_back(label, std::move(pct));
  }
  return spec;
}

StackedSpec qtype_stacked(const std::string& label, const TypeDistribution& d) {
  StackedSpec spec;
  spec.title = fmt::format("Question types per segment: {}", label);
  for (auto t : kQuestionTypes) spec.categories.emplace_back(to_string(t));
  for (const auto& row : d.per_segment) {
    if (row) spec.columns.emplace_back(std::vector<double>(row->begin(), row->end()));
    else spec.columns.emplace_back(std::nullopt);
  }
  return spec;
}

}  // namespace dialogic
