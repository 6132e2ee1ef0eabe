#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dialogic/classify.hpp"
#include "dialogic/metrics.hpp"

namespace dialogic {

struct FigureSeries {
  std::string label;
  std::vector<std::optional<double>> mean;  // one per segment
  std::vector<double> sd;
  std::optional<double> overall_mean;       // drawn dashed
};

// Two stacked panels over the segments: means on top, SDs below.
struct FigureSpec {
  std::string title;
  std::string metric;
  std::string y_label;
  std::vector<FigureSeries> series;
  std::vector<std::size_t> significant;  // segments marked with an asterisk
};

FigureSpec figure_from_report(const ComparisonReport& r, std::string title,
                              std::string y_label);

// Fixed 800x560 canvas, no external assets. Throws SpecError.
std::string render_figure(const FigureSpec& spec);

// Grouped bars: one group per category, one bar per series.
struct BarChartSpec {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<std::pair<std::string, std::vector<double>>> series;
};
std::string render_bar_chart(const BarChartSpec& spec);

// One stacked column of shares per segment; empty segments stay blank.
struct StackedSpec {
  std::string title;
  std::vector<std::string> categories;
  std::vector<std::optional<std::vector<double>>> columns;
};
std::string render_stacked(const StackedSpec& spec);

BarChartSpec qtype_bars(
    const std::vector<std::pair<std::string, TypeDistribution>>& dists);
StackedSpec qtype_stacked(const std::string& label, const TypeDistribution& d);

}  // namespace dialogic
