#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "simstudy/labeled_array.hpp"

namespace simstudy {

/// Tukey boxplot summary. Hinges are type-7 quartiles; whiskers reach the
/// most extreme observations within 1.5 IQR of the hinges.
struct BoxStats {
    double median = 0;
    double q1 = 0;
    double q3 = 0;
    double whisker_lo = 0;
    double whisker_hi = 0;
    std::vector<double> outliers;
};

/// Throws Error for an empty sample.
BoxStats boxplot_stats(std::vector<double> sample);

struct PlotSpec {
    enum class YLim { Global, Local };
    enum class Panel { Auto, Box, Line };

    std::string row_var;
    std::string col_var;
    std::string x_var;
    std::string series_var;
    YLim ylim = YLim::Global;
    Panel panel = Panel::Auto;
    bool y_log = false;
    /// Display names by dim name; the dim name itself is used otherwise.
    std::map<std::string, std::string> labels;
    std::string y_label = "value";
};

struct PlotOutput {
    std::string svg;
    std::size_t panels = 0;
    /// Non-finite values (and non-positive ones on a log axis) left out.
    std::size_t dropped = 0;
    bool boxes = false;
};

/// Panel geometry in pixels.
inline constexpr double kPanelWidth = 240;
inline constexpr double kPanelHeight = 180;

/// Conditioning plot: one panel per (row level, column level), the x
/// variable along each panel, one colored series per series level. With an
/// n.sim dim each x position shows boxplots, otherwise lines.
PlotOutput mayplot(const LabeledArray<double>& arr, const PlotSpec& spec);

/// Writes mayplot(arr, spec).svg to `path`.
PlotOutput mayplot_svg(const LabeledArray<double>& arr, const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace simstudy
