#include "simstudy/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "simstudy/error.hpp"

namespace simstudy {

namespace {

double type7(const std::vector<double>& sorted, double p)
{
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto j = static_cast<std::size_t>(std::floor(h));
    if (j + 1 >= sorted.size()) return sorted.back();
    return sorted[j] + (h - std::floor(h)) * (sorted[j + 1] - sorted[j]);
}

}  // namespace

BoxStats boxplot_stats(std::vector<double> x)
{
    if (x.empty()) throw Error("boxplot_stats: empty sample");
    std::sort(x.begin(), x.end());
    BoxStats b;
    b.median = type7(x, 0.5);
    b.q1 = type7(x, 0.25);
    b.q3 = type7(x, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo = b.q1 - 1.5 * iqr;
    const double hi = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    for (double v : x) {
        if (v < lo || v > hi) {
            b.outliers.push_back(v);
            continue;
        }
        b.whisker_lo = std::min(b.whisker_lo, v);
        b.whisker_hi = std::max(b.whisker_hi, v);
    }
    return b;
}

namespace {

// Layout (pixels). Gutters around the panel matrix hold the axes, the strip
// labels and the legend.
constexpr double kGap = 8;
constexpr double kLeft = 64;
constexpr double kTop = 40;
constexpr double kStrip = 20;
constexpr double kRight = 56;
constexpr double kBottom = 44;
constexpr double kLegend = 28;
constexpr double kPad = 0.04;  // fraction of the y range added on each side

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string xml_escape(std::string_view s)
{
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

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool empty() const { return !(lo <= hi); }
};

// Padded range in axis units (log10 units on a log axis).
Range finish(Range r)
{
    if (r.empty()) return {0, 1};
    if (r.hi == r.lo) {
        const double w = r.lo == 0 ? 1 : std::fabs(r.lo) * 0.1;
        return {r.lo - w, r.hi + w};
    }
    const double pad = (r.hi - r.lo) * kPad;
    return {r.lo - pad, r.hi + pad};
}

std::vector<double> linear_ticks(Range r)
{
    const double span = r.hi - r.lo;
    const double raw = span / 5;
    const double mag = std::pow(10, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= 6) break;
    }
    std::vector<double> t;
    for (double v = std::ceil(r.lo / step) * step; v <= r.hi + step * 1e-9; v += step)
        t.push_back(std::fabs(v) < step * 1e-9 ? 0.0 : v);
    return t;
}

// Ticks in data units for a log10 axis spanning [r.lo, r.hi] (log10 units).
std::vector<double> log_ticks(Range r)
{
    std::vector<double> t;
    for (int e = static_cast<int>(std::floor(r.lo)); e <= static_cast<int>(std::ceil(r.hi)); ++e) {
        for (double m : {1.0, 2.0, 5.0}) {
            const double v = m * std::pow(10.0, e);
            const double lv = std::log10(v);
            if (lv >= r.lo && lv <= r.hi) t.push_back(v);
        }
    }
    if (t.size() > 8) {
        std::vector<double> decades;
        for (double v : t)
            if (std::fabs(std::log10(v) - std::round(std::log10(v))) < 1e-12) decades.push_back(v);
        if (decades.size() >= 2) t = decades;
    }
    return t;
}

}  // namespace

PlotOutput mayplot(const LabeledArray<double>& arr, const PlotSpec& spec)
{
    if (arr.size() == 0) throw Error("mayplot: empty array");
    const std::vector<std::string> roles{spec.row_var, spec.col_var, spec.x_var, spec.series_var};
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (!arr.has_dim(roles[i])) throw Error("mayplot: array has no dimension '" + roles[i] + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (roles[i] == roles[j]) throw Error("mayplot: dimension '" + roles[i] + "' used twice");
    }
    const bool has_rep = arr.has_dim(kNSimName);
    if (arr.rank() != roles.size() + (has_rep ? 1 : 0)) {
        std::string extra;
        for (const auto& d : arr.dims())
            if (std::find(roles.begin(), roles.end(), d.name) == roles.end() && d.name != kNSimName)
                extra += (extra.empty() ? "" : ", ") + d.name;
        throw Error("mayplot: dimensions left over after assigning roles: " + extra + " (slice them first)");
    }
    bool boxes = has_rep;
    if (spec.panel == PlotSpec::Panel::Box) boxes = true;
    if (spec.panel == PlotSpec::Panel::Line) boxes = false;
    if (boxes && !has_rep) throw Error("mayplot: boxplot panels need an n.sim dimension");

    std::vector<std::string> order = roles;
    if (has_rep) order.push_back(std::string(kNSimName));
    const auto a = arr.permute(order);
    const auto& rows = a.dims()[0];
    const auto& cols = a.dims()[1];
    const auto& xs = a.dims()[2];
    const auto& series = a.dims()[3];
    const std::size_t nrep = has_rep ? a.dims()[4].size() : 1;
    const std::size_t R = rows.size(), C = cols.size(), X = xs.size(), S = series.size();

    PlotOutput out;
    out.boxes = boxes;
    out.panels = R * C;

    auto to_axis = [&](double v) { return spec.y_log ? std::log10(v) : v; };
    auto usable = [&](double v) { return std::isfinite(v) && (!spec.y_log || v > 0); };

    // samples[r][c][x][s], already filtered
    std::vector<std::vector<double>> samples(R * C * X * S);
    auto cell = [&](std::size_t r, std::size_t c, std::size_t x, std::size_t s) -> std::vector<double>& {
        return samples[((r * C + c) * X + x) * S + s];
    };
    std::vector<std::size_t> idx(a.rank());
    for (std::size_t lin = 0; lin < a.size(); ++lin) {
        idx = a.multi(lin);
        const double v = a.data()[lin];
        if (!usable(v)) {
            ++out.dropped;
            continue;
        }
        cell(idx[0], idx[1], idx[2], idx[3]).push_back(v);
    }

    // line panels summarize replications (if any) by their mean
    std::vector<Range> row_range(R);
    Range global;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t x = 0; x < X; ++x)
                for (std::size_t s = 0; s < S; ++s)
                    for (double v : cell(r, c, x, s)) {
                        row_range[r].add(to_axis(v));
                        global.add(to_axis(v));
                    }
    std::vector<Range> ylim(R);
    for (std::size_t r = 0; r < R; ++r) ylim[r] = finish(spec.ylim == PlotSpec::YLim::Global ? global : row_range[r]);

    auto label = [&](const std::string& name) {
        auto it = spec.labels.find(name);
        return it == spec.labels.end() ? name : it->second;
    };

    const double width = kLeft + C * kPanelWidth + (C - 1) * kGap + kStrip + kRight;
    const double height = kTop + kStrip + R * kPanelHeight + (R - 1) * kGap + kBottom + kLegend;

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
         "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"11\">\n";
    s += "<!-- panels=" + std::to_string(out.panels) + " dropped=" + std::to_string(out.dropped) + " -->\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"white\"/>\n";
    s += "<defs>\n";
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const double px = kLeft + c * (kPanelWidth + kGap);
            const double py = kTop + kStrip + r * (kPanelHeight + kGap);
            s += "<clipPath id=\"clip-" + std::to_string(r) + "-" + std::to_string(c) + "\"><rect x=\"" + num(px) +
                 "\" y=\"" + num(py) + "\" width=\"" + num(kPanelWidth) + "\" height=\"" + num(kPanelHeight) +
                 "\"/></clipPath>\n";
        }
    s += "</defs>\n";

    // column strips
    for (std::size_t c = 0; c < C; ++c) {
        const double px = kLeft + c * (kPanelWidth + kGap);
        s += "<rect x=\"" + num(px) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kPanelWidth) + "\" height=\"" +
             num(kStrip - 2) + "\" fill=\"#D9D9D9\"/>\n";
        s += "<text x=\"" + num(px + kPanelWidth / 2) + "\" y=\"" + num(kTop + kStrip - 7) +
             "\" text-anchor=\"middle\">" + xml_escape(label(spec.col_var) + " = " + cols.levels[c]) + "</text>\n";
    }

    const double right_strip_x = kLeft + C * kPanelWidth + (C - 1) * kGap + 2;
    for (std::size_t r = 0; r < R; ++r) {
        const Range yl = ylim[r];
        const double py = kTop + kStrip + r * (kPanelHeight + kGap);
        auto ypix = [&](double v) { return py + kPanelHeight - (to_axis(v) - yl.lo) / (yl.hi - yl.lo) * kPanelHeight; };
        const auto ticks = spec.y_log ? log_ticks(yl) : linear_ticks(yl);

        // row strip on the right edge
        s += "<rect x=\"" + num(right_strip_x) + "\" y=\"" + num(py) + "\" width=\"" + num(kStrip - 2) +
             "\" height=\"" + num(kPanelHeight) + "\" fill=\"#D9D9D9\"/>\n";
        const double cx = right_strip_x + (kStrip - 2) / 2 + 4;
        const double cy = py + kPanelHeight / 2;
        s += "<text x=\"" + num(cx) + "\" y=\"" + num(cy) + "\" text-anchor=\"middle\" transform=\"rotate(90 " +
             num(cx) + " " + num(cy) + ")\">" + xml_escape(label(spec.row_var) + " = " + rows.levels[r]) + "</text>\n";

        // y axis on the left column only
        for (double t : ticks) {
            const double y = ypix(t);
            s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
                 xml_escape(tick_label(t)) + "</text>\n";
        }

        for (std::size_t c = 0; c < C; ++c) {
            const double px = kLeft + c * (kPanelWidth + kGap);
            const std::string clip = "clip-" + std::to_string(r) + "-" + std::to_string(c);
            s += "<g class=\"panel\" data-row=\"" + xml_escape(rows.levels[r]) + "\" data-col=\"" +
                 xml_escape(cols.levels[c]) + "\">\n";
            s += "<rect x=\"" + num(px) + "\" y=\"" + num(py) + "\" width=\"" + num(kPanelWidth) + "\" height=\"" +
                 num(kPanelHeight) + "\" fill=\"#EBEBEB\"/>\n";
            for (double t : ticks) {
                const double y = ypix(t);
                s += "<line x1=\"" + num(px) + "\" y1=\"" + num(y) + "\" x2=\"" + num(px + kPanelWidth) + "\" y2=\"" +
                     num(y) + "\" stroke=\"white\" stroke-width=\"1\"/>\n";
            }
            const double slot = kPanelWidth / static_cast<double>(X);
            for (std::size_t x = 0; x < X; ++x) {
                const double xc = px + slot * (static_cast<double>(x) + 0.5);
                s += "<line x1=\"" + num(xc) + "\" y1=\"" + num(py) + "\" x2=\"" + num(xc) + "\" y2=\"" +
                     num(py + kPanelHeight) + "\" stroke=\"white\" stroke-width=\"0.6\"/>\n";
            }
            s += "<g clip-path=\"url(#" + clip + ")\">\n";
            if (boxes) {
                const double bw = slot * 0.8 / static_cast<double>(S);
                for (std::size_t x = 0; x < X; ++x)
                    for (std::size_t k = 0; k < S; ++k) {
                        const auto& v = cell(r, c, x, k);
                        if (v.empty()) continue;
                        const auto b = boxplot_stats(v);
                        const std::string col = kPalette[k % std::size(kPalette)];
                        const double x0 = px + slot * static_cast<double>(x) + slot * 0.1 + bw * static_cast<double>(k);
                        const double xm = x0 + bw / 2;
                        s += "<line x1=\"" + num(xm) + "\" y1=\"" + num(ypix(b.whisker_lo)) + "\" x2=\"" + num(xm) +
                             "\" y2=\"" + num(ypix(b.q1)) + "\" stroke=\"" + col + "\"/>\n";
                        s += "<line x1=\"" + num(xm) + "\" y1=\"" + num(ypix(b.q3)) + "\" x2=\"" + num(xm) +
                             "\" y2=\"" + num(ypix(b.whisker_hi)) + "\" stroke=\"" + col + "\"/>\n";
                        s += "<rect x=\"" + num(x0 + bw * 0.1) + "\" y=\"" + num(ypix(b.q3)) + "\" width=\"" +
                             num(bw * 0.8) + "\" height=\"" + num(ypix(b.q1) - ypix(b.q3)) + "\" fill=\"" + col +
                             "\" fill-opacity=\"0.35\" stroke=\"" + col + "\"/>\n";
                        s += "<line x1=\"" + num(x0 + bw * 0.1) + "\" y1=\"" + num(ypix(b.median)) + "\" x2=\"" +
                             num(x0 + bw * 0.9) + "\" y2=\"" + num(ypix(b.median)) + "\" stroke=\"" + col +
                             "\" stroke-width=\"2\"/>\n";
                        for (double o : b.outliers)
                            s += "<circle cx=\"" + num(xm) + "\" cy=\"" + num(ypix(o)) + "\" r=\"1.5\" fill=\"none\" stroke=\"" +
                                 col + "\"/>\n";
                    }
            } else {
                for (std::size_t k = 0; k < S; ++k) {
                    const std::string col = kPalette[k % std::size(kPalette)];
                    std::string pts;
                    std::string dots;
                    for (std::size_t x = 0; x < X; ++x) {
                        const auto& v = cell(r, c, x, k);
                        if (v.empty()) continue;
                        double m = 0;
                        for (double e : v) m += e;
                        m /= static_cast<double>(v.size());
                        const double xc = px + slot * (static_cast<double>(x) + 0.5);
                        pts += (pts.empty() ? "" : " ") + num(xc) + "," + num(ypix(m));
                        dots += "<circle cx=\"" + num(xc) + "\" cy=\"" + num(ypix(m)) + "\" r=\"2.5\" fill=\"" + col + "\"/>\n";
                    }
                    if (!pts.empty())
                        s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\"/>\n";
                    s += dots;
                }
            }
            s += "</g>\n</g>\n";
        }
    }

    // x tick labels under the bottom row, one set per column
    const double bottom = kTop + kStrip + R * kPanelHeight + (R - 1) * kGap;
    for (std::size_t c = 0; c < C; ++c) {
        const double px = kLeft + c * (kPanelWidth + kGap);
        const double slot = kPanelWidth / static_cast<double>(X);
        for (std::size_t x = 0; x < X; ++x)
            s += "<text x=\"" + num(px + slot * (static_cast<double>(x) + 0.5)) + "\" y=\"" + num(bottom + 14) +
                 "\" text-anchor=\"middle\">" + xml_escape(xs.levels[x]) + "</text>\n";
    }
    const double mid_x = kLeft + (C * kPanelWidth + (C - 1) * kGap) / 2;
    s += "<text x=\"" + num(mid_x) + "\" y=\"" + num(bottom + 32) + "\" text-anchor=\"middle\">" +
         xml_escape(label(spec.x_var)) + "</text>\n";
    const double mid_y = kTop + kStrip + (R * kPanelHeight + (R - 1) * kGap) / 2;
    s += "<text x=\"16\" y=\"" + num(mid_y) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(mid_y) +
         ")\">" + xml_escape(spec.y_label + (spec.y_log ? " (log scale)" : "")) + "</text>\n";

    if (has_rep) {
        const double x = right_strip_x + kStrip + 14;
        s += "<text x=\"" + num(x) + "\" y=\"" + num(mid_y) + "\" text-anchor=\"middle\" transform=\"rotate(90 " +
             num(x) + " " + num(mid_y) + ")\">" + xml_escape("n.sim = " + std::to_string(nrep)) + "</text>\n";
    }

    // legend for the series variable, centered above the panels
    {
        double lx = kLeft;
        const double ly = 18;
        s += "<text x=\"" + num(lx) + "\" y=\"" + num(ly + 4) + "\">" + xml_escape(label(spec.series_var)) + ":</text>\n";
        lx += 12 + 7 * static_cast<double>(label(spec.series_var).size());
        for (std::size_t k = 0; k < S; ++k) {
            const std::string col = kPalette[k % std::size(kPalette)];
            s += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 5) + "\" width=\"12\" height=\"10\" fill=\"" + col +
                 "\"/>\n";
            s += "<text x=\"" + num(lx + 16) + "\" y=\"" + num(ly + 4) + "\">" + xml_escape(series.levels[k]) +
                 "</text>\n";
            lx += 28 + 7 * static_cast<double>(series.levels[k].size());
        }
    }
    s += "</svg>\n";
    out.svg = std::move(s);
    return out;
}

PlotOutput mayplot_svg(const LabeledArray<double>& arr, const PlotSpec& spec, const std::filesystem::path& path)
{
    auto out = mayplot(arr, spec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path.string() + "' for writing");
    f << out.svg;
    if (!f) throw Error("write to '" + path.string() + "' failed");
    return out;
}

}  // namespace simstudy
