#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "simstudy/error.hpp"
#include "simstudy/plot.hpp"
#include "support.hpp"

using namespace simstudy;

namespace {

std::size_t count(const std::string& s, const std::string& what)
{
    std::size_t n = 0;
    for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
    return n;
}

// Checks that every element is closed in order; returns an empty string or
// a description of the first problem.
std::string tag_balance(const std::string& s)
{
    std::vector<std::string> stack;
    std::size_t p = 0;
    while ((p = s.find('<', p)) != std::string::npos) {
        const auto e = s.find('>', p);
        if (e == std::string::npos) return "unterminated tag";
        const std::string tag = s.substr(p + 1, e - p - 1);
        p = e + 1;
        if (tag.empty()) return "empty tag";
        if (tag[0] == '?' || tag[0] == '!') continue;
        if (tag[0] == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return "unexpected </" + name + ">";
            stack.pop_back();
            continue;
        }
        if (tag.back() == '/') continue;
        stack.push_back(tag.substr(0, tag.find_first_of(" \n")));
    }
    return stack.empty() ? "" : "unclosed <" + stack.back() + ">";
}

LabeledArray<double> sample_array(std::size_t nsim)
{
    std::vector<Dim> dims{{"s", {"a", "b"}}, {"x", {"1", "2", "3"}}, {"c", {"p", "q"}}, {"r", {"lo", "hi"}}};
    if (nsim) {
        Dim d{"n.sim", {}};
        for (std::size_t i = 1; i <= nsim; ++i) d.levels.push_back(std::to_string(i));
        dims.push_back(d);
    }
    LabeledArray<double> a(dims, 0.0);
    for (std::size_t lin = 0; lin < a.size(); ++lin) {
        const auto idx = a.multi(lin);
        const double scale = idx[3] == 0 ? 1 : 1000;
        a.data()[lin] = scale * (1 + idx[1] + 0.1 * idx[0] + (nsim ? 0.01 * double(idx[4]) : 0.0));
    }
    return a;
}

PlotSpec spec()
{
    PlotSpec s;
    s.row_var = "r";
    s.col_var = "c";
    s.x_var = "x";
    s.series_var = "s";
    return s;
}

}  // namespace

TEST(BoxStats, TukeyFiveNumbers)
{
    const auto b = boxplot_stats({7, 1, 2, 3, 4, 5, 6});
    EXPECT_EQ(b.median, 4);
    EXPECT_EQ(b.q1, 2.5);
    EXPECT_EQ(b.q3, 5.5);
    EXPECT_EQ(b.whisker_lo, 1);
    EXPECT_EQ(b.whisker_hi, 7);
    EXPECT_TRUE(b.outliers.empty());

    const auto c = boxplot_stats({3, 3, 3});
    EXPECT_EQ(c.q1, 3);
    EXPECT_EQ(c.whisker_hi, 3);
    EXPECT_TRUE(c.outliers.empty());

    const auto o = boxplot_stats({1, 2, 3, 4, 5, 6, 7, 100});
    EXPECT_EQ(o.outliers, std::vector<double>{100});
    EXPECT_EQ(o.whisker_hi, 7);
    EXPECT_THROW(boxplot_stats({}), Error);
}

TEST(Mayplot, BoxPanelsAreWellFormed)
{
    const auto out = mayplot(sample_array(8), spec());
    EXPECT_TRUE(out.boxes);
    EXPECT_EQ(out.panels, 4u);
    EXPECT_EQ(out.dropped, 0u);
    EXPECT_EQ(count(out.svg, "class=\"panel\""), 4u);
    EXPECT_EQ(count(out.svg, "<clipPath"), 4u);
    EXPECT_EQ(tag_balance(out.svg), "");
    EXPECT_NE(out.svg.find("n.sim = 8"), std::string::npos);
    EXPECT_NE(out.svg.find("c = p"), std::string::npos);
    EXPECT_NE(out.svg.find("r = hi"), std::string::npos);
    EXPECT_EQ(out.svg, mayplot(sample_array(8), spec()).svg);
}

TEST(Mayplot, LinePanelsWithoutReplications)
{
    const auto out = mayplot(sample_array(0), spec());
    EXPECT_FALSE(out.boxes);
    EXPECT_EQ(count(out.svg, "<polyline"), 8u);  // 4 panels x 2 series
    EXPECT_EQ(tag_balance(out.svg), "");
    auto s = spec();
    s.panel = PlotSpec::Panel::Box;
    EXPECT_THROW(mayplot(sample_array(0), s), Error);
    s.panel = PlotSpec::Panel::Line;
    EXPECT_FALSE(mayplot(sample_array(4), s).boxes);
}

TEST(Mayplot, LocalLimitsFollowEachRow)
{
    auto s = spec();
    const auto global = mayplot(sample_array(4), s).svg;
    s.ylim = PlotSpec::YLim::Local;
    const auto local = mayplot(sample_array(4), s).svg;
    EXPECT_NE(global, local);
    EXPECT_EQ(tag_balance(local), "");
}

TEST(Mayplot, DropsUnplottableValues)
{
    auto a = sample_array(4);
    a.data()[0] = std::nan("");
    a.data()[1] = -1;
    a.data()[2] = 0;
    EXPECT_EQ(mayplot(a, spec()).dropped, 1u);
    auto s = spec();
    s.y_log = true;
    const auto out = mayplot(a, s);
    EXPECT_EQ(out.dropped, 3u);
    EXPECT_EQ(tag_balance(out.svg), "");
}

TEST(Mayplot, RejectsBadRoles)
{
    auto s = spec();
    s.x_var = "nope";
    EXPECT_THROW(mayplot(sample_array(2), s), Error);
    s.x_var = "s";
    EXPECT_THROW(mayplot(sample_array(2), s), Error);
    LabeledArray<double> extra({{"s", {"a"}}, {"x", {"1"}}, {"c", {"p"}}, {"r", {"lo"}}, {"z", {"1", "2"}}}, 1.0);
    EXPECT_THROW(mayplot(extra, spec()), Error);
}

TEST(Mayplot, WritesTheFile)
{
    simstudy::testing::TempDir dir;
    const auto out = mayplot_svg(sample_array(2), spec(), dir / "p.svg");
    std::ifstream in(dir / "p.svg");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), out.svg);
    EXPECT_THROW(mayplot_svg(sample_array(2), spec(), dir / "missing" / "p.svg"), Error);
}
