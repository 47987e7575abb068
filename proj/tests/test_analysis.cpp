#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "simstudy/analysis.hpp"
#include "simstudy/error.hpp"
#include "simstudy/executor.hpp"
#include "support.hpp"

using namespace simstudy;
using namespace simstudy::testing;

namespace {

const char* const kVarTable = R"TEX(\begin{table}[htbp]
  \centering
  \begin{tabular}{l*{2}{c}r}
    \toprule
    \multicolumn{1}{c}{Variable} & \multicolumn{1}{c}{expression} & \multicolumn{1}{c}{type} & \multicolumn{1}{c}{value} \\
    \midrule
    \texttt{n.sim} & \( N_{sim} \) & N & 32 \\
    \texttt{n} & \( n \) & grid & 64, 256 \\
    \texttt{d} & \( d \) & grid & 5, 20, 100, 500 \\
    \texttt{varWgts} & \( \mathbf{w} \) & frozen & 1, 1, 1, 1 \\
    \texttt{qF} & \( F ^ {- 1} \) & frozen & qF \\
    \texttt{family} & \( C \) & grid & Clayton, Gumbel \\
    \texttt{tau} & \( \tau \) & grid & 0.25, 0.50 \\
    \texttt{alpha} & \( \alpha \) & inner & 0.950, 0.990, 0.999 \\
    \bottomrule
  \end{tabular}
  \caption{Variables which determine our simulation study.}
  \label{tab:var}
\end{table}
)TEX";

const char* const kResultTable = R"TEX(\begin{table}[htbp]
  \centering\scriptsize
  \begin{tabular}{*{3}{l}*{6}{r}}
    \toprule
     &  & \( \tau \) & \multicolumn{3}{c}{0.25} & \multicolumn{3}{c}{0.50} \\
    \cmidrule(lr){4-6} \cmidrule(lr){7-9}
    \( C \) & \( n \) & \( d \) \textbar\ \( \alpha \) & \multicolumn{1}{c}{95\%} & \multicolumn{1}{c}{99\%} & \multicolumn{1}{c}{99.9\%} & \multicolumn{1}{c}{95\%} & \multicolumn{1}{c}{99\%} & \multicolumn{1}{c}{99.9\%} \\
    \midrule
    Clayton & 64 & 5 & 3.1 \ \,(0.4) & 3.8 \ \,(0.4) & \color{white!40!black} 4.0 \ \,(0.5) & 3.6 \ \,(0.3) & 4.2 \ \,(0.2) & \color{white!40!black} 4.4 \ \,(0.2) \\
    &  & 20 & 10.6 \ \,(1.4) & 13.5 \ \,(1.5) & \color{white!40!black} 14.8 \ \,(2.2) & 14.2 \ \,(1.6) & 16.7 \ \,(1.0) & \color{white!40!black} 17.4 \ \,(1.0) \\
    &  & 100 & 46.1 \ \,(9.1) & 63.5 (11.6) & \color{white!40!black} 68.5 (13.6) & 70.7 \ \,(8.6) & 83.7 \ \,(3.9) & \color{white!40!black} 86.7 \ \,(4.2) \\
    &  & 500 & 224.8 (50.6) & 307.8 (61.5) & \color{white!40!black} 336.0 (66.8) & 350.0 (40.5) & 418.6 (22.3) & \color{white!40!black} 434.0 (21.4) \\ \addlinespace[3pt]
    & 256 & 5 & 3.2 \ \,(0.2) & 4.1 \ \,(0.2) & \color{white!40!black} 4.4 \ \,(0.2) & 3.9 \ \,(0.2) & 4.4 \ \,(0.1) & \color{white!40!black} 4.6 \ \,(0.1) \\
    &  & 20 & 10.9 \ \,(1.0) & 15.3 \ \,(1.2) & \color{white!40!black} 17.0 \ \,(0.9) & 15.3 \ \,(0.7) & 17.6 \ \,(0.5) & \color{white!40!black} 18.5 \ \,(0.6) \\
    &  & 100 & 49.0 \ \,(5.5) & 72.1 \ \,(7.7) & \color{white!40!black} 82.5 \ \,(4.8) & 76.0 \ \,(3.4) & 87.9 \ \,(2.7) & \color{white!40!black} 92.3 \ \,(3.0) \\
    &  & 500 & 240.4 (27.0) & 349.7 (35.3) & \color{white!40!black} 408.5 (24.3) & 378.8 (17.4) & 439.4 (12.7) & \color{white!40!black} 461.7 (14.2) \\ \addlinespace[6pt]
    Gumbel & 64 & 5 & 2.7 \ \,(0.3) & 3.3 \ \,(0.4) & \color{white!40!black} 3.4 \ \,(0.5) & 3.3 \ \,(0.3) & 3.8 \ \,(0.3) & \color{white!40!black} 4.0 \ \,(0.2) \\
    &  & 20 & 7.3 \ \,(1.1) & 9.4 \ \,(1.2) & \color{white!40!black} 10.1 \ \,(1.5) & 12.2 \ \,(0.6) & 14.0 \ \,(1.2) & \color{white!40!black} 14.6 \ \,(1.2) \\
    &  & 100 & 26.0 \ \,(4.2) & 35.8 \ \,(4.7) & \color{white!40!black} 38.5 \ \,(5.6) & 57.7 \ \,(5.1) & 67.7 \ \,(4.8) & \color{white!40!black} 70.3 \ \,(5.4) \\
    &  & 500 & 117.2 (12.5) & 154.4 (19.0) & \color{white!40!black} 167.5 (18.2) & 288.2 (18.0) & 333.7 (23.0) & \color{white!40!black} 347.9 (20.7) \\ \addlinespace[3pt]
    & 256 & 5 & 2.7 \ \,(0.2) & 3.3 \ \,(0.2) & \color{white!40!black} 3.7 \ \,(0.2) & 3.4 \ \,(0.2) & 3.9 \ \,(0.1) & \color{white!40!black} 4.2 \ \,(0.1) \\
    &  & 20 & 7.4 \ \,(0.5) & 9.9 \ \,(0.8) & \color{white!40!black} 11.5 \ \,(0.9) & 12.5 \ \,(0.4) & 14.7 \ \,(0.7) & \color{white!40!black} 16.0 \ \,(0.6) \\
    &  & 100 & 27.8 \ \,(2.8) & 38.4 \ \,(3.1) & \color{white!40!black} 44.7 \ \,(3.2) & 60.4 \ \,(2.3) & 70.9 \ \,(2.5) & \color{white!40!black} 76.9 \ \,(3.5) \\
    &  & 500 & 126.8 (10.3) & 171.9 (11.2) & \color{white!40!black} 202.3 (13.5) & 299.1 (13.7) & 353.8 (13.2) & \color{white!40!black} 380.0 \ \,(9.7) \\
    \bottomrule
  \end{tabular}
  \caption{Table of results constructed with the \code{ftable} method \code{toLatex.ftable}.}
  \label{tab:ft}
\end{table}
)TEX";

std::vector<std::string> split(const std::string& s, const std::string& sep)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = s.find(sep, pos);
        out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) return out;
        pos = next + sep.size();
    }
}

// The 96 formatted cells of the results table, read back from its body rows
// in row order (family, n, d) and column order (tau, alpha).
std::vector<std::vector<std::string>> result_cells()
{
    std::istringstream in(kResultTable);
    std::string line;
    bool body = false;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line == "    \\midrule") {
            body = true;
            continue;
        }
        if (line == "    \\bottomrule") break;
        if (!body) continue;
        line = line.substr(0, line.find(" \\\\"));
        auto cells = split(line, " & ");
        rows.push_back(std::vector<std::string>(cells.begin() + 3, cells.end()));
    }
    return rows;
}

LabeledArray<std::string> result_cell_array()
{
    // storage order: alpha, tau, d, n, family (first fastest)
    std::vector<Dim> dims{{"alpha", {"95%", "99%", "99.9%"}},
                          {"tau", {"0.25", "0.50"}},
                          {"d", {"5", "20", "100", "500"}},
                          {"n", {"64", "256"}},
                          {"family", {"Clayton", "Gumbel"}}};
    LabeledArray<std::string> arr(dims, std::string());
    const auto rows = result_cells();
    for (std::size_t f = 0; f < 2; ++f)
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t d = 0; d < 4; ++d)
                for (std::size_t t = 0; t < 2; ++t)
                    for (std::size_t a = 0; a < 3; ++a) {
                        const std::size_t idx[] = {a, t, d, n, f};
                        arr.at(idx) = rows.at(f * 8 + n * 4 + d).at(t * 3 + a);
                    }
    return arr;
}

LabeledArray<double> random_array(std::mt19937& gen, std::size_t rank)
{
    std::vector<Dim> dims;
    for (std::size_t k = 0; k < rank; ++k) {
        Dim d{"v" + std::to_string(k), {}};
        const std::size_t n = 1 + gen() % 3;
        for (std::size_t l = 0; l < n; ++l) d.levels.push_back("L" + std::to_string(k) + std::to_string(l));
        dims.push_back(std::move(d));
    }
    std::vector<double> data(LabeledArray<double>::cell_count(dims));
    for (auto& x : data) x = double(gen() % 1000) / 8;
    return LabeledArray<double>(dims, data);
}

}  // namespace

TEST(Latex, VariableOverviewMatchesReferenceBytes)
{
    EXPECT_EQ(varlist_to_latex(var_study_varlist(), "Variables which determine our simulation study.", "tab:var"),
              kVarTable);
}

TEST(Latex, ResultTableMatchesReferenceBytes)
{
    const auto ft = ftable(result_cell_array(), {"family", "n", "d"}, {"tau", "alpha"});
    LatexTableOptions o;
    o.fontsize = "scriptsize";
    o.caption = "Table of results constructed with the \\code{ftable} method \\code{toLatex.ftable}.";
    o.tag = "tab:ft";
    EXPECT_EQ(to_latex_table(ft, var_study_varlist(), o), kResultTable);
}

TEST(Latex, SingleCellTable)
{
    LabeledArray<double> a({{"x", {"a"}}, {"y", {"b"}}}, std::vector<double>{1.5});
    const auto ft = ftable(a, {"x"}, {"y"});
    const auto tex = to_latex_table(ft, VarList{});
    EXPECT_NE(tex.find("\\begin{tabular}{*{1}{l}*{1}{r}}"), std::string::npos) << tex;
    EXPECT_NE(tex.find("    x \\textbar\\ y & \\multicolumn{1}{c}{b} \\\\\n"), std::string::npos) << tex;
    EXPECT_NE(tex.find("    a & 1.5 \\\\\n"), std::string::npos) << tex;
    EXPECT_EQ(tex.find("cmidrule"), std::string::npos);
    EXPECT_EQ(tex.find("addlinespace"), std::string::npos);
}

TEST(Latex, EmptyVarListGivesHeaderOnly)
{
    const auto tex = varlist_to_latex(VarList{});
    EXPECT_EQ(tex,
              "\\begin{table}[htbp]\n  \\centering\n  \\begin{tabular}{l*{2}{c}r}\n    \\toprule\n"
              "    \\multicolumn{1}{c}{Variable} & \\multicolumn{1}{c}{expression} & \\multicolumn{1}{c}{type} & "
              "\\multicolumn{1}{c}{value} \\\\\n    \\midrule\n    \\bottomrule\n  \\end{tabular}\n\\end{table}\n");
}

TEST(Latex, EscapingAndLabels)
{
    EXPECT_EQ(escape_latex("a_b & 50% {x} #1 $ ~ ^ \\"),
              "a\\_b \\& 50\\% \\{x\\} \\#1 \\$ \\textasciitilde{} \\textasciicircum{} \\textbackslash{}");
    const auto vl = var_study_varlist();
    EXPECT_EQ(latex_label(vl, "tau"), "\\( \\tau \\)");
    EXPECT_EQ(latex_label(vl, "n.sim"), "\\( N_{sim} \\)");
    EXPECT_EQ(latex_label(vl, "not_there"), "not\\_there");
    EXPECT_EQ(addlinespace_points(1), 6);
    EXPECT_EQ(addlinespace_points(2), 3);
    EXPECT_EQ(addlinespace_points(3), 2);
}

TEST(Ftable, MatchesNestedLoopOracle)
{
    std::mt19937 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rank = 2 + gen() % 3;
        const auto arr = random_array(gen, rank);
        std::vector<std::string> names = arr.dim_names();
        std::shuffle(names.begin(), names.end(), gen);
        const std::size_t nr = 1 + gen() % (rank - 1);
        const std::vector<std::string> rows(names.begin(), names.begin() + nr);
        const std::vector<std::string> cols(names.begin() + nr, names.end());
        const auto ft = ftable(arr, rows, cols);

        // oracle: odometers over rows and columns, last listed var fastest
        std::vector<std::size_t> rsz, csz, ri(nr, 0);
        for (const auto& n : rows) rsz.push_back(arr.dims()[arr.dim_index(n)].size());
        for (const auto& n : cols) csz.push_back(arr.dims()[arr.dim_index(n)].size());
        std::size_t i = 0;
        std::vector<std::size_t> prev;
        for (bool more = true; more; ++i) {
            ASSERT_LT(i, ft.body.size());
            const auto& line = ft.body[i];
            for (std::size_t k = 0; k < nr; ++k) {
                const bool repeat = !prev.empty() && std::equal(ri.begin(), ri.begin() + k + 1, prev.begin());
                EXPECT_EQ(line[k], repeat ? "" : arr.dims()[arr.dim_index(rows[k])].levels[ri[k]]);
            }
            std::vector<std::size_t> ci(cols.size(), 0);
            std::size_t j = 0;
            for (bool cmore = true; cmore; ++j) {
                std::vector<std::size_t> idx(rank);
                for (std::size_t k = 0; k < nr; ++k) idx[arr.dim_index(rows[k])] = ri[k];
                for (std::size_t k = 0; k < cols.size(); ++k) idx[arr.dim_index(cols[k])] = ci[k];
                EXPECT_EQ(line.at(nr + j), format_number(arr.at(idx)));
                for (std::size_t k = 0; k < cols.size(); ++k)
                    EXPECT_EQ(ft.header_rows[k][j], arr.dims()[arr.dim_index(cols[k])].levels[ci[k]]);
                cmore = false;
                for (std::size_t k = cols.size(); k-- > 0;) {
                    if (++ci[k] < csz[k]) {
                        cmore = true;
                        break;
                    }
                    ci[k] = 0;
                }
            }
            EXPECT_EQ(j, ft.data_columns());
            prev = ri;
            more = false;
            for (std::size_t k = nr; k-- > 0;) {
                if (++ri[k] < rsz[k]) {
                    more = true;
                    break;
                }
                ri[k] = 0;
            }
        }
        EXPECT_EQ(i, ft.body.size());
    }
}

TEST(Ftable, GroupBreaksAndSpans)
{
    LabeledArray<double> a({{"a", {"1", "2"}}, {"b", {"x", "y"}}, {"c", {"p", "q"}}, {"k", {"u", "v", "w"}}}, 0.0);
    const auto ft = ftable(a, {"a", "b", "c"}, {"k"});
    const std::vector<FlatTable::Break> want{{1, 2}, {3, 1}, {5, 2}};
    EXPECT_EQ(ft.row_group_breaks, want);
    EXPECT_TRUE(ft.spans.empty());

    const auto f2 = ftable(a, {"k"}, {"a", "b", "c"});
    const std::vector<FlatTable::Span> spans{{0, 0, 3}, {0, 4, 7}, {1, 0, 1}, {1, 2, 3}, {1, 4, 5}, {1, 6, 7}};
    EXPECT_EQ(f2.spans, spans);
    EXPECT_TRUE(f2.row_group_breaks.empty());
    const auto tex = to_latex_table(f2, VarList{});
    EXPECT_NE(tex.find("\\cmidrule(lr){2-5} \\cmidrule(lr){6-9}"), std::string::npos) << tex;
    EXPECT_NE(tex.find("\\cmidrule(lr){2-3} \\cmidrule(lr){4-5} \\cmidrule(lr){6-7} \\cmidrule(lr){8-9}"),
              std::string::npos);
}

TEST(Ftable, RejectsBadLayouts)
{
    LabeledArray<double> a({{"a", {"1"}}, {"b", {"2"}}, {"c", {"3"}}}, 0.0);
    EXPECT_THROW(ftable(a, {}, {"a", "b", "c"}), Error);
    EXPECT_THROW(ftable(a, {"a", "b", "c"}, {}), Error);
    EXPECT_THROW(ftable(a, {"a", "a"}, {"b", "c"}), Error);
    EXPECT_THROW(ftable(a, {"a"}, {"b"}), Error);
    EXPECT_THROW(ftable(a, {"a", "zz"}, {"b", "c"}), Error);
}

TEST(GetArray, AllComponents)
{
    VarList vl;
    vl.add(n_var(2));
    vl.add(grid_var("g", {1, 2, 3}));
    vl.add(inner_var("k", {"a", "b"}));
    const StudyFn fn = [](SubJobContext& ctx) {
        const double g = ctx.number("g");
        if (g == 2 && ctx.index().rep == 2) throw std::runtime_error("boom");
        if (g == 3) {
            ctx.warn("one");
            ctx.warn("two");
        }
        return Value(inner_dims(ctx.varlist()), std::vector<double>{g, double(ctx.index().rep)});
    };
    RunOptions o;
    double clock = 0;
    o.timer = [&clock] { return clock += 1; };
    const auto s = store_or_throw(run_study(vl, fn, o));

    const auto v = get_array(s, Component::Value);
    EXPECT_EQ(v.dim_names(), (std::vector<std::string>{"k", "g", "n.sim"}));
    const std::size_t bad[] = {0, 1, 1};
    EXPECT_TRUE(std::isnan(v.at(bad)));
    const std::size_t ok[] = {1, 2, 1};
    EXPECT_EQ(v.at(ok), 2.0);
    EXPECT_EQ(get_array(s, Component::Value, {}, -1).at(bad), -1.0);

    const auto e = get_array(s, Component::Error);
    EXPECT_EQ(e.data(), (std::vector<double>{0, 0, 0, 0, 1, 0}));
    const auto w = get_array(s, Component::Warning);
    EXPECT_EQ(w.data(), (std::vector<double>{0, 0, 1, 0, 0, 1}));
    const auto wc = get_array(s, Component::Warning, [](const SubJobRecord& r) { return double(r.warnings.size()); });
    EXPECT_EQ(wc.data(), (std::vector<double>{0, 0, 2, 0, 0, 2}));
    const auto t = get_array(s, Component::Time);
    for (double x : t.data()) EXPECT_EQ(x, 1.0);

    EXPECT_EQ(parse_component("warning"), Component::Warning);
    EXPECT_THROW(parse_component("values"), ConfigError);
}

TEST(GetArray, InjectedMismatchIsAFormatError)
{
    VarList vl;
    vl.add(grid_var("g", {1, 2}));
    vl.add(inner_var("k", {"a", "b"}));
    auto s = store_or_throw(run_study(vl, [](SubJobContext& c) {
        return Value(inner_dims(c.varlist()), std::vector<double>{1, 2});
    }));
    s.records[1].value = scalar_value(3);
    EXPECT_THROW(get_array(s, Component::Value), FormatError);
}

TEST(LongFormat, RowsAndPivotBack)
{
    std::mt19937 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto arr = random_array(gen, 1 + gen() % 4);
        const auto t = array2df(arr);
        ASSERT_EQ(t.rows(), arr.size());
        EXPECT_EQ(t.columns, arr.dim_names());
        LabeledArray<double> back(arr.dims(), std::nan(""));
        for (std::size_t i = 0; i < t.rows(); ++i) {
            std::vector<std::size_t> idx;
            for (std::size_t k = 0; k < t.columns.size(); ++k) idx.push_back(arr.level_index(k, t.levels[i][k]));
            back.at(idx) = t.values[i];
        }
        EXPECT_EQ(back, arr);
    }
}

TEST(Csv, QuotingRoundTrip)
{
    const std::vector<std::vector<std::string>> rows{
        {"plain", "with,comma", "with \"quote\"", "line\nbreak", ""}, {"a", "", "", "", "z"}};
    const auto text = csv_string(rows);
    EXPECT_EQ(text, "plain,\"with,comma\",\"with \"\"quote\"\"\",\"line\nbreak\",\na,,,,z\n");
    EXPECT_EQ(parse_csv(text), rows);
    EXPECT_EQ(parse_csv("a,b\r\nc,d"), (std::vector<std::vector<std::string>>{{"a", "b"}, {"c", "d"}}));
    EXPECT_THROW(parse_csv("\"open"), FormatError);
}

TEST(Csv, FlatAndLongTables)
{
    LabeledArray<double> a({{"r", {"x", "y"}}, {"c", {"1", "2"}}}, std::vector<double>{1, 2, 3, 4});
    const auto rows = csv_rows(ftable(a, {"r"}, {"c"}));
    EXPECT_EQ(rows, (std::vector<std::vector<std::string>>{{"r", "c=1", "c=2"}, {"x", "1", "3"}, {"y", "2", "4"}}));
    const auto lrows = csv_rows(array2df(a));
    EXPECT_EQ(lrows.front(), (std::vector<std::string>{"r", "c", "value"}));
    EXPECT_EQ(lrows[2], (std::vector<std::string>{"y", "1", "2"}));

    TempDir dir;
    to_csv(ftable(a, {"r"}, {"c"}), dir / "t.csv");
    std::ifstream in(dir / "t.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(parse_csv(ss.str()), rows);
}

TEST(Formatting, CommonDecimals)
{
    EXPECT_EQ(format_common({0.25, 0.5}), (std::vector<std::string>{"0.25", "0.50"}));
    EXPECT_EQ(format_common({0.95, 0.99, 0.999}), (std::vector<std::string>{"0.950", "0.990", "0.999"}));
    EXPECT_EQ(format_common({5, 20, 100, 500}), (std::vector<std::string>{"5", "20", "100", "500"}));
    EXPECT_EQ(format_common({1.5, 1000}), (std::vector<std::string>{"1.5", "1000.0"}));
    EXPECT_EQ(format_percent({0.95, 0.999}), (std::vector<std::string>{"95%", "99.9%"}));
    EXPECT_EQ(format_fixed(2.25, 1), "2.2");
    EXPECT_EQ(format_fixed(-0.04, 1), "-0.0");
}
