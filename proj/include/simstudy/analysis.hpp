#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simstudy/labeled_array.hpp"
#include "simstudy/results.hpp"

namespace simstudy {

enum class Component { Value, Error, Warning, Time };

std::string_view to_string(Component c);
/// Throws ConfigError for anything but value, error, warning, time.
Component parse_component(std::string_view s);

/// Per-record mapping used for the error and warning components.
using RecordMap = std::function<double(const SubJobRecord&)>;

/// Array of one result component.
///
/// Value: dims are the inner dims followed by the store dims, and sub-jobs
/// that failed contribute `err_value` in every inner cell. Error/Warning:
/// 0/1 indicators over the store dims unless `map` says otherwise (e.g. a
/// warning count). Time: milliseconds over the store dims.
LabeledArray<double> get_array(const ResultStore& store, Component c, const RecordMap& map = {},
                               double err_value = std::numeric_limits<double>::quiet_NaN());

/// Long format: one row per cell, level columns then the value.
struct LongTable {
    std::vector<std::string> columns;            // dim names
    std::vector<std::vector<std::string>> levels;  // one entry per row
    std::vector<double> values;

    std::size_t rows() const { return values.size(); }
};

/// First dim varies fastest down the rows.
LongTable array2df(const LabeledArray<double>& arr);

/// Two-dimensional layout of an array for printing.
struct FlatTable {
    std::vector<Dim> row_vars;
    std::vector<Dim> col_vars;
    /// header_rows[k][j]: level of col_vars[k] above data column j.
    std::vector<std::vector<std::string>> header_rows;
    /// Row-label columns (repeats suppressed) followed by the data columns.
    std::vector<std::vector<std::string>> body;

    /// Column group of header row `header_row`, data columns [first, last].
    struct Span {
        std::size_t header_row = 0;
        std::size_t first = 0;
        std::size_t last = 0;
        friend bool operator==(const Span&, const Span&) = default;
    };
    std::vector<Span> spans;

    /// Group boundary after body row `after_row`. Tier 1 separates groups of
    /// the outermost row variable, tier 2 the next one in, and so on.
    struct Break {
        std::size_t after_row = 0;
        std::size_t tier = 1;
        friend bool operator==(const Break&, const Break&) = default;
    };
    std::vector<Break> row_group_breaks;

    std::size_t data_columns() const;
};

/// Rows iterate over `row_vars` with the last one fastest; columns likewise.
/// Every dim must appear exactly once in row_vars or col_vars, and both
/// lists must be non-empty.
FlatTable ftable(const LabeledArray<std::string>& arr, const std::vector<std::string>& row_vars,
                 const std::vector<std::string>& col_vars);
FlatTable ftable(const LabeledArray<double>& arr, const std::vector<std::string>& row_vars,
                 const std::vector<std::string>& col_vars);

/// Escapes the LaTeX special characters of plain text.
std::string escape_latex(std::string_view s);

/// "\( text \)" for math labels, escaped text otherwise. Unknown names are
/// rendered as escaped plain text.
std::string latex_label(const VarList& vl, std::string_view name);

struct LatexTableOptions {
    std::string fontsize;  // e.g. "scriptsize"; empty for none
    std::string caption;   // raw LaTeX
    std::string tag;       // \label{...}
};

/// Vertical space after a row group break of the given tier, in points.
double addlinespace_points(std::size_t tier);

/// booktabs table: row-label columns left-aligned, data right-aligned,
/// grouped column headings centered with \cmidrule spans, row groups
/// separated by \addlinespace. Body cells are emitted verbatim.
std::string to_latex_table(const FlatTable& ft, const VarList& labels, const LatexTableOptions& opts = {});

/// Four-column overview: Variable, expression, type, value.
std::string varlist_to_latex(const VarList& vl, const std::string& caption = {}, const std::string& tag = {});

/// Formats numbers with one common number of decimals, enough to show each
/// value to 7 significant digits ("0.25, 0.50" or "0.950, 0.990, 0.999").
std::vector<std::string> format_common(const std::vector<double>& xs);

/// "95%" style labels for probabilities.
std::vector<std::string> format_percent(const std::vector<double>& ps);

/// printf-style formatting of a single double ("%.1f").
std::string format_fixed(double x, int digits);

/// RFC 4180 text: CRLF-free ("\n" line ends), fields quoted when they hold a
/// comma, quote or line break.
std::string csv_string(const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Header row, then one line per body row. Column headers join the column
/// levels as "var=level;var=level".
std::vector<std::vector<std::string>> csv_rows(const FlatTable& ft);
std::vector<std::vector<std::string>> csv_rows(const LongTable& t);

void to_csv(const FlatTable& ft, const std::filesystem::path& path);
void to_csv(const LongTable& t, const std::filesystem::path& path);

}  // namespace simstudy
