#include "simstudy/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "simstudy/error.hpp"

namespace simstudy {

std::string_view to_string(Component c)
{
    switch (c) {
    case Component::Value: return "value";
    case Component::Error: return "error";
    case Component::Warning: return "warning";
    case Component::Time: return "time";
    }
    return "?";
}

Component parse_component(std::string_view s)
{
    if (s == "value") return Component::Value;
    if (s == "error") return Component::Error;
    if (s == "warning") return Component::Warning;
    if (s == "time") return Component::Time;
    throw ConfigError("unknown component '" + std::string(s) + "' (expected value, error, warning or time)");
}

LabeledArray<double> get_array(const ResultStore& store, Component c, const RecordMap& map, double err_value)
{
    const std::size_t n = store.records.size();
    if (c != Component::Value) {
        std::vector<double> out;
        out.reserve(n);
        for (const auto& r : store.records) {
            if (map && c != Component::Time) {
                out.push_back(map(r));
                continue;
            }
            switch (c) {
            case Component::Error: out.push_back(r.error ? 1.0 : 0.0); break;
            case Component::Warning: out.push_back(r.warnings.empty() ? 0.0 : 1.0); break;
            default: out.push_back(r.time_ms); break;
            }
        }
        return LabeledArray<double>(store.dims, std::move(out));
    }

    std::vector<Dim> dims = store.value_dims;
    dims.insert(dims.end(), store.dims.begin(), store.dims.end());
    const std::size_t inner = LabeledArray<double>::cell_count(store.value_dims);
    std::vector<double> out;
    out.reserve(inner * n);
    for (const auto& r : store.records) {
        if (r.error || !r.value) {
            out.insert(out.end(), inner, err_value);
            continue;
        }
        const auto& d = r.value->data();
        if (d.size() != inner) throw FormatError("record value does not match the store's inner shape");
        out.insert(out.end(), d.begin(), d.end());
    }
    return LabeledArray<double>(std::move(dims), std::move(out));
}

LongTable array2df(const LabeledArray<double>& arr)
{
    LongTable t;
    t.columns = arr.dim_names();
    t.levels.reserve(arr.size());
    t.values = arr.data();
    for (std::size_t lin = 0; lin < arr.size(); ++lin) {
        const auto idx = arr.multi(lin);
        std::vector<std::string> row;
        row.reserve(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) row.push_back(arr.dims()[k].levels[idx[k]]);
        t.levels.push_back(std::move(row));
    }
    return t;
}

std::size_t FlatTable::data_columns() const
{
    std::size_t n = 1;
    for (const auto& d : col_vars) n *= d.size();
    return n;
}

namespace {

// Mixed-radix decode with the LAST digit fastest.
std::vector<std::size_t> decode_last_fastest(std::size_t i, const std::vector<Dim>& dims)
{
    std::vector<std::size_t> out(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        out[k] = i % dims[k].size();
        i /= dims[k].size();
    }
    return out;
}

}  // namespace

FlatTable ftable(const LabeledArray<std::string>& arr, const std::vector<std::string>& row_vars,
                 const std::vector<std::string>& col_vars)
{
    if (row_vars.empty() || col_vars.empty()) throw Error("ftable: need at least one row and one column variable");
    std::vector<std::string> all = row_vars;
    all.insert(all.end(), col_vars.begin(), col_vars.end());
    {
        auto sorted = all;
        std::sort(sorted.begin(), sorted.end());
        if (auto it = std::adjacent_find(sorted.begin(), sorted.end()); it != sorted.end())
            throw Error("ftable: dimension '" + *it + "' listed twice");
    }
    std::vector<std::size_t> rpos, cpos;
    FlatTable ft;
    for (const auto& n : row_vars) {
        rpos.push_back(arr.dim_index(n));
        ft.row_vars.push_back(arr.dims()[rpos.back()]);
    }
    for (const auto& n : col_vars) {
        cpos.push_back(arr.dim_index(n));
        ft.col_vars.push_back(arr.dims()[cpos.back()]);
    }
    if (all.size() != arr.rank()) {
        std::string missing;
        for (const auto& d : arr.dims())
            if (std::find(all.begin(), all.end(), d.name) == all.end()) missing += (missing.empty() ? "" : ", ") + d.name;
        throw Error("ftable: dimensions not placed in rows or columns: " + missing);
    }

    const std::size_t nrow = LabeledArray<char>::cell_count(ft.row_vars);
    const std::size_t ncol = ft.data_columns();
    const std::size_t nrv = row_vars.size();

    ft.header_rows.assign(col_vars.size(), std::vector<std::string>(ncol));
    for (std::size_t j = 0; j < ncol; ++j) {
        const auto ci = decode_last_fastest(j, ft.col_vars);
        for (std::size_t k = 0; k < ci.size(); ++k) ft.header_rows[k][j] = ft.col_vars[k].levels[ci[k]];
    }
    // group widths: header row k groups span the product of the sizes after k
    for (std::size_t k = 0; k + 1 < col_vars.size(); ++k) {
        std::size_t width = 1;
        for (std::size_t m = k + 1; m < col_vars.size(); ++m) width *= ft.col_vars[m].size();
        for (std::size_t first = 0; first < ncol; first += width) ft.spans.push_back({k, first, first + width - 1});
    }

    std::vector<std::size_t> idx(arr.rank());
    std::vector<std::size_t> prev;
    ft.body.reserve(nrow);
    for (std::size_t i = 0; i < nrow; ++i) {
        const auto ri = decode_last_fastest(i, ft.row_vars);
        std::vector<std::string> line(nrv + ncol);
        // the outermost row variable whose level changed since the last row
        std::size_t changed = 0;
        if (!prev.empty())
            while (changed < nrv && ri[changed] == prev[changed]) ++changed;
        for (std::size_t k = 0; k < nrv; ++k)
            if (prev.empty() || k >= changed) line[k] = ft.row_vars[k].levels[ri[k]];
        if (!prev.empty() && changed + 1 < nrv) ft.row_group_breaks.push_back({i - 1, changed + 1});
        for (std::size_t k = 0; k < nrv; ++k) idx[rpos[k]] = ri[k];
        for (std::size_t j = 0; j < ncol; ++j) {
            const auto ci = decode_last_fastest(j, ft.col_vars);
            for (std::size_t k = 0; k < ci.size(); ++k) idx[cpos[k]] = ci[k];
            line[nrv + j] = arr.at(idx);
        }
        ft.body.push_back(std::move(line));
        prev = ri;
    }
    return ft;
}

FlatTable ftable(const LabeledArray<double>& arr, const std::vector<std::string>& row_vars,
                 const std::vector<std::string>& col_vars)
{
    return ftable(arr.map([](double x) { return format_number(x); }), row_vars, col_vars);
}

std::string escape_latex(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '\\': out += "\\textbackslash{}"; break;
        case '&':
        case '%':
        case '$':
        case '#':
        case '_':
        case '{':
        case '}':
            out += '\\';
            out += c;
            break;
        case '~': out += "\\textasciitilde{}"; break;
        case '^': out += "\\textasciicircum{}"; break;
        default: out += c;
        }
    }
    return out;
}

std::string latex_label(const VarList& vl, std::string_view name)
{
    const VarSpec* s = vl.find(name);
    if (!s) return escape_latex(name);
    if (s->label.math) return "\\( " + s->label.text + " \\)";
    return escape_latex(s->label.text);
}

double addlinespace_points(std::size_t tier)
{
    return 6.0 / static_cast<double>(std::max<std::size_t>(tier, 1));
}

namespace {

std::string join(const std::vector<std::string>& cells, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += sep;
        out += cells[i];
    }
    return out;
}

std::string multicolumn(std::size_t width, const std::string& text)
{
    return "\\multicolumn{" + std::to_string(width) + "}{c}{" + text + "}";
}

std::string wrap_table(const std::string& colspec, const std::vector<std::string>& lines,
                       const std::string& fontsize, const std::string& caption, const std::string& tag)
{
    std::string out = "\\begin{table}[htbp]\n  \\centering";
    if (!fontsize.empty()) out += "\\" + fontsize;
    out += "\n  \\begin{tabular}{" + colspec + "}\n";
    for (const auto& l : lines) out += "    " + l + "\n";
    out += "  \\end{tabular}\n";
    if (!caption.empty()) out += "  \\caption{" + caption + "}\n";
    if (!tag.empty()) out += "  \\label{" + tag + "}\n";
    out += "\\end{table}\n";
    return out;
}

}  // namespace

std::string to_latex_table(const FlatTable& ft, const VarList& labels, const LatexTableOptions& opts)
{
    const std::size_t nrv = ft.row_vars.size();
    const std::size_t ncv = ft.col_vars.size();
    const std::size_t ncol = ft.data_columns();
    std::vector<std::string> lines{"\\toprule"};

    for (std::size_t k = 0; k < ncv; ++k) {
        std::vector<std::string> cells;
        const bool last = k + 1 == ncv;
        for (std::size_t j = 0; j + 1 < nrv; ++j) cells.push_back(last ? latex_label(labels, ft.row_vars[j].name) : "");
        const std::string col_label = latex_label(labels, ft.col_vars[k].name);
        cells.push_back(last ? latex_label(labels, ft.row_vars[nrv - 1].name) + " \\textbar\\ " + col_label : col_label);
        if (last) {
            for (std::size_t j = 0; j < ncol; ++j) cells.push_back(multicolumn(1, escape_latex(ft.header_rows[k][j])));
        } else {
            for (const auto& s : ft.spans)
                if (s.header_row == k)
                    cells.push_back(multicolumn(s.last - s.first + 1, escape_latex(ft.header_rows[k][s.first])));
        }
        lines.push_back(join(cells, " & ") + " \\\\");
        if (!last) {
            std::vector<std::string> rules;
            for (const auto& s : ft.spans)
                if (s.header_row == k)
                    rules.push_back("\\cmidrule(lr){" + std::to_string(nrv + s.first + 1) + "-" +
                                    std::to_string(nrv + s.last + 1) + "}");
            lines.push_back(join(rules, " "));
        }
    }
    lines.push_back("\\midrule");

    for (std::size_t i = 0; i < ft.body.size(); ++i) {
        std::string line = join(ft.body[i], " & ");
        line.erase(0, line.find_first_not_of(' ') == std::string::npos ? line.size() : line.find_first_not_of(' '));
        line += " \\\\";
        for (const auto& b : ft.row_group_breaks)
            if (b.after_row == i) line += " \\addlinespace[" + format_number(addlinespace_points(b.tier)) + "pt]";
        lines.push_back(std::move(line));
    }
    lines.push_back("\\bottomrule");

    const std::string colspec =
        "*{" + std::to_string(nrv) + "}{l}*{" + std::to_string(ncol) + "}{r}";
    return wrap_table(colspec, lines, opts.fontsize, opts.caption, opts.tag);
}

std::vector<std::string> format_common(const std::vector<double>& xs)
{
    int decimals = 0;
    for (double x : xs) {
        if (!std::isfinite(x) || x == 0.0) continue;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6e", x);
        std::string s(buf);
        const auto e = s.find('e');
        const int exponent = std::atoi(s.c_str() + e + 1);
        std::string mant = s.substr(0, e);
        while (!mant.empty() && mant.back() == '0') mant.pop_back();
        if (!mant.empty() && mant.back() == '.') mant.pop_back();
        int sig = 0;
        for (char c : mant)
            if (c >= '0' && c <= '9') ++sig;
        decimals = std::max(decimals, sig - 1 - exponent);
    }
    decimals = std::min(decimals, 15);
    std::vector<std::string> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(std::isfinite(x) ? format_fixed(x, decimals) : format_number(x));
    return out;
}

std::vector<std::string> format_percent(const std::vector<double>& ps)
{
    std::vector<std::string> out;
    for (double p : ps) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.10g%%", 100.0 * p);
        out.emplace_back(buf);
    }
    return out;
}

std::string format_fixed(double x, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string varlist_to_latex(const VarList& vl, const std::string& caption, const std::string& tag)
{
    std::vector<std::string> lines{
        "\\toprule",
        "\\multicolumn{1}{c}{Variable} & \\multicolumn{1}{c}{expression} & \\multicolumn{1}{c}{type} & "
        "\\multicolumn{1}{c}{value} \\\\",
        "\\midrule"};
    for (const auto& s : vl.specs()) {
        std::string value;
        if (s.type == VarType::Frozen) {
            value = escape_latex(s.frozen ? s.frozen->display : "");
        } else {
            const bool numeric = std::all_of(s.levels.begin(), s.levels.end(), [](const Level& l) { return l.is_number(); });
            std::vector<std::string> shown;
            if (numeric) {
                std::vector<double> xs;
                for (const auto& l : s.levels) xs.push_back(l.number());
                shown = format_common(xs);
            } else {
                for (const auto& l : s.levels) shown.push_back(escape_latex(l.label()));
            }
            value = join(shown, ", ");
        }
        const std::string label = s.label.math ? "\\( " + s.label.text + " \\)" : escape_latex(s.label.text);
        lines.push_back("\\texttt{" + escape_latex(s.name) + "} & " + label + " & " + std::string(to_string(s.type)) +
                        " & " + value + " \\\\");
    }
    lines.push_back("\\bottomrule");
    return wrap_table("l*{2}{c}r", lines, "", caption, tag);
}

std::string csv_string(const std::vector<std::vector<std::string>>& rows)
{
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            const auto& f = row[i];
            if (f.find_first_of(",\"\n\r") == std::string::npos) {
                out += f;
                continue;
            }
            out += '"';
            for (char c : f) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        }
        out += '\n';
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw FormatError("csv: unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<std::string>> csv_rows(const FlatTable& ft)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    for (const auto& d : ft.row_vars) header.push_back(d.name);
    for (std::size_t j = 0; j < ft.data_columns(); ++j) {
        std::string h;
        for (std::size_t k = 0; k < ft.col_vars.size(); ++k)
            h += (k ? ";" : "") + ft.col_vars[k].name + "=" + ft.header_rows[k][j];
        header.push_back(std::move(h));
    }
    rows.push_back(std::move(header));
    rows.insert(rows.end(), ft.body.begin(), ft.body.end());
    return rows;
}

std::vector<std::vector<std::string>> csv_rows(const LongTable& t)
{
    std::vector<std::vector<std::string>> rows;
    auto header = t.columns;
    header.push_back("value");
    rows.push_back(std::move(header));
    for (std::size_t i = 0; i < t.rows(); ++i) {
        auto r = t.levels[i];
        r.push_back(format_number(t.values[i]));
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace

void to_csv(const FlatTable& ft, const std::filesystem::path& path) { write_text(path, csv_string(csv_rows(ft))); }
void to_csv(const LongTable& t, const std::filesystem::path& path) { write_text(path, csv_string(csv_rows(t))); }

}  // namespace simstudy
