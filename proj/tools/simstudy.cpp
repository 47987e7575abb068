// Command-line front end: run a registered study from a config file, then
// turn the stored result into tables and plots.

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simstudy/analysis.hpp"
#include "simstudy/error.hpp"
#include "simstudy/executor.hpp"
#include "simstudy/plot.hpp"
#include "simstudy/protocol.hpp"
#include "simstudy/registry.hpp"
#include "simstudy/results.hpp"
#include "simstudy/study_var.hpp"

namespace fs = std::filesystem;
using namespace simstudy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSubJobErrors = 2;

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::optional<double> parse_double(const std::string& s)
{
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

SeedSpec parse_seed(const std::string& s)
{
    if (s == "seq") return SeedSpec::seq();
    if (s == "none") return SeedSpec::none_reseed();
    if (s == "unseeded") return SeedSpec::unseeded();
    std::ifstream f(s);
    if (!f) throw ConfigError("--seed: expected seq, none, unseeded or a readable file, got '" + s + "'");
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw ConfigError(s + ": " + e.what());
    }
    if (j.is_array() && !j.empty() && j[0].is_number_integer()) return SeedSpec::per_rep_integer(j.get<std::vector<std::int64_t>>());
    if (j.is_array() && !j.empty() && j[0].is_string()) {
        std::vector<StreamState> streams;
        for (const auto& h : j) streams.push_back(StreamState::from_hex(h.get<std::string>()));
        return SeedSpec::per_rep_stream(std::move(streams));
    }
    return SeedSpec::from_json(j);
}

std::size_t worker_cap(std::size_t requested)
{
    if (const char* env = std::getenv("SIMSTUDY_MAX_WORKERS")) {
        if (auto v = parse_double(env); v && *v >= 1) return std::min(requested, static_cast<std::size_t>(*v));
    }
    return requested;
}

fs::path self_exe()
{
    std::error_code ec;
    auto p = fs::read_symlink("/proc/self/exe", ec);
    if (ec) throw BackendError("cannot locate the running executable for worker processes");
    return p;
}

std::size_t count_errors(const std::vector<SubJobRecord>& recs)
{
    std::size_t n = 0;
    for (const auto& r : recs) n += r.error ? 1 : 0;
    return n;
}

const std::vector<SubJobRecord>& records_of(const SimResult& r)
{
    return std::visit([](const auto& x) -> const std::vector<SubJobRecord>& { return x.records; }, r);
}

// Relabels numeric dims with a common number of decimals and the listed
// dims as percentages.
LabeledArray<double> pretty_levels(LabeledArray<double> arr, const std::vector<std::string>& percent)
{
    for (const auto& d : std::vector<Dim>(arr.dims())) {
        if (d.name == kNSimName) continue;
        std::vector<double> xs;
        for (const auto& l : d.levels) {
            auto v = parse_double(l);
            if (!v) break;
            xs.push_back(*v);
        }
        if (xs.size() != d.levels.size()) continue;
        const bool pct = std::find(percent.begin(), percent.end(), d.name) != percent.end();
        arr = arr.relabel(d.name, pct ? format_percent(xs) : format_common(xs));
    }
    return arr;
}

void check_dims(const LabeledArray<double>& arr, const std::vector<std::string>& names, const char* what)
{
    for (const auto& n : names) {
        if (!arr.has_dim(n)) {
            std::string have;
            for (const auto& d : arr.dims()) have += (have.empty() ? "" : ", ") + d.name;
            throw ConfigError(std::string(what) + ": unknown dimension '" + n + "' (available: " + have + ")");
        }
    }
}

std::vector<double> finite(const std::vector<double>& v)
{
    std::vector<double> out;
    for (double x : v)
        if (std::isfinite(x)) out.push_back(x);
    return out;
}

void emit(const std::string& text, const std::string& out)
{
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot open '" + out + "' for writing");
    f << text;
}

struct RunArgs {
    std::string config;
    std::string backend = "seq";
    std::size_t workers = 4;
    std::size_t block_size = 1;
    std::string seed = "seq";
    std::string out;
    std::string order = "rep";
    bool keep_seed = false;
    bool monitor = false;
    bool no_load_balancing = false;
};

int cmd_run(const RunArgs& a)
{
    const StudyConfig cfg = load_config(a.config);
    RunOptions opts;
    opts.seed = parse_seed(a.seed);
    opts.keep_seed = a.keep_seed;
    if (a.order != "rep" && a.order != "grid") throw ConfigError("--order must be rep or grid");
    opts.rep_first = a.order == "rep";
    opts.study_id = cfg.study;
    const std::size_t workers = worker_cap(a.workers);
    if (a.backend == "seq") opts.backend = BackendSpec::sequential();
    else if (a.backend == "threads") opts.backend = BackendSpec::threads(workers);
    else if (a.backend == "procs") {
        opts.backend = BackendSpec::processes(workers);
        opts.backend.worker_command = {self_exe().string(), "__worker"};
    } else throw ConfigError("--backend must be seq, threads or procs");
    opts.backend.block_size = a.block_size;
    opts.backend.load_balancing = !a.no_load_balancing;
    if (a.monitor) opts.monitor = stderr_monitor();
    if (!a.out.empty()) opts.cache_path = fs::path(a.out);
    bool hit = false;
    opts.cache_hit = &hit;

    const SimResult res = run_study(cfg.varlist, *find_study(cfg.study), opts);
    const auto& recs = records_of(res);
    std::size_t warnings = 0;
    double total = 0;
    for (const auto& r : recs) {
        warnings += r.warnings.empty() ? 0 : 1;
        total += r.time_ms;
    }
    const std::size_t errors = count_errors(recs);
    if (hit) std::cout << "cache hit: " << a.out << "\n";
    std::cout << "sub-jobs: " << recs.size() << ", errors: " << errors << ", warnings: " << warnings
              << ", total time: " << format_fixed(total, 0) << " ms\n";
    if (std::holds_alternative<RawFallback>(res))
        std::cout << "stored as raw records: " << std::get<RawFallback>(res).diagnostic << "\n";
    return errors ? kExitSubJobErrors : kExitOk;
}

struct AnalyzeArgs {
    std::string in;
    std::string component = "value";
    std::string rows;
    std::string cols;
    std::string format = "latex";
    std::string out;
    std::string caption;
    std::string label;
    std::string fontsize;
    std::vector<std::string> percent;
    int digits = 1;
};

int cmd_analyze(const AnalyzeArgs& a)
{
    const auto res = load(a.in);
    const ResultStore& store = store_or_throw(res);
    const Component comp = parse_component(a.component);
    auto arr = get_array(store, comp);

    if (a.format == "long-csv") {
        emit(csv_string(csv_rows(array2df(arr))), a.out);
        return kExitOk;
    }
    const auto rows = split(a.rows, ',');
    const auto cols = split(a.cols, ',');
    if (rows.empty() || cols.empty()) throw ConfigError("--rows and --cols are required");
    check_dims(arr, rows, "--rows");
    check_dims(arr, cols, "--cols");
    std::vector<std::string> keep = rows;
    keep.insert(keep.end(), cols.begin(), cols.end());
    std::vector<std::string> rest;
    for (const auto& d : arr.dims())
        if (std::find(keep.begin(), keep.end(), d.name) == keep.end()) rest.push_back(d.name);

    arr = pretty_levels(arr, a.percent);
    LabeledArray<std::string> cells;
    if (comp == Component::Value) {
        if (!rest.empty() && !(rest.size() == 1 && rest[0] == kNSimName)) {
            std::string r;
            for (const auto& n : rest) r += (r.empty() ? "" : ", ") + n;
            throw ConfigError("value tables can only summarize over n.sim; unplaced dimensions: " + r);
        }
        if (rest.empty()) {
            cells = arr.map([&](double x) { return std::isfinite(x) ? format_fixed(x, a.digits) : format_number(x); });
        } else {
            cells = arr.margin(keep, [&](const std::vector<double>& v) -> std::string {
                const auto f = finite(v);
                if (f.empty()) return "NA";
                return format_fixed(var::huber_mean(f), a.digits) + " (" + format_fixed(var::mad(f), a.digits) + ")";
            });
        }
    } else {
        cells = arr.margin(keep, [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return format_number(s);
        });
    }
    const FlatTable ft = ftable(cells, rows, cols);
    if (a.format == "latex") {
        emit(to_latex_table(ft, store.varlist, {a.fontsize, a.caption, a.label}), a.out);
    } else if (a.format == "csv") {
        emit(csv_string(csv_rows(ft)), a.out);
    } else {
        throw ConfigError("--format must be latex, csv or long-csv");
    }
    return kExitOk;
}

struct PlotArgs {
    std::string in;
    std::vector<std::string> slices;
    std::string rows, cols, x, series;
    std::string ylim = "global";
    std::string panel = "auto";
    bool log_y = false;
    bool huber = false;
    std::vector<std::string> percent;
    std::string out;
};

int cmd_plot(const PlotArgs& a)
{
    const auto res = load(a.in);
    const ResultStore& store = store_or_throw(res);
    auto arr = get_array(store, Component::Value);
    for (const auto& s : a.slices) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--slice expects DIM=LEVEL, got '" + s + "'");
        const std::string dim = s.substr(0, eq), level = s.substr(eq + 1);
        check_dims(arr, {dim}, "--slice");
        const auto& levels = arr.dims()[arr.dim_index(dim)].levels;
        std::string match;
        for (const auto& l : levels) {
            auto lv = parse_double(l), want = parse_double(level);
            if (l == level || (lv && want && *lv == *want)) match = l;
        }
        if (match.empty()) {
            std::string have;
            for (const auto& l : levels) have += (have.empty() ? "" : ", ") + l;
            throw ConfigError("--slice: dimension '" + dim + "' has no level '" + level + "' (levels: " + have + ")");
        }
        arr = arr.slice(dim, match);
    }
    if (a.huber && arr.has_dim(kNSimName)) {
        std::vector<std::string> keep;
        for (const auto& d : arr.dims())
            if (d.name != kNSimName) keep.push_back(d.name);
        arr = arr.margin(keep, [](const std::vector<double>& v) {
            const auto f = finite(v);
            return f.empty() ? std::nan("") : var::huber_mean(f);
        });
    }
    check_dims(arr, {a.rows, a.cols, a.x, a.series}, "plot");
    arr = pretty_levels(arr, a.percent);

    PlotSpec spec;
    spec.row_var = a.rows;
    spec.col_var = a.cols;
    spec.x_var = a.x;
    spec.series_var = a.series;
    if (a.ylim == "global") spec.ylim = PlotSpec::YLim::Global;
    else if (a.ylim == "local") spec.ylim = PlotSpec::YLim::Local;
    else throw ConfigError("--ylim must be global or local");
    if (a.panel == "auto") spec.panel = PlotSpec::Panel::Auto;
    else if (a.panel == "box") spec.panel = PlotSpec::Panel::Box;
    else if (a.panel == "line") spec.panel = PlotSpec::Panel::Line;
    else throw ConfigError("--panel must be auto, box or line");
    spec.y_log = a.log_y;
    spec.y_label = a.huber ? "Huber mean" : "value";
    if (a.out.empty()) throw ConfigError("--out is required");
    const auto out = mayplot_svg(arr, spec, a.out);
    std::cout << "wrote " << a.out << " (" << out.panels << " panels, " << (out.boxes ? "boxplots" : "lines");
    if (out.dropped) std::cout << ", " << out.dropped << " values dropped";
    std::cout << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    // worker mode talks the frame protocol on stdin/stdout; nothing else may print
    if (argc == 2 && std::string(argv[1]) == "__worker") {
        return wire::serve_worker(STDIN_FILENO, STDOUT_FILENO, [](const std::string& name) { return find_study(name); });
    }

    CLI::App app{"Run simulation studies over variable grids and report their results"};
    app.require_subcommand(1);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Run a study from a config file and store the result");
    r->add_option("config", run.config, "Study config (JSON)")->required();
    r->add_option("--backend", run.backend, "seq, threads or procs")->capture_default_str();
    r->add_option("--workers", run.workers, "Worker count (capped by SIMSTUDY_MAX_WORKERS)")->capture_default_str();
    r->add_option("--block-size", run.block_size, "Replications per task; must divide n.sim")->capture_default_str();
    r->add_option("--seed", run.seed, "seq, none, unseeded, or a JSON seed file")->capture_default_str();
    r->add_option("--out", run.out, "Result file; reused when its fingerprint matches");
    r->add_option("--order", run.order, "Virtual grid order: rep (replications of a row together) or grid")
        ->capture_default_str();
    r->add_flag("--keep-seed", run.keep_seed, "Store each sub-job's starting generator state");
    r->add_flag("--monitor", run.monitor, "Print one progress line per sub-job to stderr");
    r->add_flag("--no-load-balancing", run.no_load_balancing, "Assign tasks round-robin instead of on demand");

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "Tabulate one component of a stored result");
    a->add_option("input", an.in, "Result file")->required();
    a->add_option("--component", an.component, "value, error, warning or time")->capture_default_str();
    a->add_option("--rows", an.rows, "Comma-separated row variables");
    a->add_option("--cols", an.cols, "Comma-separated column variables");
    a->add_option("--format", an.format, "latex, csv or long-csv")->capture_default_str();
    a->add_option("--out", an.out, "Output file (default: stdout)");
    a->add_option("--caption", an.caption, "LaTeX caption");
    a->add_option("--label", an.label, "LaTeX label");
    a->add_option("--fontsize", an.fontsize, "LaTeX font size command without backslash");
    a->add_option("--percent", an.percent, "Show these dims' levels as percentages");
    a->add_option("--digits", an.digits, "Decimals of value summaries")->capture_default_str();

    PlotArgs pl;
    auto* p = app.add_subcommand("plot", "Draw a conditioning plot of the value array as SVG");
    p->add_option("input", pl.in, "Result file")->required();
    p->add_option("--slice", pl.slices, "DIM=LEVEL, fixes a dimension (repeatable)");
    p->add_option("--rows", pl.rows, "Panel row variable")->required();
    p->add_option("--cols", pl.cols, "Panel column variable")->required();
    p->add_option("--x", pl.x, "Variable on the x axis")->required();
    p->add_option("--series", pl.series, "Variable drawn as colored series")->required();
    p->add_option("--ylim", pl.ylim, "global or local")->capture_default_str();
    p->add_option("--panel", pl.panel, "auto, box or line")->capture_default_str();
    p->add_flag("--log-y", pl.log_y, "Logarithmic y axis");
    p->add_flag("--huber", pl.huber, "Summarize replications by their Huber mean");
    p->add_option("--percent", pl.percent, "Show these dims' levels as percentages");
    p->add_option("--out", pl.out, "SVG output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (r->parsed()) return cmd_run(run);
        if (a->parsed()) return cmd_analyze(an);
        if (p->parsed()) return cmd_plot(pl);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
