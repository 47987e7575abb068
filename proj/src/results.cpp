#include "simstudy/results.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "simstudy/error.hpp"

namespace simstudy {

namespace {

constexpr std::string_view kFormatName = "simstudy-result";

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json dims_to_json(const std::vector<Dim>& dims)
{
    Json arr = Json::array();
    for (const auto& d : dims) arr.push_back(Json{{"name", d.name}, {"levels", d.levels}});
    return arr;
}

std::vector<Dim> dims_from_json(const Json& j)
{
    if (!j.is_array()) throw FormatError("dims: expected an array");
    std::vector<Dim> out;
    for (const auto& d : j) {
        if (!d.is_object() || !d.contains("name") || !d.contains("levels"))
            throw FormatError("dims: each entry needs 'name' and 'levels'");
        out.push_back(Dim{d["name"].get<std::string>(), d["levels"].get<std::vector<std::string>>()});
    }
    return out;
}

std::string describe_dims(const std::vector<Dim>& dims)
{
    std::string s = "[";
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k) s += ", ";
        s += dims[k].name + ":" + std::to_string(dims[k].size());
    }
    return s + "]";
}

std::string cell_path(const std::vector<Dim>& dims, std::size_t lin)
{
    std::string s;
    for (const auto& d : dims) {
        if (!s.empty()) s += ", ";
        s += d.name + "=" + d.levels[lin % d.size()];
        lin /= d.size();
    }
    return s.empty() ? "<scalar>" : s;
}

bool same_bits(double a, double b)
{
    if (std::isnan(a) && std::isnan(b)) return true;
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

const SubJobRecord& ResultStore::at(std::span<const std::size_t> idx) const
{
    std::size_t lin = 0;
    for (std::size_t k = dims.size(); k-- > 0;) lin = lin * dims[k].size() + idx[k];
    return records.at(lin);
}

const ResultStore& store_or_throw(const SimResult& r)
{
    if (auto s = std::get_if<ResultStore>(&r)) return *s;
    throw Error("result is a raw record list: " + std::get<RawFallback>(r).diagnostic);
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint(const VarList& vl, bool rep_first, const SeedSpec& seed, std::string_view study)
{
    Json j;
    j["varlist"] = varlist_to_json(vl);
    j["n_sim"] = vl.n_sim();
    j["rep_first"] = rep_first;
    j["seed"] = seed.to_json();
    j["study"] = std::string(study);
    return hex64(fnv1a64(j.dump()));
}

Json double_to_json(double x)
{
    if (std::isnan(x)) return "NaN";
    if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
    return x;
}

double double_from_json(const Json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "NaN") return std::nan("");
        if (s == "Inf") return INFINITY;
        if (s == "-Inf") return -INFINITY;
    }
    throw FormatError("expected a number or one of \"NaN\", \"Inf\", \"-Inf\"");
}

Json record_to_json(const SubJobRecord& r, bool include_time)
{
    Json j;
    if (r.value) {
        Json data = Json::array();
        for (double x : r.value->data()) data.push_back(double_to_json(x));
        j["value"] = Json{{"dims", dims_to_json(r.value->dims())}, {"data", std::move(data)}};
    } else {
        j["value"] = nullptr;
    }
    j["error"] = r.error ? Json{{"message", r.error->message}, {"kind", r.error->kind}} : Json();
    j["warnings"] = r.warnings;
    j["time_ms"] = include_time ? double_to_json(r.time_ms) : Json(0.0);
    j["seed"] = r.seed ? Json(*r.seed) : Json();
    return j;
}

SubJobRecord record_from_json(const Json& j)
{
    if (!j.is_object()) throw FormatError("record: expected an object");
    SubJobRecord r;
    try {
        if (const auto& v = j.at("value"); !v.is_null()) {
            std::vector<double> data;
            for (const auto& x : v.at("data")) data.push_back(double_from_json(x));
            r.value = Value(dims_from_json(v.at("dims")), std::move(data));
        }
        if (const auto& e = j.at("error"); !e.is_null())
            r.error = ErrorInfo{e.at("message").get<std::string>(), e.at("kind").get<std::string>()};
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.time_ms = double_from_json(j.at("time_ms"));
        if (const auto& s = j.at("seed"); !s.is_null()) r.seed = s.get<std::string>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("record: ") + e.what());
    } catch (const Error& e) {
        throw FormatError(std::string("record: ") + e.what());
    }
    if (r.value.has_value() == r.error.has_value())
        throw FormatError("record: exactly one of value and error must be present");
    return r;
}

SimResult assemble(std::vector<SubJobRecord> records, const VarList& vl, const StoreMeta& meta)
{
    const auto grid = mk_grid(vl);
    const std::size_t n_grid = grid.rows();
    const std::size_t n_sim = vl.n_sim();
    if (records.size() != n_grid * n_sim)
        throw Error("assemble: got " + std::to_string(records.size()) + " records, expected " +
                    std::to_string(n_grid * n_sim));

    const std::string fp = fingerprint(vl, meta.rep_first, meta.seed, meta.study);
    const auto dims = store_dims(vl);

    // majority value shape; ties go to the first shape seen
    std::vector<std::vector<Dim>> shapes;
    std::vector<std::size_t> counts;
    for (const auto& r : records) {
        if (!r.value) continue;
        const auto& d = r.value->dims();
        std::size_t k = 0;
        while (k < shapes.size() && shapes[k] != d) ++k;
        if (k == shapes.size()) {
            shapes.push_back(d);
            counts.push_back(0);
        }
        ++counts[k];
    }
    std::vector<Dim> signature = inner_dims(vl);
    if (!shapes.empty()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < shapes.size(); ++k)
            if (counts[k] > counts[best]) best = k;
        signature = shapes[best];
    }
    for (std::size_t v = 0; v < records.size(); ++v) {
        const auto& r = records[v];
        if (r.value && r.value->dims() != signature) {
            const auto vi = decode_virtual(v, n_grid, n_sim, meta.rep_first);
            const std::size_t lin = vi.row + n_grid * (vi.rep - 1);
            RawFallback raw;
            raw.varlist = vl;
            raw.dims = dims;
            raw.diagnostic = "value shape " + describe_dims(r.value->dims()) + " at " + cell_path(dims, lin) +
                             " differs from the common shape " + describe_dims(signature);
            raw.records = std::move(records);
            raw.fingerprint = fp;
            raw.meta = meta;
            return raw;
        }
    }

    ResultStore store;
    store.varlist = vl;
    store.dims = dims;
    store.value_dims = std::move(signature);
    store.records.resize(records.size());
    for (std::size_t v = 0; v < records.size(); ++v) {
        const auto vi = decode_virtual(v, n_grid, n_sim, meta.rep_first);
        store.records[vi.row + n_grid * (vi.rep - 1)] = std::move(records[v]);
    }
    store.fingerprint = fp;
    store.meta = meta;
    return store;
}

std::vector<SubJobRecord> flatten(const ResultStore& store)
{
    const std::size_t n_grid = mk_grid(store.varlist).rows();
    const std::size_t n_sim = store.varlist.n_sim();
    std::vector<SubJobRecord> out(store.records.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        const auto vi = decode_virtual(v, n_grid, n_sim, store.meta.rep_first);
        out[v] = store.records.at(vi.row + n_grid * (vi.rep - 1));
    }
    return out;
}

namespace {

Json meta_to_json(const StoreMeta& m, bool include_times)
{
    Json j;
    j["rep_first"] = m.rep_first;
    j["seed"] = m.seed.to_json();
    j["keep_seed"] = m.keep_seed;
    j["created"] = include_times ? m.created : std::string();
    j["study"] = m.study;
    return j;
}

StoreMeta meta_from_json(const Json& j, int version)
{
    StoreMeta m;
    m.format_version = version;
    m.rep_first = j.at("rep_first").get<bool>();
    m.seed = SeedSpec::from_json(j.at("seed"));
    m.keep_seed = j.at("keep_seed").get<bool>();
    m.created = j.at("created").get<std::string>();
    m.study = j.at("study").get<std::string>();
    return m;
}

}  // namespace

std::string serialize(const SimResult& r, const SaveOptions& opts)
{
    const bool is_raw = std::holds_alternative<RawFallback>(r);
    const auto& meta = is_raw ? std::get<RawFallback>(r).meta : std::get<ResultStore>(r).meta;
    const auto& vl = is_raw ? std::get<RawFallback>(r).varlist : std::get<ResultStore>(r).varlist;
    const auto& dims = is_raw ? std::get<RawFallback>(r).dims : std::get<ResultStore>(r).dims;
    const auto& fp = is_raw ? std::get<RawFallback>(r).fingerprint : std::get<ResultStore>(r).fingerprint;
    const auto& records = is_raw ? std::get<RawFallback>(r).records : std::get<ResultStore>(r).records;

    std::ostringstream os;
    os << "{\n";
    os << "  \"format\": " << Json(kFormatName).dump() << ",\n";
    os << "  \"version\": " << kFormatVersion << ",\n";
    os << "  \"kind\": " << Json(is_raw ? "raw" : "array").dump() << ",\n";
    os << "  \"fingerprint\": " << Json(fp).dump() << ",\n";
    os << "  \"meta\": " << meta_to_json(meta, opts.include_times).dump() << ",\n";
    os << "  \"varlist\": " << varlist_to_json(vl).dump() << ",\n";
    os << "  \"dims\": " << dims_to_json(dims).dump() << ",\n";
    if (is_raw)
        os << "  \"diagnostic\": " << Json(std::get<RawFallback>(r).diagnostic).dump() << ",\n";
    else
        os << "  \"value_dims\": " << dims_to_json(std::get<ResultStore>(r).value_dims).dump() << ",\n";
    os << "  \"records\": [";
    for (std::size_t i = 0; i < records.size(); ++i)
        os << (i ? ",\n    " : "\n    ") << record_to_json(records[i], opts.include_times).dump();
    os << (records.empty() ? "]\n" : "\n  ]\n");
    os << "}\n";
    return os.str();
}

SimResult deserialize(std::string_view text)
{
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string("result file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", std::string()) != kFormatName)
            throw FormatError("not a simstudy result file");
        const int version = j.at("version").get<int>();
        if (version != kFormatVersion) throw FormatError("unsupported result format version " + std::to_string(version));
        const auto kind = j.at("kind").get<std::string>();
        StoreMeta meta = meta_from_json(j.at("meta"), version);
        VarList vl = varlist_from_json(j.at("varlist"));
        auto dims = dims_from_json(j.at("dims"));
        std::vector<SubJobRecord> records;
        for (const auto& rj : j.at("records")) records.push_back(record_from_json(rj));
        const auto fp = j.at("fingerprint").get<std::string>();
        if (kind == "raw") {
            RawFallback raw{std::move(vl), std::move(dims), std::move(records),
                            j.at("diagnostic").get<std::string>(), fp, std::move(meta)};
            return raw;
        }
        if (kind != "array") throw FormatError("unknown result kind '" + kind + "'");
        ResultStore s;
        s.varlist = std::move(vl);
        s.dims = std::move(dims);
        s.value_dims = dims_from_json(j.at("value_dims"));
        s.records = std::move(records);
        s.fingerprint = fp;
        s.meta = std::move(meta);
        if (s.records.size() != LabeledArray<char>::cell_count(s.dims))
            throw FormatError("record count does not match dims " + describe_dims(s.dims));
        return s;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("malformed result file: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("malformed result file: ") + e.what());
    }
}

void save(const SimResult& r, const std::filesystem::path& path, const SaveOptions& opts)
{
    const std::string text = serialize(r, opts);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    if (!os) throw Error("failed writing '" + path.string() + "'");
}

SimResult load(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        return deserialize(ss.str());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::optional<SimResult> maybe_read(const std::filesystem::path& path, std::string_view expected_fingerprint)
{
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    auto r = load(path);
    const auto& fp = std::visit([](const auto& x) -> const std::string& { return x.fingerprint; }, r);
    if (fp != expected_fingerprint)
        throw CacheInvalidError("cache '" + path.string() + "' has fingerprint " + fp + " but this study has " +
                                std::string(expected_fingerprint) + "; remove the file or change the output path");
    return r;
}

EqualityReport do_res_equal(const ResultStore& a, const ResultStore& b)
{
    EqualityReport rep;
    auto differ = [&](std::string what) {
        if (rep.equal) {
            rep.equal = false;
            rep.difference = std::move(what);
        }
    };
    if (a.dims != b.dims) {
        differ("dims differ: " + describe_dims(a.dims) + " vs " + describe_dims(b.dims));
        return rep;
    }
    if (a.value_dims != b.value_dims)
        differ("value dims differ: " + describe_dims(a.value_dims) + " vs " + describe_dims(b.value_dims));
    if (a.records.size() != b.records.size()) {
        differ("record counts differ");
        return rep;
    }

    double abs_diff = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& ra = a.records[i];
        const auto& rb = b.records[i];
        const std::string at = cell_path(a.dims, i);
        if (ra.value.has_value() != rb.value.has_value()) {
            differ(at + ": value present in only one result");
        } else if (ra.value) {
            if (ra.value->dims() != rb.value->dims()) {
                differ(at + ": value shapes differ");
            } else {
                const auto& da = ra.value->data();
                const auto& db = rb.value->data();
                for (std::size_t k = 0; k < da.size(); ++k) {
                    if (std::isfinite(da[k]) && std::isfinite(db[k])) {
                        abs_diff += std::abs(da[k] - db[k]);
                        abs_sum += std::abs(da[k]);
                    }
                    if (!same_bits(da[k], db[k])) {
                        char buf[96];
                        std::snprintf(buf, sizeof buf, "%.17g vs %.17g", da[k], db[k]);
                        const std::string inner = ra.value->rank() ? " [" + cell_path(ra.value->dims(), k) + "]" : "";
                        differ(at + ": value" + inner + " " + buf);
                    }
                }
            }
        }
        if (ra.error != rb.error) differ(at + ": errors differ");
        if (ra.warnings != rb.warnings) differ(at + ": warnings differ");
        if (ra.seed != rb.seed) differ(at + ": seeds differ");
    }
    rep.mean_relative_difference = abs_sum > 0 ? abs_diff / abs_sum : (abs_diff > 0 ? INFINITY : 0.0);
    if (!rep.equal && rep.mean_relative_difference > 0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " (mean relative difference: %.9g)", rep.mean_relative_difference);
        rep.difference += buf;
    }
    return rep;
}

}  // namespace simstudy
