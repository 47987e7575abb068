#include "simstudy/varlist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "simstudy/error.hpp"

namespace simstudy {

std::string_view to_string(VarType t)
{
    switch (t) {
    case VarType::N: return "N";
    case VarType::Frozen: return "frozen";
    case VarType::Grid: return "grid";
    case VarType::Inner: return "inner";
    }
    return "?";
}

std::optional<VarType> parse_var_type(std::string_view s)
{
    if (s == "N") return VarType::N;
    if (s == "frozen") return VarType::Frozen;
    if (s == "grid") return VarType::Grid;
    if (s == "inner") return VarType::Inner;
    return std::nullopt;
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "NaN";
    if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
    if (x == 0.0) return "0";  // also folds -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

double Level::number() const
{
    if (auto p = std::get_if<double>(&value_)) return *p;
    throw ConfigError("level '" + std::get<std::string>(value_) + "' is not numeric");
}

const std::string& Level::text() const
{
    if (auto p = std::get_if<std::string>(&value_)) return *p;
    throw ConfigError("level " + format_number(std::get<double>(value_)) + " is not a string");
}

std::string Level::label() const
{
    if (auto p = std::get_if<double>(&value_)) return format_number(*p);
    return std::get<std::string>(value_);
}

std::vector<std::string> VarSpec::level_labels() const
{
    std::vector<std::string> out;
    out.reserve(levels.size());
    for (const auto& l : levels) out.push_back(l.label());
    return out;
}

PhysicalGrid::PhysicalGrid(std::vector<std::string> columns, std::vector<std::size_t> extents)
    : columns_(std::move(columns)), extents_(std::move(extents))
{
    for (auto e : extents_) rows_ *= e;
}

std::vector<std::size_t> PhysicalGrid::decode(std::size_t row) const
{
    if (row >= rows_) throw Error("grid row " + std::to_string(row) + " out of range");
    std::vector<std::size_t> idx(extents_.size());
    for (std::size_t k = 0; k < extents_.size(); ++k) {
        idx[k] = row % extents_[k];
        row /= extents_[k];
    }
    return idx;
}

std::size_t PhysicalGrid::encode(std::span<const std::size_t> levels) const
{
    if (levels.size() != extents_.size()) throw Error("grid level tuple has wrong arity");
    std::size_t row = 0;
    for (std::size_t k = extents_.size(); k-- > 0;) {
        if (levels[k] >= extents_[k]) throw Error("grid level index out of range");
        row = row * extents_[k] + levels[k];
    }
    return row;
}

VarList& VarList::add(VarSpec spec)
{
    specs_.push_back(std::move(spec));
    return *this;
}

const VarSpec* VarList::find(std::string_view name) const
{
    for (const auto& s : specs_)
        if (s.name == name) return &s;
    return nullptr;
}

const VarSpec& VarList::at(std::string_view name) const
{
    if (auto p = find(name)) return *p;
    throw ConfigError("unknown variable '" + std::string(name) + "'");
}

std::size_t VarList::n_sim() const
{
    for (const auto& s : specs_) {
        if (s.type != VarType::N || s.levels.size() != 1 || !s.levels[0].is_number()) continue;
        double v = s.levels[0].number();
        if (v >= 1 && v == std::floor(v)) return static_cast<std::size_t>(v);
    }
    return 1;
}

VarList VarList::with_n_sim(std::size_t n) const
{
    VarList out = *this;
    for (auto& s : out.specs_) {
        if (s.type == VarType::N) {
            s.levels = {Level(static_cast<double>(n))};
            return out;
        }
    }
    out.specs_.insert(out.specs_.begin(),
                      VarSpec{std::string(kNSimName), VarType::N, {}, {Level(static_cast<double>(n))}, {}});
    return out;
}

VarList VarList::with_type(std::string_view name, VarType t) const
{
    VarList out = *this;
    for (auto& s : out.specs_) {
        if (s.name == name) {
            s.type = t;
            return out;
        }
    }
    throw ConfigError("unknown variable '" + std::string(name) + "'");
}

std::vector<std::string> validate(const VarList& vl)
{
    std::vector<std::string> errs;
    std::set<std::string> seen;
    int n_count = 0;
    for (const auto& s : vl.specs()) {
        const std::string who = "variable '" + s.name + "'";
        if (s.name.empty()) errs.push_back("variable with empty name");
        else if (!seen.insert(s.name).second) errs.push_back("duplicate variable name '" + s.name + "'");
        if (s.name == kNSimName && s.type != VarType::N)
            errs.push_back("'n.sim' is reserved for the N variable");
        switch (s.type) {
        case VarType::N: {
            ++n_count;
            bool ok = s.levels.size() == 1 && s.levels[0].is_number();
            if (ok) {
                double v = s.levels[0].number();
                ok = v >= 1 && v == std::floor(v) && v < 1e15;
            }
            if (!ok) errs.push_back(who + ": N requires exactly one positive integer value");
            break;
        }
        case VarType::Grid:
        case VarType::Inner: {
            if (s.levels.empty()) errs.push_back(who + ": no levels");
            std::set<std::string> labels;
            for (const auto& l : s.levels)
                if (!labels.insert(l.label()).second)
                    errs.push_back(who + ": duplicate level '" + l.label() + "'");
            if (s.frozen) errs.push_back(who + ": only frozen variables carry a payload");
            break;
        }
        case VarType::Frozen:
            if (!s.frozen) errs.push_back(who + ": frozen variable without a value");
            if (!s.levels.empty()) errs.push_back(who + ": frozen variable must not declare levels");
            break;
        }
    }
    if (n_count > 1) errs.push_back("multiple N variables");
    return errs;
}

void require_valid(const VarList& vl)
{
    auto errs = validate(vl);
    if (errs.empty()) return;
    std::string msg = "invalid variable list:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
}

PhysicalGrid mk_grid(const VarList& vl)
{
    std::vector<std::string> cols;
    std::vector<std::size_t> ext;
    for (const auto& s : vl.specs()) {
        if (s.type != VarType::Grid) continue;
        cols.push_back(s.name);
        ext.push_back(s.levels.size());
    }
    return PhysicalGrid(std::move(cols), std::move(ext));
}

std::vector<std::pair<std::string, std::vector<Level>>> get_el(const VarList& vl, VarType t)
{
    std::vector<std::pair<std::string, std::vector<Level>>> out;
    for (const auto& s : vl.specs()) {
        if (s.type != t) continue;
        if (t == VarType::Frozen)
            out.emplace_back(s.name, std::vector<Level>{Level(s.frozen ? s.frozen->display : std::string())});
        else
            out.emplace_back(s.name, s.levels);
    }
    return out;
}

namespace {

std::vector<Dim> dims_of(const VarList& vl, VarType t)
{
    std::vector<Dim> out;
    for (const auto& s : vl.specs())
        if (s.type == t) out.push_back(Dim{s.name, s.level_labels()});
    return out;
}

Dim n_sim_dim(std::size_t n)
{
    Dim d{std::string(kNSimName), {}};
    for (std::size_t i = 1; i <= n; ++i) d.levels.push_back(std::to_string(i));
    return d;
}

}  // namespace

std::vector<Dim> inner_dims(const VarList& vl) { return dims_of(vl, VarType::Inner); }

std::vector<Dim> store_dims(const VarList& vl)
{
    auto dims = dims_of(vl, VarType::Grid);
    if (vl.n_sim() > 1) dims.push_back(n_sim_dim(vl.n_sim()));
    return dims;
}

std::vector<Dim> result_dims(const VarList& vl)
{
    auto dims = inner_dims(vl);
    for (auto& d : store_dims(vl)) dims.push_back(std::move(d));
    return dims;
}

namespace {

Json level_to_json(const Level& l)
{
    if (l.is_number()) return Json(l.number());
    return Json(l.text());
}

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ConfigError(where + ": " + what);
}

Level level_from_json(const Json& j, const std::string& where)
{
    if (j.is_number()) return Level(j.get<double>());
    if (j.is_string()) return Level(j.get<std::string>());
    fail(where, "level must be a number or a string");
}

std::string default_display(const Json& p)
{
    if (p.is_string()) return p.get<std::string>();
    if (p.is_number()) return format_number(p.get<double>());
    if (p.is_array() || p.is_object()) {
        std::string out;
        for (const auto& el : p) {
            if (!out.empty()) out += ", ";
            out += default_display(el);
        }
        return out;
    }
    return p.dump();
}

}  // namespace

Json varlist_to_json(const VarList& vl)
{
    Json arr = Json::array();
    for (const auto& s : vl.specs()) {
        Json j;
        j["name"] = s.name;
        j["type"] = std::string(to_string(s.type));
        j["label"] = s.label.text;
        j["math"] = s.label.math;
        if (s.type == VarType::Frozen) {
            j["value"] = s.frozen ? s.frozen->payload : Json();
            j["display"] = s.frozen ? s.frozen->display : std::string();
        } else if (s.type == VarType::N) {
            j["value"] = s.levels.empty() ? Json() : Json(static_cast<long long>(s.levels[0].number()));
        } else {
            Json vals = Json::array();
            for (const auto& l : s.levels) vals.push_back(level_to_json(l));
            j["values"] = std::move(vals);
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

VarList varlist_from_json(const Json& j)
{
    if (!j.is_array()) fail("variables", "expected an array of variable declarations");
    VarList vl;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& v = j[i];
        const std::string where = "variables[" + std::to_string(i) + "]";
        if (!v.is_object()) fail(where, "expected an object");
        VarSpec s;
        auto name = v.find("name");
        if (name == v.end() || !name->is_string()) fail(where + ".name", "missing or not a string");
        s.name = name->get<std::string>();
        if (auto t = v.find("type"); t != v.end()) {
            if (!t->is_string()) fail(where + ".type", "not a string");
            auto parsed = parse_var_type(t->get<std::string>());
            if (!parsed) fail(where + ".type", "unknown type '" + t->get<std::string>() + "'");
            s.type = *parsed;
        } else {
            s.type = s.name == kNSimName ? VarType::N : VarType::Frozen;
        }
        s.label.text = s.name;
        if (auto l = v.find("label"); l != v.end()) {
            if (!l->is_string()) fail(where + ".label", "not a string");
            s.label.text = l->get<std::string>();
        }
        if (auto m = v.find("math"); m != v.end()) {
            if (!m->is_boolean()) fail(where + ".math", "not a boolean");
            s.label.math = m->get<bool>();
        }
        auto value = v.find("value");
        auto values = v.find("values");
        switch (s.type) {
        case VarType::Frozen: {
            if (value == v.end()) fail(where + ".value", "frozen variable needs a value");
            FrozenValue fv{*value, {}};
            if (auto d = v.find("display"); d != v.end()) {
                if (!d->is_string()) fail(where + ".display", "not a string");
                fv.display = d->get<std::string>();
            } else {
                fv.display = default_display(*value);
            }
            s.frozen = std::move(fv);
            break;
        }
        case VarType::N:
            if (value == v.end() || !value->is_number_integer() || value->get<long long>() < 1)
                fail(where + ".value", "N variable needs a positive integer value");
            s.levels.emplace_back(static_cast<double>(value->get<long long>()));
            break;
        case VarType::Grid:
        case VarType::Inner: {
            const Json* src = values != v.end() ? &*values : (value != v.end() ? &*value : nullptr);
            if (!src) fail(where + ".values", "missing");
            const std::string vw = where + ".values";
            if (src->is_array()) {
                for (std::size_t k = 0; k < src->size(); ++k)
                    s.levels.push_back(level_from_json((*src)[k], vw + "[" + std::to_string(k) + "]"));
            } else {
                s.levels.push_back(level_from_json(*src, vw));
            }
            break;
        }
        }
        vl.add(std::move(s));
    }
    return vl;
}

}  // namespace simstudy
