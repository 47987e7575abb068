#include "simstudy/registry.hpp"

#include <fstream>
#include <map>

#include "simstudy/error.hpp"
#include "simstudy/study_var.hpp"

namespace simstudy {

namespace {

const std::map<std::string, StudyFn>& registry()
{
    static const std::map<std::string, StudyFn> r{
        {"var-copula", var::var_copula_study()},
        {"first-uniform", var::first_uniform_study()},
    };
    return r;
}

}  // namespace

const StudyFn* find_study(const std::string& name)
{
    const auto& r = registry();
    auto it = r.find(name);
    return it == r.end() ? nullptr : &it->second;
}

std::vector<std::string> study_names()
{
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
}

StudyConfig parse_config(const Json& j, const std::string& origin)
{
    if (!j.is_object()) throw ConfigError(origin + ": expected a JSON object at the top level");
    StudyConfig c;
    auto s = j.find("study");
    if (s == j.end() || !s->is_string()) throw ConfigError(origin + ": 'study' is missing or not a string");
    c.study = s->get<std::string>();
    if (!find_study(c.study)) {
        std::string known;
        for (const auto& n : study_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError(origin + ": unknown study '" + c.study + "' (known: " + known + ")");
    }
    auto v = j.find("variables");
    if (v == j.end()) throw ConfigError(origin + ": 'variables' is missing");
    try {
        c.varlist = varlist_from_json(*v);
        require_valid(c.varlist);
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return c;
}

StudyConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, path.string());
}

}  // namespace simstudy
