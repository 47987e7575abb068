#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simstudy/executor.hpp"

namespace simstudy {

/// Built-in study functions, looked up by name ("var-copula",
/// "first-uniform"). Returns nullptr for unknown names.
const StudyFn* find_study(const std::string& name);
std::vector<std::string> study_names();

/// A study configuration document: {"study": NAME, "variables": [...]}.
struct StudyConfig {
    std::string study;
    VarList varlist;
};

/// Parses and validates a configuration; ConfigError messages carry the
/// file name and the location of the offending entry.
StudyConfig parse_config(const Json& j, const std::string& origin = "config");
StudyConfig load_config(const std::filesystem::path& path);

}  // namespace simstudy
