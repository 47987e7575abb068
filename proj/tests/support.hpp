#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "simstudy/registry.hpp"
#include "simstudy/varlist.hpp"

namespace simstudy::testing {

inline VarList var_study_varlist()
{
    return load_config(std::filesystem::path(SIMSTUDY_CONFIG_DIR) / "var_copula.json").varlist;
}

/// A temporary directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("simstudy-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline VarSpec grid_var(std::string name, std::vector<Level> levels)
{
    VarSpec s;
    s.name = std::move(name);
    s.type = VarType::Grid;
    s.levels = std::move(levels);
    return s;
}

inline VarSpec inner_var(std::string name, std::vector<Level> levels)
{
    auto s = grid_var(std::move(name), std::move(levels));
    s.type = VarType::Inner;
    return s;
}

inline VarSpec n_var(std::size_t n)
{
    VarSpec s;
    s.name = "n.sim";
    s.type = VarType::N;
    s.levels = {Level(static_cast<double>(n))};
    return s;
}

inline VarSpec frozen_var(std::string name, Json payload, std::string display = {})
{
    VarSpec s;
    s.name = std::move(name);
    s.type = VarType::Frozen;
    s.frozen = FrozenValue{std::move(payload), std::move(display)};
    return s;
}

}  // namespace simstudy::testing
