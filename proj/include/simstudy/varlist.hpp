#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace simstudy {

using Json = nlohmann::ordered_json;

/// Name of the implicit replication dimension.
inline constexpr std::string_view kNSimName = "n.sim";

enum class VarType { N, Frozen, Grid, Inner };

std::string_view to_string(VarType t);
std::optional<VarType> parse_var_type(std::string_view s);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_number(double x);

/// One level of a grid, inner or N variable.
class Level {
public:
    Level(double x) : value_(x) {}
    Level(int x) : value_(static_cast<double>(x)) {}
    Level(std::string s) : value_(std::move(s)) {}
    Level(const char* s) : value_(std::string(s)) {}

    bool is_number() const { return std::holds_alternative<double>(value_); }
    double number() const;
    const std::string& text() const;

    /// Canonical display label (dimnames, persistence, tables, plots).
    std::string label() const;

    friend bool operator==(const Level&, const Level&) = default;

private:
    std::variant<double, std::string> value_;
};

/// Label text used by the table and plot emitters. Math labels are raw
/// LaTeX math passed through verbatim; plain labels get escaped.
struct Label {
    std::string text;
    bool math = false;

    friend bool operator==(const Label&, const Label&) = default;
};

/// Payload of a frozen variable, handed to the study function untouched.
struct FrozenValue {
    Json payload;
    std::string display;

    friend bool operator==(const FrozenValue&, const FrozenValue&) = default;
};

struct VarSpec {
    std::string name;
    VarType type = VarType::Frozen;
    Label label;
    std::vector<Level> levels;         // grid, inner, N (single level)
    std::optional<FrozenValue> frozen;  // frozen only

    std::vector<std::string> level_labels() const;

    friend bool operator==(const VarSpec&, const VarSpec&) = default;
};

/// A named dimension with its level labels.
struct Dim {
    std::string name;
    std::vector<std::string> levels;

    std::size_t size() const { return levels.size(); }
    friend bool operator==(const Dim&, const Dim&) = default;
};

/// Physical grid: rows are level-index tuples over the grid variables, in
/// odometer order with the first declared grid variable varying fastest.
class PhysicalGrid {
public:
    PhysicalGrid(std::vector<std::string> columns, std::vector<std::size_t> extents);

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::size_t>& extents() const { return extents_; }
    std::size_t rows() const { return rows_; }

    std::vector<std::size_t> decode(std::size_t row) const;
    std::size_t encode(std::span<const std::size_t> levels) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::size_t> extents_;
    std::size_t rows_ = 1;
};

/// Ordered, typed declaration of all study variables.
class VarList {
public:
    VarList() = default;
    explicit VarList(std::vector<VarSpec> specs) : specs_(std::move(specs)) {}

    /// Appends a declaration; no validation happens here (see validate()).
    VarList& add(VarSpec spec);

    const std::vector<VarSpec>& specs() const { return specs_; }
    const VarSpec* find(std::string_view name) const;
    const VarSpec& at(std::string_view name) const;

    /// Replication count; 1 when no N variable is declared.
    std::size_t n_sim() const;

    /// Copy with the N variable set to `n` (added when absent).
    VarList with_n_sim(std::size_t n) const;

    /// Copy with the named variable's type changed (e.g. inner -> grid).
    VarList with_type(std::string_view name, VarType t) const;

    friend bool operator==(const VarList&, const VarList&) = default;

private:
    std::vector<VarSpec> specs_;
};

/// All invariant violations; empty means the list is usable.
std::vector<std::string> validate(const VarList& vl);

/// Throws ConfigError listing every violation.
void require_valid(const VarList& vl);

PhysicalGrid mk_grid(const VarList& vl);

/// Values of every variable of type `t`, in declaration order.
std::vector<std::pair<std::string, std::vector<Level>>> get_el(const VarList& vl, VarType t);

/// Result-array dims: inner vars, then grid vars, then n.sim when > 1.
std::vector<Dim> result_dims(const VarList& vl);

/// Grid vars then n.sim (when > 1): the dims of the record array.
std::vector<Dim> store_dims(const VarList& vl);

std::vector<Dim> inner_dims(const VarList& vl);

/// Canonical JSON form; stable key order, used for fingerprints and transport.
Json varlist_to_json(const VarList& vl);
VarList varlist_from_json(const Json& j);

}  // namespace simstudy
