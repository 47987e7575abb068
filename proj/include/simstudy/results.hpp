#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "simstudy/record.hpp"
#include "simstudy/seeding.hpp"
#include "simstudy/varlist.hpp"

namespace simstudy {

inline constexpr int kFormatVersion = 1;

struct StoreMeta {
    int format_version = kFormatVersion;
    bool rep_first = true;
    SeedSpec seed = SeedSpec::seq();
    bool keep_seed = false;
    std::string created;  // ISO-8601 UTC; empty when stripped
    std::string study = "anonymous";
};

/// Array of sub-job records over the grid dims (+ n.sim), in odometer order.
struct ResultStore {
    VarList varlist;
    std::vector<Dim> dims;
    /// Common shape of every present value (the inner dims).
    std::vector<Dim> value_dims;
    std::vector<SubJobRecord> records;
    std::string fingerprint;
    StoreMeta meta;

    const SubJobRecord& at(std::span<const std::size_t> idx) const;
};

/// Kept when records cannot be arranged in an array: the untouched records
/// in virtual-grid order plus the reason.
struct RawFallback {
    VarList varlist;
    std::vector<Dim> dims;
    std::vector<SubJobRecord> records;
    std::string diagnostic;
    std::string fingerprint;
    StoreMeta meta;
};

using SimResult = std::variant<ResultStore, RawFallback>;

const ResultStore& store_or_throw(const SimResult& r);

/// FNV-1a 64 over the canonical serialization of
/// {varlist, n_sim, rep_first, seed descriptor, study}; 16 hex digits.
std::string fingerprint(const VarList& vl, bool rep_first, const SeedSpec& seed, std::string_view study);

std::uint64_t fnv1a64(std::string_view bytes);

/// Arranges virtual-order records into a ResultStore, or returns a
/// RawFallback when value shapes disagree. Throws on a length mismatch.
SimResult assemble(std::vector<SubJobRecord> records, const VarList& vl, const StoreMeta& meta);

/// Records of `store` back in virtual-grid order.
std::vector<SubJobRecord> flatten(const ResultStore& store);

struct SaveOptions {
    /// When false, time_ms fields and the creation timestamp are written as
    /// zero/empty so identical computations serialize to identical bytes.
    bool include_times = true;
};

std::string serialize(const SimResult& r, const SaveOptions& opts = {});
SimResult deserialize(std::string_view text);

void save(const SimResult& r, const std::filesystem::path& path, const SaveOptions& opts = {});
SimResult load(const std::filesystem::path& path);

/// nullopt when `path` does not exist; throws CacheInvalidError when it holds
/// a result with a different fingerprint and FormatError when unreadable.
std::optional<SimResult> maybe_read(const std::filesystem::path& path, std::string_view expected_fingerprint);

struct EqualityReport {
    bool equal = true;
    std::string difference;  // first differing cell, empty when equal
    /// Mean relative difference of all values, sum|a-b| / sum|a|.
    double mean_relative_difference = 0.0;

    explicit operator bool() const { return equal; }
};

/// Compares dims, values (bitwise), errors, warnings and seeds; ignores
/// times and timestamps.
EqualityReport do_res_equal(const ResultStore& a, const ResultStore& b);

Json record_to_json(const SubJobRecord& r, bool include_time = true);
SubJobRecord record_from_json(const Json& j);

Json double_to_json(double x);
double double_from_json(const Json& j);

}  // namespace simstudy
