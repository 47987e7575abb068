#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simstudy/labeled_array.hpp"

namespace simstudy {

/// Value computed by a study function: a labeled array over the inner
/// dimensions, or a rank-0 array holding a scalar.
using Value = LabeledArray<double>;

inline Value scalar_value(double x) { return Value({}, std::vector<double>{x}); }

struct ErrorInfo {
    std::string message;
    /// "study" for failures raised by the study function, "harness" for
    /// faults inside the capture machinery itself.
    std::string kind = "study";

    friend bool operator==(const ErrorInfo&, const ErrorInfo&) = default;
};

/// Outcome of one sub-job. Exactly one of value/error is present.
struct SubJobRecord {
    std::optional<Value> value;
    std::optional<ErrorInfo> error;
    std::vector<std::string> warnings;
    double time_ms = 0.0;
    std::optional<std::string> seed;  // hex StreamState at sub-job start
};

/// Position of a sub-job in the virtual grid (n_G rows x n_sim replications).
struct VirtualIndex {
    std::size_t linear = 0;
    std::size_t row = 0;  // physical grid row, 0-based
    std::size_t rep = 1;  // replication, 1-based

    friend bool operator==(const VirtualIndex&, const VirtualIndex&) = default;
};

/// rep_first: linear = row*n_sim + rep-1; otherwise linear = (rep-1)*n_G + row.
VirtualIndex encode_virtual(std::size_t row, std::size_t rep, std::size_t n_grid, std::size_t n_sim, bool rep_first);
VirtualIndex decode_virtual(std::size_t linear, std::size_t n_grid, std::size_t n_sim, bool rep_first);

}  // namespace simstudy
