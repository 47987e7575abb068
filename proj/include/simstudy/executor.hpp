#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simstudy/record.hpp"
#include "simstudy/results.hpp"
#include "simstudy/rng.hpp"
#include "simstudy/seeding.hpp"
#include "simstudy/varlist.hpp"

namespace simstudy {

/// Collects warnings emitted by a study function, in emission order.
class WarnSink {
public:
    void warn(std::string message) { messages_.push_back(std::move(message)); }
    const std::vector<std::string>& messages() const { return messages_; }
    std::vector<std::string> take() { return std::move(messages_); }

private:
    std::vector<std::string> messages_;
};

/// Everything a study function sees for one sub-job: the grid row's levels,
/// the inner and frozen variables, a private generator and the warning sink.
class SubJobContext {
public:
    SubJobContext(const VarList& vl, const PhysicalGrid& grid, VirtualIndex index, Rng& rng, WarnSink& sink);

    const VarList& varlist() const { return vl_; }
    VirtualIndex index() const { return index_; }

    /// Level of grid variable `name` in this sub-job's row.
    const Level& grid(std::string_view name) const;
    double number(std::string_view name) const { return grid(name).number(); }
    const std::string& text(std::string_view name) const { return grid(name).text(); }

    const Json& frozen(std::string_view name) const;

    /// Declaration of inner variable `name` (all of its levels).
    const VarSpec& inner(std::string_view name) const;

    bool is_grid(std::string_view name) const;
    bool is_inner(std::string_view name) const;

    Rng& rng() { return rng_; }
    void warn(std::string message) { sink_.warn(std::move(message)); }

private:
    const VarList& vl_;
    const PhysicalGrid& grid_;
    VirtualIndex index_;
    std::vector<std::size_t> levels_;
    Rng& rng_;
    WarnSink& sink_;
};

using StudyFn = std::function<Value(SubJobContext&)>;

/// Returns a monotonic time in milliseconds; differences are what count.
using Timer = std::function<double()>;
Timer steady_timer();

using Monitor = std::function<void(const VirtualIndex&, const SubJobRecord&)>;

/// Writes "i=<linear>, time=<ms>ms" to standard error, one line per sub-job.
Monitor stderr_monitor();

struct CallOutcome {
    std::optional<Value> value;
    std::optional<ErrorInfo> error;
    std::vector<std::string> warnings;
    double time_ms = 0.0;
};

/// Calls `fn` and captures value, error, warnings and elapsed time.
/// Nothing thrown by `fn` escapes.
CallOutcome do_call_we(const StudyFn& fn, SubJobContext& ctx, WarnSink& sink, const Timer& timer);

/// Parameters of one sub-job that are fixed for the whole study.
struct SubJobSetup {
    const VarList& varlist;
    const PhysicalGrid& grid;
    const SeedSpec& seed;
    bool keep_seed = false;
    const Timer& timer;
};

/// Runs one row of the virtual grid. `carry` is the worker's own stream,
/// used (and advanced) when the seeding discipline does not reseed.
SubJobRecord subjob(const VirtualIndex& vidx, const SubJobSetup& setup, StreamState& carry,
                    const StudyFn& fn, const Monitor& monitor = {});

/// Same, but with the starting state already resolved (nullopt = use carry).
SubJobRecord subjob_with_state(const VirtualIndex& vidx, const SubJobSetup& setup,
                               const std::optional<StreamState>& start, bool record_seed,
                               StreamState& carry, const StudyFn& fn);

/// `count` consecutive replications of one grid row.
struct BlockTask {
    std::size_t row = 0;
    std::size_t first_rep = 1;
    std::size_t count = 1;

    friend bool operator==(const BlockTask&, const BlockTask&) = default;
};

/// Splits the virtual grid into blocks, enumerated in virtual-grid order.
/// Throws ConfigError unless 1 <= block_size <= n_sim and block_size | n_sim.
std::vector<BlockTask> partition_blocks(std::size_t n_grid, std::size_t n_sim, std::size_t block_size,
                                        bool rep_first);

struct BackendSpec {
    enum class Kind { Sequential, ThreadPool, ProcessPool };

    Kind kind = Kind::Sequential;
    std::size_t workers = 1;
    bool load_balancing = true;
    std::size_t block_size = 1;
    /// ProcessPool only: argv used to start a worker (the worker reads frames
    /// on stdin and answers on stdout). Empty: fork the current process and
    /// serve the in-memory study function.
    std::vector<std::string> worker_command;

    static BackendSpec sequential() { return {}; }
    static BackendSpec threads(std::size_t n) { return with(Kind::ThreadPool, n); }
    static BackendSpec processes(std::size_t n) { return with(Kind::ProcessPool, n); }

private:
    static BackendSpec with(Kind k, std::size_t n)
    {
        BackendSpec s;
        s.kind = k;
        s.workers = n;
        return s;
    }
};

std::string_view to_string(BackendSpec::Kind k);

struct RunOptions {
    SeedSpec seed = SeedSpec::seq();
    BackendSpec backend;
    std::optional<std::filesystem::path> cache_path;
    bool keep_seed = false;
    bool rep_first = true;
    /// Keep the raw record list instead of building the array.
    bool raw = false;
    Monitor monitor;
    Timer timer;
    /// Registry name; recorded in the store and sent to process workers.
    std::string study_id = "anonymous";
    /// Set when the result came from the cache instead of a computation.
    bool* cache_hit = nullptr;
};

/// Executes every sub-job of the study and assembles (and optionally
/// persists) the result. Sub-job failures are recorded, never thrown.
/// Throws BackendError when a backend fails, CacheInvalidError when the
/// cache file belongs to another setup, ConfigError for bad inputs.
SimResult run_study(const VarList& vl, const StudyFn& fn, const RunOptions& opts = {});

/// Records in virtual order, before assembly; used by all backends.
std::vector<SubJobRecord> execute_virtual_grid(const VarList& vl, const StudyFn& fn, const RunOptions& opts);

}  // namespace simstudy
