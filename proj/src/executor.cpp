#include "simstudy/executor.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "backends.hpp"
#include "simstudy/error.hpp"

namespace simstudy {

SubJobContext::SubJobContext(const VarList& vl, const PhysicalGrid& grid, VirtualIndex index, Rng& rng,
                             WarnSink& sink)
    : vl_(vl), grid_(grid), index_(index), levels_(grid.decode(index.row)), rng_(rng), sink_(sink)
{
}

const Level& SubJobContext::grid(std::string_view name) const
{
    const auto& cols = grid_.columns();
    for (std::size_t k = 0; k < cols.size(); ++k)
        if (cols[k] == name) return vl_.at(name).levels[levels_[k]];
    throw ConfigError("'" + std::string(name) + "' is not a grid variable");
}

const Json& SubJobContext::frozen(std::string_view name) const
{
    const auto& s = vl_.at(name);
    if (s.type != VarType::Frozen || !s.frozen) throw ConfigError("'" + std::string(name) + "' is not a frozen variable");
    return s.frozen->payload;
}

const VarSpec& SubJobContext::inner(std::string_view name) const
{
    const auto& s = vl_.at(name);
    if (s.type != VarType::Inner) throw ConfigError("'" + std::string(name) + "' is not an inner variable");
    return s;
}

bool SubJobContext::is_grid(std::string_view name) const
{
    const auto* s = vl_.find(name);
    return s && s->type == VarType::Grid;
}

bool SubJobContext::is_inner(std::string_view name) const
{
    const auto* s = vl_.find(name);
    return s && s->type == VarType::Inner;
}

Timer steady_timer()
{
    return [] {
        using namespace std::chrono;
        return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
    };
}

Monitor stderr_monitor()
{
    return [](const VirtualIndex& v, const SubJobRecord& r) {
        std::fprintf(stderr, "i=%zu, time=%.0fms\n", v.linear, r.time_ms);
    };
}

CallOutcome do_call_we(const StudyFn& fn, SubJobContext& ctx, WarnSink& sink, const Timer& timer)
{
    CallOutcome out;
    try {
        const Timer& clock = timer ? timer : steady_timer();
        const double t0 = clock();
        try {
            out.value = fn(ctx);
        } catch (const std::exception& e) {
            out.error = ErrorInfo{e.what(), "study"};
        } catch (...) {
            out.error = ErrorInfo{"unknown exception", "study"};
        }
        const double t1 = clock();
        const double dt = t1 - t0;
        out.time_ms = std::isfinite(dt) && dt > 0 ? dt : 0.0;
        out.warnings = sink.take();
    } catch (const std::exception& e) {
        out.value.reset();
        out.error = ErrorInfo{e.what(), "harness"};
    } catch (...) {
        out.value.reset();
        out.error = ErrorInfo{"unknown harness fault", "harness"};
    }
    if (out.error) out.value.reset();
    return out;
}

SubJobRecord subjob_with_state(const VirtualIndex& vidx, const SubJobSetup& setup,
                               const std::optional<StreamState>& start, bool record_seed,
                               StreamState& carry, const StudyFn& fn)
{
    const StreamState st = start ? *start : carry;
    Rng rng(st);
    WarnSink sink;
    SubJobRecord rec;
    try {
        SubJobContext ctx(setup.varlist, setup.grid, vidx, rng, sink);
        auto out = do_call_we(fn, ctx, sink, setup.timer);
        rec.value = std::move(out.value);
        rec.error = std::move(out.error);
        rec.warnings = std::move(out.warnings);
        rec.time_ms = out.time_ms;
    } catch (const std::exception& e) {
        rec.error = ErrorInfo{e.what(), "harness"};
    }
    if (!start) carry = rng.state();
    if (record_seed) rec.seed = st.to_hex();
    return rec;
}

SubJobRecord subjob(const VirtualIndex& vidx, const SubJobSetup& setup, StreamState& carry, const StudyFn& fn,
                    const Monitor& monitor)
{
    const auto start = seed_for(setup.seed, vidx.rep);
    const bool record_seed = setup.keep_seed && setup.seed.kind() != SeedSpec::Kind::Unseeded;
    auto rec = subjob_with_state(vidx, setup, start, record_seed, carry, fn);
    if (monitor) monitor(vidx, rec);
    return rec;
}

VirtualIndex encode_virtual(std::size_t row, std::size_t rep, std::size_t n_grid, std::size_t n_sim, bool rep_first)
{
    if (row >= n_grid || rep < 1 || rep > n_sim) throw Error("virtual index out of range");
    const std::size_t lin = rep_first ? row * n_sim + (rep - 1) : (rep - 1) * n_grid + row;
    return {lin, row, rep};
}

VirtualIndex decode_virtual(std::size_t linear, std::size_t n_grid, std::size_t n_sim, bool rep_first)
{
    if (linear >= n_grid * n_sim) throw Error("virtual index out of range");
    if (rep_first) return {linear, linear / n_sim, linear % n_sim + 1};
    return {linear, linear % n_grid, linear / n_grid + 1};
}

std::vector<BlockTask> partition_blocks(std::size_t n_grid, std::size_t n_sim, std::size_t block_size,
                                        bool rep_first)
{
    if (block_size < 1 || block_size > n_sim || n_sim % block_size != 0)
        throw ConfigError("block size " + std::to_string(block_size) + " must divide n.sim = " + std::to_string(n_sim));
    const std::size_t per_row = n_sim / block_size;
    std::vector<BlockTask> out;
    out.reserve(n_grid * per_row);
    if (rep_first) {
        for (std::size_t r = 0; r < n_grid; ++r)
            for (std::size_t b = 0; b < per_row; ++b) out.push_back({r, b * block_size + 1, block_size});
    } else {
        for (std::size_t b = 0; b < per_row; ++b)
            for (std::size_t r = 0; r < n_grid; ++r) out.push_back({r, b * block_size + 1, block_size});
    }
    return out;
}

std::string_view to_string(BackendSpec::Kind k)
{
    switch (k) {
    case BackendSpec::Kind::Sequential: return "sequential";
    case BackendSpec::Kind::ThreadPool: return "threads";
    case BackendSpec::Kind::ProcessPool: return "procs";
    }
    return "?";
}

namespace detail {

void run_block(const BlockTask& b, const BackendContext& bc, StreamState& carry, std::vector<SubJobRecord>& out)
{
    for (std::size_t k = 0; k < b.count; ++k) {
        const auto v = encode_virtual(b.row, b.first_rep + k, bc.grid.rows(), bc.n_sim, bc.rep_first);
        out[v.linear] = subjob(v, bc.setup, carry, bc.fn, bc.monitor);
    }
}

std::vector<SubJobRecord> run_sequential(const BackendContext& bc)
{
    std::vector<SubJobRecord> out(bc.grid.rows() * bc.n_sim);
    StreamState carry = entropy_state();
    for (const auto& b : bc.blocks) run_block(b, bc, carry, out);
    return out;
}

std::vector<SubJobRecord> run_thread_pool(const BackendContext& bc, std::size_t workers, bool load_balancing)
{
    std::vector<SubJobRecord> out(bc.grid.rows() * bc.n_sim);
    workers = std::max<std::size_t>(1, std::min(workers, bc.blocks.size()));

    std::mutex monitor_mutex;
    BackendContext local = bc;
    if (bc.monitor) {
        local.monitor = [&](const VirtualIndex& v, const SubJobRecord& r) {
            std::lock_guard lock(monitor_mutex);
            bc.monitor(v, r);
        };
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    StreamState carry = entropy_state();
                    if (load_balancing) {
                        // pull-based: take the next block as soon as one finishes
                        for (std::size_t i; (i = next.fetch_add(1)) < local.blocks.size();)
                            run_block(local.blocks[i], local, carry, out);
                    } else {
                        for (std::size_t i = w; i < local.blocks.size(); i += workers)
                            run_block(local.blocks[i], local, carry, out);
                    }
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(local.blocks.size());
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace detail

namespace {

std::atomic<bool> g_study_running{false};

struct RunGuard {
    RunGuard()
    {
        if (g_study_running.exchange(true))
            throw Error("run_study is already active in this process; nested or concurrent studies are not supported");
    }
    ~RunGuard() { g_study_running.store(false); }
    RunGuard(const RunGuard&) = delete;
    RunGuard& operator=(const RunGuard&) = delete;
};

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::vector<SubJobRecord> execute_virtual_grid(const VarList& vl, const StudyFn& fn, const RunOptions& opts)
{
    require_valid(vl);
    const std::size_t n_sim = vl.n_sim();
    opts.seed.check(n_sim);
    if (!fn && !(opts.backend.kind == BackendSpec::Kind::ProcessPool && !opts.backend.worker_command.empty()))
        throw ConfigError("no study function given");
    const auto grid = mk_grid(vl);
    const auto blocks = partition_blocks(grid.rows(), n_sim, opts.backend.block_size, opts.rep_first);
    const Timer timer = opts.timer ? opts.timer : steady_timer();

    detail::BackendContext bc{
        SubJobSetup{vl, grid, opts.seed, opts.keep_seed, timer},
        grid, n_sim, opts.rep_first, blocks, fn, opts.monitor, opts.study_id};

    switch (opts.backend.kind) {
    case BackendSpec::Kind::Sequential: return detail::run_sequential(bc);
    case BackendSpec::Kind::ThreadPool:
        return detail::run_thread_pool(bc, opts.backend.workers, opts.backend.load_balancing);
    case BackendSpec::Kind::ProcessPool:
        return detail::run_process_pool(bc, opts.backend);
    }
    throw ConfigError("unknown backend");
}

SimResult run_study(const VarList& vl, const StudyFn& fn, const RunOptions& opts)
{
    RunGuard guard;
    require_valid(vl);
    const std::string fp = fingerprint(vl, opts.rep_first, opts.seed, opts.study_id);
    if (opts.cache_hit) *opts.cache_hit = false;
    if (opts.cache_path) {
        if (auto cached = maybe_read(*opts.cache_path, fp)) {
            if (opts.cache_hit) *opts.cache_hit = true;
            return std::move(*cached);
        }
    }

    auto records = execute_virtual_grid(vl, fn, opts);

    StoreMeta meta;
    meta.rep_first = opts.rep_first;
    meta.seed = opts.seed;
    meta.keep_seed = opts.keep_seed;
    meta.created = utc_timestamp();
    meta.study = opts.study_id;

    SimResult result;
    if (opts.raw) {
        RawFallback raw;
        raw.varlist = vl;
        raw.dims = store_dims(vl);
        raw.records = std::move(records);
        raw.diagnostic = "raw result requested";
        raw.fingerprint = fp;
        raw.meta = meta;
        result = std::move(raw);
    } else {
        result = assemble(std::move(records), vl, meta);
    }
    if (opts.cache_path) save(result, *opts.cache_path);
    return result;
}

}  // namespace simstudy
