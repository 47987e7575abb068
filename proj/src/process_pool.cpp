#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>

#include "backends.hpp"
#include "simstudy/error.hpp"
#include "simstudy/protocol.hpp"

namespace simstudy::detail {

namespace {

struct Worker {
    pid_t pid = -1;
    int to = -1;    // coordinator writes tasks here
    int from = -1;  // and reads results here
    std::deque<std::size_t> queue;  // round-robin assignments only
    std::optional<std::size_t> busy;
    bool alive = true;
};

void close_fd(int& fd)
{
    if (fd >= 0) ::close(fd);
    fd = -1;
}

class SigpipeIgnore {
public:
    SigpipeIgnore()
    {
        struct sigaction sa{};
        sa.sa_handler = SIG_IGN;
        sigemptyset(&sa.sa_mask);
        ::sigaction(SIGPIPE, &sa, &old_);
    }
    ~SigpipeIgnore() { ::sigaction(SIGPIPE, &old_, nullptr); }

private:
    struct sigaction old_{};
};

Worker spawn(const BackendContext& bc, const BackendSpec& spec, const std::vector<Worker>& siblings)
{
    int down[2], up[2];
    if (::pipe(down) != 0) throw BackendError(std::string("pipe failed: ") + std::strerror(errno));
    if (::pipe(up) != 0) {
        ::close(down[0]);
        ::close(down[1]);
        throw BackendError(std::string("pipe failed: ") + std::strerror(errno));
    }
    std::fflush(nullptr);
    const pid_t pid = ::fork();
    if (pid < 0) throw BackendError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        ::close(down[1]);
        ::close(up[0]);
        for (const auto& s : siblings) {
            ::close(s.to);
            ::close(s.from);
        }
        if (spec.worker_command.empty()) {
            const StudyFn& fn = bc.fn;
            const std::string id = bc.study_id;
            const int code = wire::serve_worker(down[0], up[1], [&](const std::string& s) -> const StudyFn* {
                return s == id ? &fn : nullptr;
            });
            ::_exit(code);
        }
        ::dup2(down[0], STDIN_FILENO);
        ::dup2(up[1], STDOUT_FILENO);
        ::close(down[0]);
        ::close(up[1]);
        std::vector<char*> argv;
        for (const auto& a : spec.worker_command) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execvp(argv[0], argv.data());
        const std::string msg = "cannot start worker '" + spec.worker_command[0] + "': " + std::strerror(errno) + "\n";
        [[maybe_unused]] auto n = ::write(2, msg.data(), msg.size());
        ::_exit(127);
    }
    ::close(down[0]);
    ::close(up[1]);
    ::fcntl(down[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(up[0], F_SETFD, FD_CLOEXEC);
    Worker w;
    w.pid = pid;
    w.to = down[1];
    w.from = up[0];
    return w;
}

void reap(std::vector<Worker>& workers, bool force)
{
    for (auto& w : workers) {
        close_fd(w.to);
        close_fd(w.from);
        if (w.pid > 0) {
            if (force) ::kill(w.pid, SIGKILL);
            int status = 0;
            while (::waitpid(w.pid, &status, 0) < 0 && errno == EINTR) {
            }
            w.pid = -1;
        }
    }
}

}  // namespace

std::vector<SubJobRecord> run_process_pool(const BackendContext& bc, const BackendSpec& spec)
{
    const std::size_t n_blocks = bc.blocks.size();
    std::vector<SubJobRecord> out(bc.grid.rows() * bc.n_sim);
    if (n_blocks == 0) return out;
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(spec.workers, n_blocks));

    const bool record_seed = bc.setup.seed.kind() != SeedSpec::Kind::Unseeded;
    const std::string payload = wire::encode_setup({bc.setup.varlist, bc.setup.keep_seed, record_seed});

    auto make_task = [&](std::size_t i) {
        const auto& b = bc.blocks[i];
        wire::TaskFrame t{b, {}, bc.study_id, payload};
        for (std::size_t k = 0; k < b.count; ++k) {
            auto st = seed_for(bc.setup.seed, b.first_rep + k);
            t.seeds.push_back(st ? std::optional<std::string>(st->to_hex()) : std::nullopt);
        }
        return t;
    };

    SigpipeIgnore sigpipe;
    std::vector<Worker> workers;
    workers.reserve(n_workers);
    std::size_t completed = 0;
    std::size_t next = 0;

    auto fail = [&](const std::string& why) {
        reap(workers, true);
        throw BackendError(why + " after " + std::to_string(completed) + " of " + std::to_string(n_blocks) +
                           " blocks completed");
    };

    try {
        for (std::size_t w = 0; w < n_workers; ++w) workers.push_back(spawn(bc, spec, workers));
    } catch (...) {
        reap(workers, true);
        throw;
    }
    if (!spec.load_balancing)
        for (std::size_t i = 0; i < n_blocks; ++i) workers[i % n_workers].queue.push_back(i);

    auto dispatch = [&](Worker& w) {
        std::optional<std::size_t> i;
        if (spec.load_balancing) {
            if (next < n_blocks) i = next++;
        } else if (!w.queue.empty()) {
            i = w.queue.front();
            w.queue.pop_front();
        }
        if (!i) return;
        w.busy = *i;
        wire::write_frame(w.to, make_task(*i));
    };

    try {
        for (auto& w : workers) dispatch(w);
        while (completed < n_blocks) {
            std::vector<pollfd> fds;
            std::vector<std::size_t> owner;
            for (std::size_t k = 0; k < workers.size(); ++k) {
                if (workers[k].busy) {
                    fds.push_back({workers[k].from, POLLIN, 0});
                    owner.push_back(k);
                }
            }
            if (fds.empty()) fail("no worker holds a pending block");
            if (::poll(fds.data(), fds.size(), -1) < 0) {
                if (errno == EINTR) continue;
                fail(std::string("poll failed: ") + std::strerror(errno));
            }
            for (std::size_t f = 0; f < fds.size(); ++f) {
                if (!(fds[f].revents & (POLLIN | POLLHUP | POLLERR))) continue;
                Worker& w = workers[owner[f]];
                auto frame = wire::read_frame(w.from);
                if (!frame) fail("worker " + std::to_string(owner[f]) + " exited unexpectedly");
                auto* res = std::get_if<wire::ResultFrame>(&*frame);
                if (!res) continue;
                const auto& b = bc.blocks[*w.busy];
                if (!(res->block == b) || res->records.size() != b.count)
                    fail("worker " + std::to_string(owner[f]) + " answered for the wrong block");
                for (std::size_t k = 0; k < b.count; ++k) {
                    const auto v = encode_virtual(b.row, b.first_rep + k, bc.grid.rows(), bc.n_sim, bc.rep_first);
                    auto& rec = res->records[k];
                    if (!bc.setup.keep_seed) rec.seed.reset();
                    out[v.linear] = std::move(rec);
                    if (bc.monitor) bc.monitor(v, out[v.linear]);
                }
                w.busy.reset();
                ++completed;
                dispatch(w);
            }
        }
    } catch (const ProtocolError& e) {
        fail(std::string("worker protocol failure: ") + e.what());
    }

    for (auto& w : workers) {
        try {
            wire::write_frame(w.to, wire::ControlFrame{wire::ControlFrame::Op::Shutdown});
        } catch (const ProtocolError&) {
        }
    }
    reap(workers, false);
    return out;
}

}  // namespace simstudy::detail
