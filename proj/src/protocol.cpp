#include "simstudy/protocol.hpp"

#include <cerrno>
#include <cstring>
#include <unistd.h>

#include <map>

#include "simstudy/error.hpp"

namespace simstudy::wire {

namespace {

Json block_to_json(const BlockTask& b)
{
    return Json{{"row", b.row}, {"first_rep", b.first_rep}, {"count", b.count}};
}

BlockTask block_from_json(const Json& j)
{
    return BlockTask{j.at("row").get<std::size_t>(), j.at("first_rep").get<std::size_t>(),
                     j.at("count").get<std::size_t>()};
}

std::vector<std::uint8_t> with_header(Tag tag, const std::string& body)
{
    const std::size_t len = 1 + body.size();
    if (len > kMaxFrameBytes) throw ProtocolError("frame of " + std::to_string(len) + " bytes exceeds the 64 MiB limit");
    std::vector<std::uint8_t> out;
    out.reserve(4 + len);
    out.push_back(static_cast<std::uint8_t>(len >> 24));
    out.push_back(static_cast<std::uint8_t>(len >> 16));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    out.push_back(static_cast<std::uint8_t>(tag));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::size_t read_length(std::span<const std::uint8_t> h)
{
    return (std::size_t{h[0]} << 24) | (std::size_t{h[1]} << 16) | (std::size_t{h[2]} << 8) | std::size_t{h[3]};
}

}  // namespace

std::vector<std::uint8_t> encode(const Frame& f)
{
    if (auto t = std::get_if<TaskFrame>(&f)) {
        Json seeds = Json::array();
        for (const auto& s : t->seeds) seeds.push_back(s ? Json(*s) : Json());
        Json j{{"block", block_to_json(t->block)},
               {"seeds", std::move(seeds)},
               {"study", t->study_id},
               {"payload", t->payload}};
        return with_header(Tag::Task, j.dump());
    }
    if (auto r = std::get_if<ResultFrame>(&f)) {
        Json recs = Json::array();
        for (const auto& rec : r->records) recs.push_back(record_to_json(rec));
        Json j{{"block", block_to_json(r->block)}, {"records", std::move(recs)}};
        return with_header(Tag::Result, j.dump());
    }
    const auto& c = std::get<ControlFrame>(f);
    return with_header(c.op == ControlFrame::Op::Ping ? Tag::Ping : Tag::Shutdown, {});
}

Frame decode_payload(std::span<const std::uint8_t> payload)
{
    if (payload.empty()) throw ProtocolError("empty frame payload");
    const auto tag = static_cast<Tag>(payload[0]);
    const std::string_view body(reinterpret_cast<const char*>(payload.data() + 1), payload.size() - 1);
    auto parse = [&] {
        try {
            return Json::parse(body.begin(), body.end());
        } catch (const Json::exception& e) {
            throw ProtocolError(std::string("frame body is not valid JSON: ") + e.what());
        }
    };
    try {
        switch (tag) {
        case Tag::Ping:
        case Tag::Shutdown:
            if (!body.empty()) throw ProtocolError("control frame carries a body");
            return ControlFrame{tag == Tag::Ping ? ControlFrame::Op::Ping : ControlFrame::Op::Shutdown};
        case Tag::Task: {
            const Json j = parse();
            TaskFrame t;
            t.block = block_from_json(j.at("block"));
            for (const auto& s : j.at("seeds")) {
                if (s.is_null()) t.seeds.emplace_back(std::nullopt);
                else t.seeds.emplace_back(s.get<std::string>());
            }
            t.study_id = j.at("study").get<std::string>();
            t.payload = j.at("payload").get<std::string>();
            return t;
        }
        case Tag::Result: {
            const Json j = parse();
            ResultFrame r;
            r.block = block_from_json(j.at("block"));
            for (const auto& rec : j.at("records")) r.records.push_back(record_from_json(rec));
            return r;
        }
        }
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("malformed frame: ") + e.what());
    } catch (const FormatError& e) {
        throw ProtocolError(std::string("malformed frame: ") + e.what());
    }
    throw ProtocolError("unknown frame tag " + std::to_string(static_cast<unsigned>(payload[0])));
}

Frame decode(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4) throw ProtocolError("truncated frame header");
    const std::size_t len = read_length(bytes);
    if (len > kMaxFrameBytes) throw ProtocolError("frame length " + std::to_string(len) + " exceeds the 64 MiB limit");
    if (bytes.size() - 4 < len)
        throw ProtocolError("truncated frame: expected " + std::to_string(len) + " payload bytes, got " +
                            std::to_string(bytes.size() - 4));
    if (bytes.size() - 4 > len) throw ProtocolError("trailing bytes after frame");
    return decode_payload(bytes.subspan(4));
}

namespace {

void write_all(int fd, const std::uint8_t* p, std::size_t n)
{
    while (n > 0) {
        const ssize_t w = ::write(fd, p, n);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError(std::string("write failed: ") + std::strerror(errno));
        }
        p += w;
        n -= static_cast<std::size_t>(w);
    }
}

// Returns bytes read; stops early only on EOF.
std::size_t read_all(int fd, std::uint8_t* p, std::size_t n)
{
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::read(fd, p + got, n - got);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError(std::string("read failed: ") + std::strerror(errno));
        }
        if (r == 0) break;
        got += static_cast<std::size_t>(r);
    }
    return got;
}

}  // namespace

void write_frame(int fd, const Frame& f)
{
    const auto bytes = encode(f);
    write_all(fd, bytes.data(), bytes.size());
}

std::optional<Frame> read_frame(int fd)
{
    std::uint8_t header[4];
    const std::size_t got = read_all(fd, header, 4);
    if (got == 0) return std::nullopt;
    if (got < 4) throw ProtocolError("truncated frame header");
    const std::size_t len = read_length(header);
    if (len > kMaxFrameBytes) throw ProtocolError("frame length " + std::to_string(len) + " exceeds the 64 MiB limit");
    std::vector<std::uint8_t> payload(len);
    if (read_all(fd, payload.data(), len) < len) throw ProtocolError("truncated frame payload");
    return decode_payload(payload);
}

std::string encode_setup(const TaskSetup& s)
{
    Json j{{"varlist", varlist_to_json(s.varlist)}, {"keep_seed", s.keep_seed}, {"record_seed", s.record_seed}};
    return j.dump();
}

TaskSetup decode_setup(const std::string& payload)
{
    try {
        const Json j = Json::parse(payload);
        return TaskSetup{varlist_from_json(j.at("varlist")), j.at("keep_seed").get<bool>(),
                         j.at("record_seed").get<bool>()};
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("malformed task payload: ") + e.what());
    } catch (const ConfigError& e) {
        throw ProtocolError(std::string("malformed task payload: ") + e.what());
    }
}

int serve_worker(int in_fd, int out_fd, const StudyResolver& resolve)
{
    // setups are cached by payload text; a coordinator sends one study per run
    std::map<std::string, std::pair<TaskSetup, PhysicalGrid>> setups;
    StreamState carry = entropy_state();
    const Timer timer = steady_timer();
    const SeedSpec unused = SeedSpec::unseeded();
    try {
        while (true) {
            auto frame = read_frame(in_fd);
            if (!frame) return 0;
            if (auto c = std::get_if<ControlFrame>(&*frame)) {
                if (c->op == ControlFrame::Op::Shutdown) return 0;
                write_frame(out_fd, ControlFrame{ControlFrame::Op::Ping});
                continue;
            }
            auto* task = std::get_if<TaskFrame>(&*frame);
            if (!task) throw ProtocolError("worker received a result frame");
            const StudyFn* fn = resolve(task->study_id);
            if (!fn) throw ProtocolError("unknown study '" + task->study_id + "'");
            auto it = setups.find(task->payload);
            if (it == setups.end()) {
                auto setup = decode_setup(task->payload);
                auto grid = mk_grid(setup.varlist);
                it = setups.emplace(task->payload, std::make_pair(std::move(setup), std::move(grid))).first;
            }
            const auto& [setup, grid] = it->second;
            if (task->seeds.size() != task->block.count) throw ProtocolError("seed list does not match block size");
            const std::size_t n_sim = setup.varlist.n_sim();
            SubJobSetup sj{setup.varlist, grid, unused, setup.keep_seed, timer};
            ResultFrame result{task->block, {}};
            for (std::size_t k = 0; k < task->block.count; ++k) {
                // the coordinator re-derives the linear index; rep_first does not matter here
                const auto v = encode_virtual(task->block.row, task->block.first_rep + k, grid.rows(), n_sim, true);
                std::optional<StreamState> start;
                if (task->seeds[k]) start = StreamState::from_hex(*task->seeds[k]);
                result.records.push_back(
                    subjob_with_state(v, sj, start, setup.keep_seed && setup.record_seed, carry, *fn));
            }
            write_frame(out_fd, result);
        }
    } catch (const std::exception& e) {
        const std::string msg = std::string("worker: ") + e.what() + "\n";
        [[maybe_unused]] auto n = ::write(2, msg.data(), msg.size());
        return 3;
    }
}

}  // namespace simstudy::wire
