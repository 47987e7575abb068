#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "simstudy/executor.hpp"

namespace simstudy::wire {

/// Frames larger than this are rejected on both ends.
inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

enum class Tag : std::uint8_t {
    Task = 'T',
    Result = 'R',
    Ping = 'P',
    Shutdown = 'S',
};

/// One block of sub-jobs. `seeds[i]` is the hex start state of the block's
/// i-th replication, or nullopt when the worker's own stream is used.
/// `payload` carries the study setup (varlist with frozen values, flags).
struct TaskFrame {
    BlockTask block;
    std::vector<std::optional<std::string>> seeds;
    std::string study_id;
    std::string payload;
};

struct ResultFrame {
    BlockTask block;
    std::vector<SubJobRecord> records;
};

struct ControlFrame {
    enum class Op { Ping, Shutdown };
    Op op = Op::Ping;
};

using Frame = std::variant<TaskFrame, ResultFrame, ControlFrame>;

/// 4-byte big-endian payload length, then the payload: a tag byte followed
/// (for tasks and results) by the canonical JSON serialization.
std::vector<std::uint8_t> encode(const Frame& f);

/// Decodes one complete frame; throws ProtocolError on truncation, trailing
/// bytes, oversize length or an unknown tag.
Frame decode(std::span<const std::uint8_t> bytes);

/// Decodes a payload (the bytes after the length prefix).
Frame decode_payload(std::span<const std::uint8_t> payload);

/// Blocking fd I/O. read_frame returns nullopt on clean EOF before a frame.
void write_frame(int fd, const Frame& f);
std::optional<Frame> read_frame(int fd);

/// Study setup shipped inside TaskFrame::payload.
struct TaskSetup {
    VarList varlist;
    bool keep_seed = false;
    bool record_seed = true;
};

std::string encode_setup(const TaskSetup& s);
TaskSetup decode_setup(const std::string& payload);

/// Resolves a study id to a function; returns nullptr when unknown.
using StudyResolver = std::function<const StudyFn*(const std::string&)>;

/// Serves tasks from `in_fd` until Shutdown or EOF, answering on `out_fd`.
/// Returns a process exit code.
int serve_worker(int in_fd, int out_fd, const StudyResolver& resolve);

}  // namespace simstudy::wire
