#pragma once

#include <string>
#include <vector>

#include "simstudy/executor.hpp"

namespace simstudy::detail {

struct BackendContext {
    SubJobSetup setup;
    const PhysicalGrid& grid;
    std::size_t n_sim;
    bool rep_first;
    const std::vector<BlockTask>& blocks;
    StudyFn fn;
    Monitor monitor;
    std::string study_id;
};

void run_block(const BlockTask& b, const BackendContext& bc, StreamState& carry, std::vector<SubJobRecord>& out);

std::vector<SubJobRecord> run_sequential(const BackendContext& bc);
std::vector<SubJobRecord> run_thread_pool(const BackendContext& bc, std::size_t workers, bool load_balancing);
std::vector<SubJobRecord> run_process_pool(const BackendContext& bc, const BackendSpec& spec);

}  // namespace simstudy::detail
