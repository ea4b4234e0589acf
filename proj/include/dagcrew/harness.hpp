#pragma once

#include <string>
#include <vector>

#include "dagcrew/config.hpp"
#include "dagcrew/metrics.hpp"
#include "dagcrew/orchestrator.hpp"

namespace dagcrew::harness {

struct RunOutcome {
    int exit_code = 0;
    std::string run_dir;
    std::string termination_reason;
    metrics::MetricReport report;
};

/// Executes a full episode and persists the run directory: resolved
/// config, the line-delimited trace (flushed after every round), one graph
/// export per round, the final world snapshot, and the metric report.
RunOutcome cmd_run(const RunConfig& config);

/// Writes a generated escape spec as a JSON document loadable by cmd_run.
int cmd_generate(std::uint64_t seed, int difficulty, int agents,
                 const std::string& out_path);

/// Renders a comparative metric table, one row per run directory.
std::string render_report_table(const std::vector<std::string>& run_dirs,
                                int& exit_code);

/// Round-R graph export of a run, as dot or the structured line format.
std::string cmd_graph(const std::string& run_dir, int round,
                      const std::string& format);

/// Re-simulates the recorded action sequence against a fresh world built
/// from the recorded config and compares the final snapshot.
bool replay_run(const std::string& run_dir, std::string* error = nullptr);

}  // namespace dagcrew::harness
