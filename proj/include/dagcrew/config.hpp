#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/common.hpp"
#include "dagcrew/planner_http.hpp"

namespace dagcrew::harness {

/// Episode configuration, loadable from a `key = value` file. Unknown keys
/// are rejected so typos fail fast.
struct RunConfig {
    std::string scenario;  // construction | cooking | escape
    std::string task;      // bundled task id, or a task/spec file path
    std::uint64_t seed = 0;
    int difficulty = 1;
    int agent_count = 2;
    std::vector<std::string> agent_names;
    std::map<std::string, std::set<std::string>> capabilities;
    std::string planner = "scripted";  // scripted | http
    planner::HttpConfig http;
    int max_rounds = 12;
    Tick tick_budget = 24000;
    double wall_budget_s = 600.0;
    Tick exec_tick_budget = 240;
    double exec_wall_budget_s = 120.0;
    std::string out_dir = "runs";
    std::string trace_detail = "full";
    std::size_t summary_cap = 1200;
    // Scripted-planner fault knobs for exercising the failure paths.
    int fail_decompose_times = 0;
    int fail_allocation_times = 0;

    /// Names padded with defaults (Alice, Bob, ...) up to agent_count.
    std::vector<std::string> resolved_agent_names() const;

    void validate() const;
    nlohmann::json to_json() const;

    static RunConfig from_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j);
};

}  // namespace dagcrew::harness
