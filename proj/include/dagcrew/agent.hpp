#pragma once

#include <chrono>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "dagcrew/planner.hpp"
#include "dagcrew/statemgr.hpp"
#include "dagcrew/taskgraph.hpp"
#include "dagcrew/worldsim.hpp"

namespace dagcrew::agents {

struct HistoryRecord {
    std::string kind;
    std::vector<std::string> args;
    std::string observation;
    Tick tick = 0;
    bool accepted = false;

    std::string render() const;
};

/// Bounded FIFO of the last p actions (short-term memory).
class ActionHistory {
public:
    explicit ActionHistory(std::size_t capacity = 6) : capacity_(capacity) {}

    void push(HistoryRecord record);
    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<HistoryRecord>& records() const { return records_; }
    std::string render() const;

private:
    std::size_t capacity_;
    std::deque<HistoryRecord> records_;
};

struct AgentProfile {
    std::string id;
    std::set<std::string> capabilities;  // empty means the full catalogue
    statemgr::AgentStateSummary state;
    ActionHistory history;
};

/// One planner step of the ReAct loop: either a world action or a terminal
/// claim.
struct ReactStep {
    struct Action {
        std::string kind;
        std::vector<std::string> args;
    };
    std::optional<Action> action;          // set when the reply is an action
    std::optional<bool> claimed_success;   // set when the reply is terminal
    bool parse_failure = false;
    planner::TokenUsage usage;
};

/// Parses a completion into exactly one `kind(arg, ...)` invocation or a
/// `terminal(...)` marker. Anything else is a parse failure.
ReactStep parse_react_reply(const std::string& text);

inline constexpr int kMaxReactIterations = 6;

struct ExecutionContext {
    std::string scenario;
    std::string env;
    std::vector<std::string> predecessor_states;
    int agent_index = 0;              // position within the node's crew
    std::string crew;                 // comma-joined assigned agents
    Tick tick_budget = 240;           // scripted-mode execution budget
    std::optional<double> wall_budget_seconds;  // live-mode execution budget
};

struct ExecutionResult {
    bool claimed_success = false;
    bool succeeded = false;  // claim grounded against accepted world actions
    std::string feedback;
    int iterations = 0;
    int accepted_actions = 0;
    std::vector<planner::TokenUsage> usages;
};

/// Runs the bounded ReAct loop for one (agent, node) pair, then reflects.
/// World rejections are observations, not aborts; the loop ends on a
/// terminal claim, the iteration cap, or an exhausted budget.
ExecutionResult execute(AgentProfile& profile, const taskgraph::SubtaskNode& node,
                        const ExecutionContext& context,
                        planner::Backend& backend, const worldsim::World& world,
                        worldsim::WorldGate& gate);

/// Reflection feedback for a finished task; planner failure degrades to a
/// synthesized digest of the last observation. Never empty.
std::pair<std::string, std::optional<planner::TokenUsage>> reflect(
    planner::Backend& backend, const ActionHistory& history,
    const std::string& task, std::optional<bool> claimed_success = std::nullopt);

}  // namespace dagcrew::agents
