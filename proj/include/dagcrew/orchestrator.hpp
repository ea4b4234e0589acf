#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dagcrew/agent.hpp"
#include "dagcrew/planner.hpp"
#include "dagcrew/scenario.hpp"
#include "dagcrew/statemgr.hpp"
#include "dagcrew/taskgraph.hpp"
#include "dagcrew/trace.hpp"
#include "dagcrew/worldsim.hpp"

namespace dagcrew::orchestrator {

struct Limits {
    int max_rounds = 12;
    Tick tick_budget = 24000;
    double wall_budget_s = 600.0;
    Tick exec_tick_budget = 240;
    double exec_wall_budget_s = 120.0;
    bool wall_limits_active = false;  // only the network backend runs on wall time
};

struct AgentSetup {
    std::string name;
    std::set<std::string> capabilities;  // empty means the full catalogue
};

struct RoundReport {
    int round = 0;
    int new_nodes = 0;
    std::vector<std::pair<std::string, NodeId>> dispatched;
    std::vector<NodeId> completed;
    std::vector<NodeId> failed;
    Tick elapsed_ticks = 0;
    double wall_seconds = 0.0;
};

/// One episode: the task graph, the agent crew, the world, and the trace,
/// driven round by round. All mutation happens on the control thread;
/// dispatched executions run one worker per (agent, node) pair and meet a
/// barrier before the round closes.
class Session {
public:
    Session(harness::ScenarioRuntime& scenario, planner::Backend& backend,
            const std::vector<AgentSetup>& agents, Limits limits,
            std::uint64_t seed, std::size_t summary_cap = 1200);

    RoundReport run_round();

    /// Runs rounds until the goal completes, the round cap is reached, or a
    /// budget runs out; `on_round` fires after every round (for flushing).
    std::string run_episode(
        const std::function<void(const RoundReport&)>& on_round = nullptr);

    bool finished() const { return finished_; }
    double completion() const;
    int round() const { return round_; }

    const taskgraph::TaskGraph& graph() const { return graph_; }
    taskgraph::TaskGraph& graph() { return graph_; }
    const worldsim::World& world() const { return world_; }
    worldsim::World& world() { return world_; }
    const harness::EpisodeTrace& trace() const { return trace_; }
    const std::vector<agents::AgentProfile>& profiles() const { return profiles_; }
    const std::vector<std::string>& agent_names() const { return agent_names_; }
    const std::vector<taskgraph::TaskGraph>& round_graphs() const {
        return round_graphs_;
    }

private:
    struct ParsedReply {
        std::vector<taskgraph::SubtaskSpec> specs;
        std::vector<planner::TokenUsage> usages;
        bool degenerate = false;
        std::string error;
    };

    ParsedReply ask_decomposition(planner::TemplateId template_id,
                                  std::map<std::string, std::string> slots);
    std::string render_nodes() const;
    std::string render_agent_states() const;
    std::vector<planner::AllocationPair> allocate(const std::set<NodeId>& ready);
    void dispatch(const std::vector<planner::AllocationPair>& pairs,
                  RoundReport& report);

    harness::ScenarioRuntime& scenario_;
    planner::Backend& backend_;
    Limits limits_;
    std::size_t summary_cap_;

    worldsim::World world_;
    taskgraph::TaskGraph graph_;
    std::vector<agents::AgentProfile> profiles_;
    std::vector<std::string> agent_names_;
    harness::EpisodeTrace trace_;
    std::vector<taskgraph::TaskGraph> round_graphs_;  // snapshot per round

    int round_ = 0;
    bool finished_ = false;
    std::string env_text_;
    std::vector<NodeId> last_failed_;
    std::chrono::steady_clock::time_point started_;
};

}  // namespace dagcrew::orchestrator
