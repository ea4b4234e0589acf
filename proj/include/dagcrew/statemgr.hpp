#pragma once

#include <string>
#include <vector>

#include "dagcrew/planner.hpp"
#include "dagcrew/worldsim.hpp"

namespace dagcrew::statemgr {

/// Long-term memory of one agent: a recursively compressed summary of its
/// actions, possessions and surroundings. Bounded by a character cap.
struct AgentStateSummary {
    std::string agent_id;
    std::string text;
    int updated_round = 0;
};

inline constexpr std::size_t kDefaultSummaryCap = 1200;

struct GlobalEnvState {
    std::map<std::string, std::vector<worldsim::ObservationRecord>> local_views;
    std::vector<worldsim::ObservationRecord> merged;

    std::string render() const;
};

/// Union of every agent's local view, deduplicated by
/// (kind, position, subject) and canonically ordered.
GlobalEnvState global_env(const worldsim::World& world,
                          const std::vector<std::string>& agents);

struct UpdateOutcome {
    AgentStateSummary summary;
    planner::TokenUsage usage;
    bool degraded = false;   // planner failed; summary kept as-is
    bool truncated = false;  // reply exceeded the cap
};

/// Folds an agent's recent history into its summary via the
/// agent-state-update template. Planner failure keeps the old summary.
UpdateOutcome update_agent_state(planner::Backend& backend,
                                 const AgentStateSummary& summary,
                                 const std::string& agent_id,
                                 const std::string& history_text, int round,
                                 std::size_t cap = kDefaultSummaryCap);

struct RetrieveOutcome {
    std::string text;
    planner::TokenUsage usage;
    bool degraded = false;  // planner failed; full merged state returned
};

/// Goal-relevant condensation of the merged environment. Degrades to the
/// full merged state when the planner fails; never aborts.
RetrieveOutcome retrieve_env(planner::Backend& backend, const std::string& goal,
                             const GlobalEnvState& global,
                             const std::string& scenario);

}  // namespace dagcrew::statemgr
