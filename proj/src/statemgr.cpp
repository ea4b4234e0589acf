#include "dagcrew/statemgr.hpp"

#include <algorithm>

namespace dagcrew::statemgr {

using worldsim::ObservationRecord;

std::string GlobalEnvState::render() const {
    std::string out;
    for (const ObservationRecord& rec : merged) {
        out += rec.render();
        out += "\n";
    }
    return out;
}

GlobalEnvState global_env(const worldsim::World& world,
                          const std::vector<std::string>& agents) {
    GlobalEnvState state;
    std::set<std::tuple<std::string, Vec3, std::string>> seen;
    for (const std::string& name : agents) {
        std::vector<ObservationRecord> view = world.local_view(name);
        for (const ObservationRecord& rec : view) {
            if (seen.emplace(rec.kind, rec.position, rec.subject).second) {
                state.merged.push_back(rec);
            }
        }
        state.local_views.emplace(name, std::move(view));
    }
    std::ranges::sort(state.merged);
    return state;
}

UpdateOutcome update_agent_state(planner::Backend& backend,
                                 const AgentStateSummary& summary,
                                 const std::string& agent_id,
                                 const std::string& history_text, int round,
                                 std::size_t cap) {
    if (summary.agent_id != agent_id) {
        throw planner::PlannerError("history does not belong to agent " +
                                    summary.agent_id);
    }
    UpdateOutcome out;
    out.summary = summary;
    if (history_text.empty()) return out;  // nothing to fold in

    planner::PlannerRequest request;
    request.template_id = planner::TemplateId::agent_state_update;
    request.slots = {{"agent", agent_id},
                     {"summary", summary.text},
                     {"history", history_text}};
    try {
        planner::PlannerReply reply = planner::complete(backend, request);
        out.usage = reply.usage;
        std::string text = reply.text;
        if (text.size() > cap) {
            text.resize(cap);
            out.truncated = true;
        }
        out.summary.text = std::move(text);
        out.summary.updated_round = round;
    } catch (const planner::PlannerError&) {
        out.degraded = true;  // keep the old summary
    }
    return out;
}

RetrieveOutcome retrieve_env(planner::Backend& backend, const std::string& goal,
                             const GlobalEnvState& global,
                             const std::string& scenario) {
    RetrieveOutcome out;
    planner::PlannerRequest request;
    request.template_id = planner::TemplateId::env_retrieve;
    request.slots = {{"goal", goal},
                     {"global_env", global.render()},
                     {"scenario", scenario}};
    try {
        planner::PlannerReply reply = planner::complete(backend, request);
        out.text = reply.text;
        out.usage = reply.usage;
    } catch (const planner::PlannerError&) {
        out.text = global.render();  // safe over-approximation
        out.degraded = true;
    }
    return out;
}

}  // namespace dagcrew::statemgr
