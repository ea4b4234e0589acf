#include "dagcrew/agent.hpp"

#include <algorithm>

namespace dagcrew::agents {

using planner::PlannerRequest;
using planner::TemplateId;

std::string HistoryRecord::render() const {
    std::string out = kind + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += args[i];
    }
    out += ") -> ";
    out += accepted ? "" : "rejected: ";
    out += observation;
    out += " @" + std::to_string(tick);
    return out;
}

void ActionHistory::push(HistoryRecord record) {
    records_.push_back(std::move(record));
    while (records_.size() > capacity_) records_.pop_front();
}

std::string ActionHistory::render() const {
    std::string out;
    for (const HistoryRecord& r : records_) {
        out += r.render();
        out += "\n";
    }
    return out;
}

ReactStep parse_react_reply(const std::string& text) {
    ReactStep step;
    // Find the first identifier followed by a parenthesised argument list.
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_') {
            std::size_t start = i;
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) ||
                    text[i] == '_')) {
                ++i;
            }
            std::size_t j = i;
            while (j < text.size() && text[j] == ' ') ++j;
            if (j < text.size() && text[j] == '(') {
                const std::size_t close = text.find(')', j);
                if (close == std::string::npos) break;
                const std::string name = text.substr(start, i - start);
                std::vector<std::string> args;
                std::string current;
                for (std::size_t k = j + 1; k < close; ++k) {
                    if (text[k] == ',') {
                        args.push_back(current);
                        current.clear();
                    } else {
                        current += text[k];
                    }
                }
                if (!current.empty() || !args.empty()) args.push_back(current);
                for (std::string& a : args) {
                    const auto b = a.find_first_not_of(" \t\"'");
                    const auto e = a.find_last_not_of(" \t\"'");
                    a = b == std::string::npos ? "" : a.substr(b, e - b + 1);
                }
                if (name == "terminal") {
                    step.claimed_success =
                        !args.empty() && args[0] == "succeeded";
                    return step;
                }
                step.action = ReactStep::Action{name, std::move(args)};
                return step;
            }
        } else {
            ++i;
        }
    }
    step.parse_failure = true;
    return step;
}

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

ExecutionResult execute(AgentProfile& profile, const taskgraph::SubtaskNode& node,
                        const ExecutionContext& context,
                        planner::Backend& backend, const worldsim::World& world,
                        worldsim::WorldGate& gate) {
    ExecutionResult result;
    const Tick start_tick = world.agent_tick(profile.id);
    const auto wall_start = std::chrono::steady_clock::now();
    std::string transcript;
    std::optional<bool> claim;
    bool budget_exhausted = false;

    gate.register_worker(profile.id);
    while (result.iterations < kMaxReactIterations) {
        const Tick elapsed = world.agent_tick(profile.id) - start_tick;
        if (elapsed >= context.tick_budget) {
            budget_exhausted = true;
            break;
        }
        if (context.wall_budget_seconds) {
            const auto wall_elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              wall_start)
                    .count();
            if (wall_elapsed >= *context.wall_budget_seconds) {
                budget_exhausted = true;
                break;
            }
        }

        PlannerRequest request;
        request.template_id = TemplateId::react;
        request.slots = {
            {"agent", profile.id},
            {"agent_index", std::to_string(context.agent_index)},
            {"crew", context.crew},
            {"scenario", context.scenario},
            {"node_description", node.description},
            {"node_data", node.data},
            {"env", context.env},
            {"transcript", transcript},
            {"preds", join(context.predecessor_states, "\n")},
            {"iteration", std::to_string(result.iterations)},
        };
        ReactStep step;
        try {
            planner::PlannerReply reply = planner::complete(backend, request);
            step = parse_react_reply(reply.text);
            step.usage = reply.usage;
        } catch (const planner::PlannerError& e) {
            step.parse_failure = true;
            transcript += std::string("planner failure: ") + e.what() + "\n";
        }
        result.usages.push_back(step.usage);
        ++result.iterations;

        if (step.parse_failure) {
            transcript += "observation: the last reply could not be parsed "
                          "into an action\n";
            continue;
        }
        if (step.claimed_success.has_value()) {
            claim = step.claimed_success;
            break;
        }

        worldsim::ActionRequest action{profile.id, step.action->kind,
                                       step.action->args};
        const worldsim::ActionResult outcome = gate.submit(action);
        if (outcome.accepted) ++result.accepted_actions;
        HistoryRecord record{action.kind, action.args, outcome.observation,
                             outcome.tick, outcome.accepted};
        transcript += record.render();
        transcript += "\n";
        profile.history.push(std::move(record));
    }
    gate.deregister_worker(profile.id);

    result.claimed_success = claim.value_or(false);
    // A success claim counts only when grounded in at least one accepted
    // world action.
    result.succeeded = result.claimed_success && result.accepted_actions > 0;

    auto [feedback, usage] =
        reflect(backend, profile.history, node.description,
                budget_exhausted ? std::optional<bool>(false) : claim);
    if (budget_exhausted) {
        feedback = "execution budget exhausted after " +
                   std::to_string(result.iterations) + " iterations; " + feedback;
    }
    result.feedback = feedback;
    if (usage) result.usages.push_back(*usage);
    return result;
}

std::pair<std::string, std::optional<planner::TokenUsage>> reflect(
    planner::Backend& backend, const ActionHistory& history,
    const std::string& task, std::optional<bool> claimed_success) {
    PlannerRequest request;
    request.template_id = TemplateId::reflect;
    request.slots = {{"task", task}, {"history", history.render()}};
    if (claimed_success.has_value()) {
        request.slots["claim"] = *claimed_success ? "succeeded" : "failed";
    }
    try {
        planner::PlannerReply reply = planner::complete(backend, request);
        if (!reply.text.empty()) return {reply.text, reply.usage};
    } catch (const planner::PlannerError&) {
        // fall through to the synthesized digest
    }
    std::string fallback;
    if (history.records().empty()) {
        fallback = "no actions taken";
    } else {
        const HistoryRecord& last = history.records().back();
        fallback = "last action " + last.kind + " -> " + last.observation;
    }
    return {fallback, std::nullopt};
}

}  // namespace dagcrew::agents
