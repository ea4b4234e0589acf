#include "dagcrew/orchestrator.hpp"

#include <algorithm>
#include <map>
#include <thread>

namespace dagcrew::orchestrator {

using agents::AgentProfile;
using harness::EpisodeTrace;
using nlohmann::json;
using planner::AllocationPair;
using planner::TemplateId;
using planner::TokenUsage;
using taskgraph::NodeStatus;
using taskgraph::SubtaskSpec;

namespace {

json usages_json(const std::vector<TokenUsage>& usages) {
    json arr = json::array();
    for (const TokenUsage& u : usages) {
        arr.push_back({{"prompt_tokens", u.prompt_tokens},
                       {"completion_tokens", u.completion_tokens}});
    }
    return arr;
}

}  // namespace

Session::Session(harness::ScenarioRuntime& scenario, planner::Backend& backend,
                 const std::vector<AgentSetup>& agents, Limits limits,
                 std::uint64_t seed, std::size_t summary_cap)
    : scenario_(scenario),
      backend_(backend),
      limits_(limits),
      summary_cap_(summary_cap),
      world_(seed),
      started_(std::chrono::steady_clock::now()) {
    scenario_.populate(world_);
    int index = 0;
    for (const AgentSetup& setup : agents) {
        world_.add_agent(setup.name, scenario_.spawn(index), setup.capabilities);
        AgentProfile profile;
        profile.id = setup.name;
        profile.capabilities = setup.capabilities;
        profile.state.agent_id = setup.name;
        profiles_.push_back(std::move(profile));
        agent_names_.push_back(setup.name);
        ++index;
    }
}

double Session::completion() const {
    return scenario_.completion(world_, trace_);
}

std::string Session::render_nodes() const {
    std::string out;
    for (NodeId id : graph_.insertion_order()) {
        const taskgraph::SubtaskNode& node = graph_.node(id);
        out += "id=" + std::to_string(node.id) +
               " status=" + taskgraph::to_string(node.status) +
               " agents=" + std::to_string(node.required_agents) +
               " desc=" + node.description + "\n";
    }
    return out;
}

std::string Session::render_agent_states() const {
    std::string out;
    for (const AgentProfile& profile : profiles_) {
        out += profile.id + ": " + profile.state.text + "\n";
    }
    return out;
}

Session::ParsedReply Session::ask_decomposition(
    TemplateId template_id, std::map<std::string, std::string> slots) {
    ParsedReply parsed;
    // Malformed replies earn exactly one re-prompt carrying the parse error.
    for (int attempt = 0; attempt < 2; ++attempt) {
        planner::PlannerRequest request;
        request.template_id = template_id;
        request.slots = slots;
        try {
            planner::PlannerReply reply = planner::complete(backend_, request);
            parsed.usages.push_back(reply.usage);
            parsed.specs = planner::parse_decomposition(reply.text);
            parsed.degenerate = false;
            return parsed;
        } catch (const planner::PlannerError& e) {
            parsed.error = e.what();
        } catch (const ParseError& e) {
            parsed.error = e.what();
        }
        slots["parse_error"] = parsed.error;
        parsed.degenerate = true;
    }
    parsed.specs.clear();
    return parsed;
}

std::vector<AllocationPair> Session::allocate(const std::set<NodeId>& ready) {
    std::vector<AllocationPair> pairs;
    std::map<NodeId, int> capacity;
    std::string ready_lines;
    for (NodeId id : ready) {
        const taskgraph::SubtaskNode& node = graph_.node(id);
        capacity[id] = node.required_agents;
        ready_lines += "id=" + std::to_string(id) +
                       " agents=" + std::to_string(node.required_agents) +
                       " desc=" + node.description + "\n";
    }
    std::set<std::string> known_agents(agent_names_.begin(), agent_names_.end());
    std::string idle_csv;
    for (const std::string& name : agent_names_) {
        if (!idle_csv.empty()) idle_csv += ",";
        idle_csv += name;
    }

    std::vector<TokenUsage> usages;
    bool fallback = false;
    std::string error;
    std::map<std::string, std::string> slots = {
        {"env", env_text_},
        {"ready_nodes", ready_lines},
        {"agents", idle_csv},
        {"agent_states", render_agent_states()},
        {"scenario", scenario_.id()},
    };
    for (int attempt = 0; attempt < 2; ++attempt) {
        planner::PlannerRequest request;
        request.template_id = TemplateId::allocate;
        request.slots = slots;
        try {
            planner::PlannerReply reply = planner::complete(backend_, request);
            usages.push_back(reply.usage);
            pairs = planner::parse_allocation(reply.text, known_agents, capacity);
            error.clear();
            break;
        } catch (const planner::PlannerError& e) {
            error = e.what();
        } catch (const ParseError& e) {
            error = e.what();
        }
        slots["parse_error"] = error;
        pairs.clear();
    }
    if (!error.empty()) {
        // Unusable planner output: deterministic pairing by ascending
        // (node id, agent id) keeps the episode moving.
        fallback = true;
        std::vector<std::string> idle = agent_names_;
        std::ranges::sort(idle);
        for (NodeId id : ready) {
            const int need = capacity[id];
            if (static_cast<int>(idle.size()) < need) continue;
            for (int k = 0; k < need; ++k) {
                pairs.push_back({idle.front(), id});
                idle.erase(idle.begin());
            }
        }
    }

    // Validation: drop pairs whose agent is already taken this round and
    // node groups that did not muster their full crew.
    std::vector<AllocationPair> accepted;
    json dropped = json::array();
    std::set<std::string> used;
    std::map<NodeId, std::vector<std::string>> groups;
    for (const AllocationPair& pair : pairs) {
        if (used.count(pair.agent)) {
            dropped.push_back({{"agent", pair.agent},
                               {"node", pair.node},
                               {"reason", "agent already dispatched"}});
            continue;
        }
        used.insert(pair.agent);
        groups[pair.node].push_back(pair.agent);
    }
    for (const auto& [node, crew] : groups) {
        if (static_cast<int>(crew.size()) < graph_.node(node).required_agents) {
            for (const std::string& agent : crew) {
                dropped.push_back({{"agent", agent},
                                   {"node", node},
                                   {"reason", "node short of its crew"}});
            }
            continue;
        }
        for (const std::string& agent : crew) accepted.push_back({agent, node});
    }

    trace_.append("allocation", world_.clock(),
                  {{"pairs",
                    [&] {
                        json arr = json::array();
                        for (const AllocationPair& p : accepted) {
                            arr.push_back({{"agent", p.agent}, {"node", p.node}});
                        }
                        return arr;
                    }()},
                   {"dropped", dropped},
                   {"fallback", fallback},
                   {"usage", usages_json(usages)}});
    return accepted;
}

void Session::dispatch(const std::vector<AllocationPair>& pairs,
                       RoundReport& report) {
    // Group crews and mark nodes running before any worker starts.
    std::map<NodeId, std::vector<std::string>> crews;
    for (const AllocationPair& pair : pairs) {
        crews[pair.node].push_back(pair.agent);
        report.dispatched.emplace_back(pair.agent, pair.node);
    }
    for (const auto& [node, crew] : crews) {
        graph_.mark_status(node, NodeStatus::running);
        graph_.set_assigned_agents(node, {crew.begin(), crew.end()});
    }

    const std::size_t journal_start = world_.journal().size();
    worldsim::WorldGate gate(world_);

    struct WorkItem {
        NodeId node;
        std::string agent;
        int agent_index;
        agents::ExecutionResult result;
    };
    std::vector<WorkItem> items;
    for (const auto& [node, crew] : crews) {
        for (std::size_t k = 0; k < crew.size(); ++k) {
            items.push_back({node, crew[k], static_cast<int>(k), {}});
        }
    }
    for (const WorkItem& item : items) gate.register_worker(item.agent);

    // Predecessor agent states per node: the states of agents assigned to
    // direct predecessor nodes.
    std::map<NodeId, std::vector<std::string>> pred_states;
    for (const auto& [node, crew] : crews) {
        std::vector<std::string> states;
        for (NodeId pred : graph_.predecessors(node)) {
            for (const std::string& agent : graph_.node(pred).assigned_agents) {
                for (const AgentProfile& profile : profiles_) {
                    if (profile.id == agent) {
                        states.push_back(agent + ": " + profile.state.text);
                    }
                }
            }
        }
        pred_states[node] = std::move(states);
    }

    const Tick exec_budget =
        std::min<Tick>(limits_.exec_tick_budget,
                       std::max<Tick>(0, limits_.tick_budget - world_.clock()));

    std::vector<std::thread> workers;
    workers.reserve(items.size());
    for (WorkItem& item : items) {
        workers.emplace_back([&, this]() {
            AgentProfile* profile = nullptr;
            for (AgentProfile& p : profiles_) {
                if (p.id == item.agent) profile = &p;
            }
            agents::ExecutionContext context;
            context.scenario = scenario_.id();
            context.env = env_text_;
            context.predecessor_states = pred_states[item.node];
            context.agent_index = item.agent_index;
            std::string crew_csv;
            for (const std::string& name : crews[item.node]) {
                if (!crew_csv.empty()) crew_csv += ",";
                crew_csv += name;
            }
            context.crew = crew_csv;
            context.tick_budget = exec_budget;
            if (limits_.wall_limits_active) {
                context.wall_budget_seconds = limits_.exec_wall_budget_s;
            }
            item.result = agents::execute(*profile, graph_.node(item.node),
                                          context, backend_, world_, gate);
        });
    }
    for (std::thread& t : workers) t.join();

    // World actions, in their deterministic application order.
    for (std::size_t i = journal_start; i < world_.journal().size(); ++i) {
        const worldsim::World::JournalEntry& entry = world_.journal()[i];
        trace_.append("action", entry.result.tick,
                      {{"request", entry.request.to_json()},
                       {"result", entry.result.to_json()}});
    }

    // Resolve node outcomes: every execution must have claimed success and
    // grounded it in at least one accepted action.
    for (const auto& [node, crew] : crews) {
        bool succeeded = true;
        std::string feedback;
        for (const WorkItem& item : items) {
            if (item.node != node) continue;
            succeeded = succeeded && item.result.succeeded;
            if (!feedback.empty()) feedback += "; ";
            feedback += item.agent + ": " + item.result.feedback;
        }
        if (feedback.empty()) feedback = "no execution feedback";
        graph_.mark_status(node,
                           succeeded ? NodeStatus::succeeded : NodeStatus::failed,
                           feedback);
        (succeeded ? report.completed : report.failed).push_back(node);
        if (!succeeded) last_failed_.push_back(node);
    }
    for (const WorkItem& item : items) {
        trace_.append("execution_end", world_.clock(),
                      {{"agent", item.agent},
                       {"node", item.node},
                       {"outcome", graph_.node(item.node).status ==
                                           NodeStatus::succeeded
                                       ? "succeeded"
                                       : "failed"},
                       {"claim", item.result.claimed_success},
                       {"grounded", item.result.succeeded},
                       {"iterations", item.result.iterations},
                       {"accepted_actions", item.result.accepted_actions},
                       {"feedback", item.result.feedback},
                       {"usage", usages_json(item.result.usages)}});
    }

    // Fold fresh history into each participant's long-term summary.
    for (AgentProfile& profile : profiles_) {
        bool participated = false;
        for (const WorkItem& item : items) {
            if (item.agent == profile.id) participated = true;
        }
        if (!participated) continue;
        statemgr::UpdateOutcome outcome = statemgr::update_agent_state(
            backend_, profile.state, profile.id, profile.history.render(),
            round_, summary_cap_);
        const std::size_t old_len = profile.state.text.size();
        profile.state = outcome.summary;
        trace_.append("state_update", world_.clock(),
                      {{"kind", "agent_state"},
                       {"agent", profile.id},
                       {"old_len", old_len},
                       {"new_len", profile.state.text.size()},
                       {"degraded", outcome.degraded},
                       {"truncated", outcome.truncated},
                       {"usage", usages_json({outcome.usage})}});
    }
}

RoundReport Session::run_round() {
    if (finished_) throw std::logic_error("episode already finished");
    RoundReport report;
    report.round = round_;
    const Tick t0 = world_.clock();
    const auto wall0 = std::chrono::steady_clock::now();
    world_.begin_round();
    trace_.append("round_start", t0, {{"round", round_}});

    // Refresh the relevant environment state E.
    statemgr::GlobalEnvState global = statemgr::global_env(world_, agent_names_);
    statemgr::RetrieveOutcome env_out =
        statemgr::retrieve_env(backend_, scenario_.goal(), global, scenario_.id());
    env_text_ = env_out.text;
    trace_.append("state_update", t0,
                  {{"kind", "env_retrieve"},
                   {"degraded", env_out.degraded},
                   {"usage", usages_json({env_out.usage})}});

    std::string agents_csv;
    for (const std::string& name : agent_names_) {
        if (!agents_csv.empty()) agents_csv += ",";
        agents_csv += name;
    }
    const std::map<std::string, std::string> base_slots = {
        {"goal", scenario_.goal()},
        {"env", env_text_},
        {"agent_states", render_agent_states()},
        {"nodes", render_nodes()},
        {"scenario", scenario_.id()},
        {"document", scenario_.document().dump()},
        {"agents", agents_csv},
        {"round", std::to_string(round_)},
    };

    // Re-decompose nodes that failed in the previous round; the first
    // replacement inherits the failed node's predecessors.
    for (NodeId failed : last_failed_) {
        const taskgraph::SubtaskNode& node = graph_.node(failed);
        std::map<std::string, std::string> slots = base_slots;
        slots["failed_description"] = node.description;
        slots["failed_feedback"] = node.feedback;
        std::string crew_csv;
        for (const std::string& agent : node.assigned_agents) {
            if (!crew_csv.empty()) crew_csv += ",";
            crew_csv += agent;
        }
        slots["failed_agents"] = crew_csv;
        ParsedReply parsed = ask_decomposition(TemplateId::redecompose, slots);
        std::vector<NodeId> created;
        if (!parsed.degenerate && !parsed.specs.empty()) {
            taskgraph::TaskGraph::BuildOptions options;
            options.round = round_;
            const std::set<NodeId> preds = graph_.predecessors(failed);
            options.root_predecessors.assign(preds.begin(), preds.end());
            for (const SubtaskSpec& spec : parsed.specs) {
                options.payloads.push_back(
                    planner::resolve_data_refs(spec, scenario_.document()));
            }
            created = graph_.build_graph(parsed.specs, options);
            report.new_nodes += static_cast<int>(created.size());
        }
        trace_.append("decomposition", t0,
                      {{"kind", "redecompose"},
                       {"failed_node", failed},
                       {"new_nodes", created},
                       {"degenerate", parsed.degenerate},
                       {"error", parsed.error},
                       {"usage", usages_json(parsed.usages)}});
    }
    last_failed_.clear();

    // Regular decomposition for this round.
    {
        ParsedReply parsed = ask_decomposition(TemplateId::decompose, base_slots);
        std::vector<NodeId> created;
        if (!parsed.degenerate && !parsed.specs.empty()) {
            taskgraph::TaskGraph::BuildOptions options;
            options.round = round_;
            for (const SubtaskSpec& spec : parsed.specs) {
                options.payloads.push_back(
                    planner::resolve_data_refs(spec, scenario_.document()));
            }
            created = graph_.build_graph(parsed.specs, options);
            report.new_nodes += static_cast<int>(created.size());
        }
        trace_.append("decomposition", t0,
                      {{"kind", "decompose"},
                       {"new_nodes", created},
                       {"degenerate", parsed.degenerate},
                       {"error", parsed.error},
                       {"usage", usages_json(parsed.usages)}});
    }

    // Ready set over succeeded/pending nodes; failed nodes stay out until a
    // re-decomposition replaces them.
    const std::set<NodeId> executed = graph_.ids_with_status(NodeStatus::succeeded);
    const std::set<NodeId> unexecuted = graph_.ids_with_status(NodeStatus::pending);
    const std::set<NodeId> ready = graph_.ready_set(executed, unexecuted);

    if (!ready.empty()) {
        const std::vector<AllocationPair> pairs = allocate(ready);
        if (!pairs.empty()) dispatch(pairs, report);
    }

    const double done = completion();
    trace_.append("round_end", world_.clock(),
                  {{"round", round_},
                   {"completion", done},
                   {"new_nodes", report.new_nodes},
                   {"dispatched", report.dispatched.size()},
                   {"completed", report.completed},
                   {"failed", report.failed}});
    round_graphs_.push_back(graph_);
    report.elapsed_ticks = world_.clock() - t0;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
            .count();
    ++round_;
    return report;
}

std::string Session::run_episode(
    const std::function<void(const RoundReport&)>& on_round) {
    std::string reason;
    while (true) {
        if (round_ >= limits_.max_rounds) {
            reason = "max_rounds";
            break;
        }
        if (completion() >= 1.0) {
            reason = "completed";
            break;
        }
        if (world_.clock() >= limits_.tick_budget) {
            reason = "budget";
            break;
        }
        if (limits_.wall_limits_active) {
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              started_)
                    .count();
            if (wall >= limits_.wall_budget_s) {
                reason = "budget";
                break;
            }
        }
        const RoundReport report = run_round();
        if (on_round) on_round(report);
    }
    // A completed goal outranks the cap that happened to be hit on the same
    // check.
    if (reason == "max_rounds" && completion() >= 1.0) reason = "completed";
    trace_.append("episode_end", world_.clock(),
                  {{"reason", reason},
                   {"completion", completion()},
                   {"rounds", round_}});
    finished_ = true;
    return reason;
}

}  // namespace dagcrew::orchestrator
