#include "dagcrew/planner.hpp"

#include <algorithm>

#include <json.hpp>

#include "dagcrew/jsonpath.hpp"

namespace dagcrew::planner {

using nlohmann::json;
using taskgraph::SubtaskSpec;

std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::decompose:          return "decompose";
        case TemplateId::redecompose:        return "redecompose";
        case TemplateId::allocate:           return "allocate";
        case TemplateId::agent_state_update: return "agent_state_update";
        case TemplateId::env_retrieve:       return "env_retrieve";
        case TemplateId::react:              return "react";
        case TemplateId::reflect:            return "reflect";
    }
    return "decompose";
}

const std::string& PlannerRequest::slot(const std::string& key) const {
    auto it = slots.find(key);
    if (it == slots.end()) {
        throw PlannerError("missing slot '" + key + "' for template " +
                           to_string(template_id));
    }
    return it->second;
}

std::string PlannerRequest::slot_or(const std::string& key,
                                    const std::string& fallback) const {
    auto it = slots.find(key);
    return it == slots.end() ? fallback : it->second;
}

const std::vector<std::string>& required_slots(TemplateId id) {
    // Field-equivalent slot sets of the prompt templates: goal and state
    // context for the decomposer and controller, task context for the
    // executor-side templates.
    static const std::map<TemplateId, std::vector<std::string>> table = {
        {TemplateId::decompose, {"goal", "env", "agent_states", "nodes"}},
        {TemplateId::redecompose,
         {"goal", "env", "agent_states", "nodes", "failed_description",
          "failed_feedback"}},
        {TemplateId::allocate, {"env", "ready_nodes", "agents", "agent_states"}},
        {TemplateId::agent_state_update, {"agent", "summary", "history"}},
        {TemplateId::env_retrieve, {"goal", "global_env"}},
        {TemplateId::react,
         {"agent", "node_description", "env", "transcript"}},
        {TemplateId::reflect, {"task", "history"}},
    };
    return table.at(id);
}

namespace {

// Slots that may legitimately be empty strings (e.g. an empty world view or
// a fresh agent with no summary yet).
bool optional_slot(TemplateId id, const std::string& key) {
    if (key == "env" || key == "global_env" || key == "nodes" ||
        key == "transcript" || key == "history" || key == "summary" ||
        key == "agent_states") {
        return true;
    }
    (void)id;
    return false;
}

/// First balanced JSON array embedded in free text, parsed. Throws
/// ParseError when none parses.
json first_json_array(const std::string& text) {
    for (std::size_t start = text.find('['); start != std::string::npos;
         start = text.find('[', start + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    const std::string candidate = text.substr(start, i - start + 1);
                    try {
                        return json::parse(candidate);
                    } catch (const json::exception&) {
                        break;  // try the next '['
                    }
                }
            }
        }
    }
    const std::string snippet = text.substr(0, std::min<std::size_t>(80, text.size()));
    throw ParseError("no structured array found in reply: \"" + snippet + "\"");
}

}  // namespace

PlannerReply complete(Backend& backend, const PlannerRequest& request) {
    for (const std::string& key : required_slots(request.template_id)) {
        auto it = request.slots.find(key);
        if (it == request.slots.end() ||
            (it->second.empty() && !optional_slot(request.template_id, key))) {
            throw PlannerError("template " + to_string(request.template_id) +
                               " requires slot '" + key + "'");
        }
    }
    return backend.complete(request);
}

std::vector<SubtaskSpec> parse_decomposition(const std::string& text) {
    const json arr = first_json_array(text);
    std::vector<SubtaskSpec> specs;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& item = arr.at(i);
        if (!item.is_object() || !item.contains("description")) {
            throw ParseError("decomposition entry " + std::to_string(i + 1) +
                             " lacks a description: " + item.dump());
        }
        SubtaskSpec spec;
        spec.description = item.at("description").get<std::string>();
        if (spec.description.empty()) {
            throw ParseError("decomposition entry " + std::to_string(i + 1) +
                             " has an empty description");
        }
        for (const auto& p : item.value("predecessors", json::array())) {
            if (!p.is_number_integer()) {
                throw ParseError("decomposition entry " + std::to_string(i + 1) +
                                 " has a non-integer predecessor");
            }
            const int idx = p.get<int>();
            if (idx < 1 || static_cast<std::size_t>(idx) > i) {
                throw ParseError("decomposition entry " + std::to_string(i + 1) +
                                 " references predecessor " + std::to_string(idx) +
                                 " (forward or self references are not allowed)");
            }
            spec.predecessor_indices.push_back(idx);
        }
        for (const auto& r : item.value("data_refs", json::array())) {
            spec.data_refs.push_back(r.get<std::string>());
        }
        spec.required_agents = item.value("agents", 1);
        if (spec.required_agents < 1) {
            throw ParseError("decomposition entry " + std::to_string(i + 1) +
                             " requests fewer than one agent");
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::string render_decomposition(const std::vector<SubtaskSpec>& specs) {
    json arr = json::array();
    for (const SubtaskSpec& spec : specs) {
        json item;
        item["description"] = spec.description;
        if (!spec.predecessor_indices.empty()) {
            item["predecessors"] = spec.predecessor_indices;
        }
        if (!spec.data_refs.empty()) item["data_refs"] = spec.data_refs;
        if (spec.required_agents != 1) item["agents"] = spec.required_agents;
        arr.push_back(std::move(item));
    }
    return arr.dump();
}

std::string empty_match_marker(const std::string& expression) {
    return "[no match: " + expression + "]";
}

std::string resolve_data_refs(const SubtaskSpec& spec, const json& document) {
    std::string out;
    for (const std::string& expr : spec.data_refs) {
        const std::vector<json> matches = jsonpath_evaluate(document, expr);
        if (matches.empty()) {
            out += empty_match_marker(expr);
            out += "\n";
            continue;
        }
        for (const json& m : matches) {
            out += m.is_string() ? m.get<std::string>() : m.dump();
            out += "\n";
        }
    }
    return out;
}

std::vector<AllocationPair> parse_allocation(
    const std::string& text, const std::set<std::string>& known_agents,
    const std::map<NodeId, int>& node_capacity) {
    const json arr = first_json_array(text);
    std::vector<AllocationPair> pairs;
    std::set<std::string> seen_agents;
    std::map<NodeId, int> node_uses;
    std::vector<std::string> offenders;
    for (const json& item : arr) {
        if (!item.is_object() || !item.contains("agent") || !item.contains("node")) {
            throw ParseError("allocation entry is not an agent/node pair: " +
                             item.dump());
        }
        AllocationPair pair;
        pair.agent = item.at("agent").get<std::string>();
        pair.node = item.at("node").get<NodeId>();
        if (!known_agents.count(pair.agent)) {
            offenders.push_back("unknown agent '" + pair.agent + "'");
            continue;
        }
        if (!node_capacity.count(pair.node)) {
            offenders.push_back("unknown node " + std::to_string(pair.node));
            continue;
        }
        if (!seen_agents.insert(pair.agent).second) {
            throw ParseError("agent '" + pair.agent +
                             "' assigned more than once in one reply");
        }
        if (++node_uses[pair.node] > node_capacity.at(pair.node)) {
            throw ParseError("node " + std::to_string(pair.node) +
                             " assigned beyond its requested agent count");
        }
        pairs.push_back(std::move(pair));
    }
    if (!offenders.empty()) {
        std::string what = "allocation references unknown entities: ";
        for (std::size_t i = 0; i < offenders.size(); ++i) {
            if (i) what += "; ";
            what += offenders[i];
        }
        throw ParseError(what);
    }
    return pairs;
}

}  // namespace dagcrew::planner
