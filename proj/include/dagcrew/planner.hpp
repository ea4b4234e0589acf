#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dagcrew/common.hpp"
#include "dagcrew/taskgraph.hpp"

namespace dagcrew::planner {

enum class TemplateId {
    decompose,
    redecompose,
    allocate,
    agent_state_update,
    env_retrieve,
    react,
    reflect,
};

std::string to_string(TemplateId id);

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;

    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct PlannerRequest {
    TemplateId template_id = TemplateId::decompose;
    std::map<std::string, std::string> slots;
    long budget = 4096;

    const std::string& slot(const std::string& key) const;
    std::string slot_or(const std::string& key, const std::string& fallback) const;
};

struct PlannerReply {
    std::string text;
    TokenUsage usage;
};

/// Required slots per template. complete() rejects requests missing any.
const std::vector<std::string>& required_slots(TemplateId id);

class PlannerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transient transport problem; the call may be retried.
class TransportError : public PlannerError {
public:
    using PlannerError::PlannerError;
};

/// Output budget exhausted mid-reply; carries whatever text arrived.
class TruncationError : public PlannerError {
public:
    TruncationError(const std::string& what, std::string partial)
        : PlannerError(what), partial_text(std::move(partial)) {}
    std::string partial_text;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual PlannerReply complete(const PlannerRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Validates the request against the template's required slots, then asks
/// the backend.
PlannerReply complete(Backend& backend, const PlannerRequest& request);

/// Extracts the first well-formed JSON array from free-form completion text
/// and interprets its elements as subtask specs. Surrounding prose is
/// tolerated.
std::vector<taskgraph::SubtaskSpec> parse_decomposition(const std::string& text);

/// Inverse of parse_decomposition for valid spec lists.
std::string render_decomposition(const std::vector<taskgraph::SubtaskSpec>& specs);

/// Marker emitted in place of a path expression that matched nothing.
std::string empty_match_marker(const std::string& expression);

/// Evaluates the spec's path expressions against the document and
/// concatenates the matches in expression order, one per line. Expressions
/// that match nothing contribute an explicit marker.
std::string resolve_data_refs(const taskgraph::SubtaskSpec& spec,
                              const nlohmann::json& document);

struct AllocationPair {
    std::string agent;
    NodeId node = 0;

    friend bool operator==(const AllocationPair&, const AllocationPair&) = default;
};

/// Parses agent/node pairings out of completion text. `node_capacity` maps
/// each assignable node to the number of agents it asks for; a node may be
/// paired more than once only up to that capacity, and an agent at most once.
std::vector<AllocationPair> parse_allocation(
    const std::string& text, const std::set<std::string>& known_agents,
    const std::map<NodeId, int>& node_capacity);

}  // namespace dagcrew::planner
