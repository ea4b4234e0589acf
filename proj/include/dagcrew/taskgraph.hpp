#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dagcrew/common.hpp"

namespace dagcrew::taskgraph {

enum class NodeStatus { pending, running, succeeded, failed };

std::string to_string(NodeStatus s);
NodeStatus status_from_string(const std::string& s);

/// One entry of a decomposition batch as it comes out of the planner.
/// Predecessor indices are 1-based positions within the same batch and must
/// point strictly backwards; forward and self references are rejected when
/// the batch is parsed.
struct SubtaskSpec {
    std::string description;
    std::vector<int> predecessor_indices;
    std::vector<std::string> data_refs;
    int required_agents = 1;
};

struct SubtaskNode {
    NodeId id = 0;
    std::string description;
    std::string data;
    std::set<std::string> assigned_agents;
    std::string feedback;
    NodeStatus status = NodeStatus::pending;
    int round = 0;
    int required_agents = 1;

    friend bool operator==(const SubtaskNode&, const SubtaskNode&) = default;
};

/// The subtask DAG. Edges always point from an earlier node in insertion
/// order to a later one, so the graph is acyclic by construction.
class TaskGraph {
public:
    struct BuildOptions {
        /// Existing node ids wired as predecessors of the first spec of the
        /// batch when that spec lists none (re-decomposition inherits the
        /// failed node's predecessors this way).
        std::vector<NodeId> root_predecessors;
        /// Resolved data payload per spec, parallel to the batch.
        std::vector<std::string> payloads;
        int round = 0;
    };

    /// Appends one decomposition batch. Each spec becomes a node; a spec
    /// listing predecessor indices gets edges from those batch members, and
    /// a spec listing none (other than the batch head) shares the
    /// predecessor set of the spec right before it.
    std::vector<NodeId> build_graph(const std::vector<SubtaskSpec>& specs,
                                    const BuildOptions& options);
    std::vector<NodeId> build_graph(const std::vector<SubtaskSpec>& specs) {
        return build_graph(specs, BuildOptions());
    }

    /// Ready set per the predecessor-subset rule: members of `unexecuted`
    /// whose predecessors are all in `executed` (or absent).
    std::set<NodeId> ready_set(const std::set<NodeId>& executed,
                               const std::set<NodeId>& unexecuted) const;

    void mark_status(NodeId id, NodeStatus status,
                     const std::string& feedback = "");

    void set_assigned_agents(NodeId id, const std::set<std::string>& agents);

    const SubtaskNode& node(NodeId id) const;
    bool contains(NodeId id) const { return nodes_.count(id) != 0; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    const std::vector<NodeId>& insertion_order() const { return order_; }
    const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

    std::set<NodeId> predecessors(NodeId id) const;
    std::set<NodeId> successors(NodeId id) const;

    std::set<NodeId> ids_with_status(NodeStatus s) const;

    /// Graphviz rendering with one status-labelled node statement per node.
    std::string export_dot() const;

    /// Line-oriented lossless form; import_structured() round-trips it.
    std::string export_structured() const;
    static TaskGraph import_structured(const std::string& text);

    friend bool operator==(const TaskGraph&, const TaskGraph&) = default;

private:
    SubtaskNode& node_mut(NodeId id);

    std::map<NodeId, SubtaskNode> nodes_;
    std::set<std::pair<NodeId, NodeId>> edges_;
    std::vector<NodeId> order_;
    NodeId next_id_ = 1;
};

}  // namespace dagcrew::taskgraph
