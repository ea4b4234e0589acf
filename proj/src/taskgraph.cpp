#include "dagcrew/taskgraph.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace dagcrew::taskgraph {

using nlohmann::json;

std::string to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::pending:   return "pending";
        case NodeStatus::running:   return "running";
        case NodeStatus::succeeded: return "succeeded";
        case NodeStatus::failed:    return "failed";
    }
    return "pending";
}

NodeStatus status_from_string(const std::string& s) {
    if (s == "pending") return NodeStatus::pending;
    if (s == "running") return NodeStatus::running;
    if (s == "succeeded") return NodeStatus::succeeded;
    if (s == "failed") return NodeStatus::failed;
    throw GraphError("unknown node status: " + s);
}

std::vector<NodeId> TaskGraph::build_graph(const std::vector<SubtaskSpec>& specs,
                                           const BuildOptions& options) {
    if (!options.payloads.empty() && options.payloads.size() != specs.size()) {
        throw GraphError("payload list does not match spec batch size");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (int p : specs[i].predecessor_indices) {
            if (p < 1 || static_cast<std::size_t>(p) > i) {
                throw GraphError("spec " + std::to_string(i + 1) +
                                 " lists malformed predecessor index " +
                                 std::to_string(p));
            }
        }
        if (specs[i].required_agents < 1) {
            throw GraphError("spec " + std::to_string(i + 1) +
                             " requests fewer than one agent");
        }
    }

    std::vector<NodeId> created;
    created.reserve(specs.size());
    // Predecessor sets of the batch so far, used by the share-with-previous
    // rule. Indexed like the batch.
    std::vector<std::set<NodeId>> batch_preds(specs.size());

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const SubtaskSpec& spec = specs[i];
        SubtaskNode node;
        const NodeId id = next_id_++;
        node.id = id;
        node.description = spec.description;
        node.round = options.round;
        node.required_agents = spec.required_agents;
        if (!options.payloads.empty()) node.data = options.payloads[i];

        std::set<NodeId>& preds = batch_preds[i];
        if (!spec.predecessor_indices.empty()) {
            for (int p : spec.predecessor_indices) {
                preds.insert(created[static_cast<std::size_t>(p) - 1]);
            }
        } else if (i == 0) {
            for (NodeId r : options.root_predecessors) {
                if (!nodes_.count(r)) {
                    throw GraphError("root predecessor " + std::to_string(r) +
                                     " is not a known node");
                }
                preds.insert(r);
            }
        } else {
            preds = batch_preds[i - 1];
        }

        nodes_.emplace(id, std::move(node));
        order_.push_back(id);
        created.push_back(id);
        for (NodeId p : preds) edges_.emplace(p, id);
    }
    return created;
}

std::set<NodeId> TaskGraph::ready_set(const std::set<NodeId>& executed,
                                      const std::set<NodeId>& unexecuted) const {
    for (const auto& group : {executed, unexecuted}) {
        for (NodeId id : group) {
            if (!nodes_.count(id)) {
                throw GraphError("unknown node id " + std::to_string(id));
            }
        }
    }
    std::set<NodeId> ready;
    for (NodeId id : unexecuted) {
        if (executed.count(id)) {
            throw GraphError("node " + std::to_string(id) +
                             " is both executed and unexecuted");
        }
        const std::set<NodeId> preds = predecessors(id);
        if (std::ranges::includes(executed, preds)) ready.insert(id);
    }
    return ready;
}

void TaskGraph::mark_status(NodeId id, NodeStatus status,
                            const std::string& feedback) {
    SubtaskNode& n = node_mut(id);
    const bool legal =
        (n.status == NodeStatus::pending && status == NodeStatus::running) ||
        (n.status == NodeStatus::running && (status == NodeStatus::succeeded ||
                                             status == NodeStatus::failed));
    if (!legal) {
        throw GraphError("illegal status transition for node " +
                         std::to_string(id) + ": " + to_string(n.status) +
                         " -> " + to_string(status));
    }
    const bool terminal =
        status == NodeStatus::succeeded || status == NodeStatus::failed;
    if (terminal && feedback.empty()) {
        throw GraphError("terminal status requires non-empty feedback (node " +
                         std::to_string(id) + ")");
    }
    if (!terminal && !feedback.empty()) {
        throw GraphError("feedback is only attached on terminal status (node " +
                         std::to_string(id) + ")");
    }
    n.status = status;
    n.feedback = feedback;
}

void TaskGraph::set_assigned_agents(NodeId id,
                                    const std::set<std::string>& agents) {
    node_mut(id).assigned_agents = agents;
}

const SubtaskNode& TaskGraph::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw GraphError("unknown node id " + std::to_string(id));
    }
    return it->second;
}

SubtaskNode& TaskGraph::node_mut(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw GraphError("unknown node id " + std::to_string(id));
    }
    return it->second;
}

std::set<NodeId> TaskGraph::predecessors(NodeId id) const {
    if (!nodes_.count(id)) {
        throw GraphError("unknown node id " + std::to_string(id));
    }
    std::set<NodeId> out;
    for (const auto& [u, v] : edges_) {
        if (v == id) out.insert(u);
    }
    return out;
}

std::set<NodeId> TaskGraph::successors(NodeId id) const {
    if (!nodes_.count(id)) {
        throw GraphError("unknown node id " + std::to_string(id));
    }
    std::set<NodeId> out;
    for (const auto& [u, v] : edges_) {
        if (u == id) out.insert(v);
    }
    return out;
}

std::set<NodeId> TaskGraph::ids_with_status(NodeStatus s) const {
    std::set<NodeId> out;
    for (const auto& [id, n] : nodes_) {
        if (n.status == s) out.insert(id);
    }
    return out;
}

std::string TaskGraph::export_dot() const {
    std::ostringstream out;
    out << "digraph taskgraph {\n";
    for (NodeId id : order_) {
        const SubtaskNode& n = nodes_.at(id);
        std::string label = n.description;
        for (auto& c : label) {
            if (c == '"') c = '\'';
        }
        out << "  n" << id << " [label=\"" << id << ": " << label << "\\n["
            << to_string(n.status) << "]\"];\n";
    }
    for (const auto& [u, v] : edges_) {
        out << "  n" << u << " -> n" << v << ";\n";
    }
    out << "}\n";
    return out.str();
}

std::string TaskGraph::export_structured() const {
    std::ostringstream out;
    for (NodeId id : order_) {
        const SubtaskNode& n = nodes_.at(id);
        json rec;
        rec["id"] = n.id;
        rec["status"] = to_string(n.status);
        rec["description"] = n.description;
        rec["preds"] = predecessors(id);
        rec["data"] = n.data;
        rec["agents"] = n.assigned_agents;
        rec["feedback"] = n.feedback;
        rec["round"] = n.round;
        rec["required_agents"] = n.required_agents;
        out << rec.dump() << "\n";
    }
    return out.str();
}

TaskGraph TaskGraph::import_structured(const std::string& text) {
    TaskGraph g;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw GraphError("bad graph record on line " +
                             std::to_string(lineno) + ": " + e.what());
        }
        SubtaskNode n;
        n.id = rec.at("id").get<NodeId>();
        n.status = status_from_string(rec.at("status").get<std::string>());
        n.description = rec.at("description").get<std::string>();
        n.data = rec.value("data", "");
        n.feedback = rec.value("feedback", "");
        n.round = rec.value("round", 0);
        n.required_agents = rec.value("required_agents", 1);
        for (const auto& a : rec.value("agents", json::array())) {
            n.assigned_agents.insert(a.get<std::string>());
        }
        if (g.nodes_.count(n.id)) {
            throw GraphError("duplicate node id on line " +
                             std::to_string(lineno));
        }
        for (const auto& p : rec.at("preds")) {
            const NodeId pid = p.get<NodeId>();
            if (!g.nodes_.count(pid)) {
                throw GraphError("predecessor " + std::to_string(pid) +
                                 " on line " + std::to_string(lineno) +
                                 " does not precede the node");
            }
            g.edges_.emplace(pid, n.id);
        }
        g.next_id_ = std::max(g.next_id_, n.id + 1);
        g.order_.push_back(n.id);
        g.nodes_.emplace(n.id, std::move(n));
    }
    return g;
}

}  // namespace dagcrew::taskgraph
