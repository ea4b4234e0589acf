#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dagcrew/taskgraph.hpp"

using namespace dagcrew;
using taskgraph::NodeStatus;
using taskgraph::SubtaskSpec;
using taskgraph::TaskGraph;

namespace {

SubtaskSpec spec(const std::string& desc, std::vector<int> preds = {}) {
    SubtaskSpec s;
    s.description = desc;
    s.predecessor_indices = std::move(preds);
    return s;
}

/// Brute-force readiness: a node is ready when every predecessor drawn
/// straight from the edge list is executed.
std::set<NodeId> ready_oracle(const TaskGraph& g, const std::set<NodeId>& executed,
                              const std::set<NodeId>& unexecuted) {
    std::set<NodeId> ready;
    for (NodeId n : unexecuted) {
        bool ok = true;
        for (const auto& [u, v] : g.edges()) {
            if (v == n && !executed.count(u)) ok = false;
        }
        if (ok) ready.insert(n);
    }
    return ready;
}

/// Kahn's algorithm; true when every node is consumed (no cycle).
bool is_acyclic(const TaskGraph& g) {
    std::map<NodeId, int> indegree;
    for (NodeId id : g.insertion_order()) indegree[id] = 0;
    for (const auto& [u, v] : g.edges()) indegree[v] += 1;
    std::vector<NodeId> queue;
    for (const auto& [id, d] : indegree) {
        if (d == 0) queue.push_back(id);
    }
    std::size_t seen = 0;
    while (!queue.empty()) {
        const NodeId id = queue.back();
        queue.pop_back();
        ++seen;
        for (const auto& [u, v] : g.edges()) {
            if (u == id && --indegree[v] == 0) queue.push_back(v);
        }
    }
    return seen == g.size();
}

TaskGraph random_graph(std::mt19937& rng, int max_nodes) {
    const int n = 1 + static_cast<int>(rng() % max_nodes);
    std::vector<SubtaskSpec> specs;
    for (int i = 0; i < n; ++i) {
        SubtaskSpec s = spec("node " + std::to_string(i + 1));
        for (int p = 1; p <= i; ++p) {
            if (rng() % 3 == 0) s.predecessor_indices.push_back(p);
        }
        specs.push_back(std::move(s));
    }
    TaskGraph g;
    g.build_graph(specs);
    return g;
}

}  // namespace

TEST_CASE("single spec becomes a lone root") {
    TaskGraph g;
    g.build_graph({spec("only")});
    CHECK(g.size() == 1);
    CHECK(g.edges().empty());
    CHECK(g.node(1).description == "only");
    CHECK(g.node(1).status == NodeStatus::pending);
}

TEST_CASE("a spec without predecessors shares the previous spec's") {
    TaskGraph g;
    g.build_graph({spec("a"), spec("b", {1}), spec("c")});
    CHECK(g.size() == 3);
    const std::set<std::pair<NodeId, NodeId>> want = {{1, 2}, {1, 3}};
    CHECK(g.edges() == want);
}

TEST_CASE("sharing an empty predecessor set keeps both specs roots") {
    TaskGraph g;
    g.build_graph({spec("a"), spec("b")});
    CHECK(g.size() == 2);
    CHECK(g.edges().empty());
}

TEST_CASE("malformed predecessor indices are rejected with the position") {
    TaskGraph g;
    CHECK_THROWS_WITH_AS(g.build_graph({spec("a", {1})}),
                         doctest::Contains("spec 1"), GraphError);
    CHECK_THROWS_WITH_AS(g.build_graph({spec("a"), spec("b", {3})}),
                         doctest::Contains("spec 2"), GraphError);
    CHECK_THROWS_AS(g.build_graph({spec("a"), spec("b", {0})}), GraphError);
    // The batch is validated before any node is created.
    CHECK(g.empty());
}

TEST_CASE("re-decomposition wires the replacement to the failed node's preds") {
    TaskGraph g;
    g.build_graph({spec("root"), spec("doomed", {1})});
    g.mark_status(2, NodeStatus::running);
    g.mark_status(2, NodeStatus::failed, "missing material");

    TaskGraph::BuildOptions options;
    const std::set<NodeId> preds = g.predecessors(2);
    options.root_predecessors.assign(preds.begin(), preds.end());
    g.build_graph({spec("replacement"), spec("follow-up")}, options);
    CHECK(g.edges().count({1, 3}) == 1);   // inherited from the failed node
    CHECK(g.edges().count({1, 4}) == 1);   // shared by the next batch member
    CHECK(g.edges().count({2, 3}) == 0);
}

TEST_CASE("status transitions follow pending -> running -> terminal") {
    TaskGraph g;
    g.build_graph({spec("a")});
    CHECK_NOTHROW(g.mark_status(1, NodeStatus::running));
    CHECK_THROWS_WITH_AS(g.mark_status(1, NodeStatus::pending),
                         doctest::Contains("running"), GraphError);
    CHECK_NOTHROW(g.mark_status(1, NodeStatus::failed, "timeout"));
    CHECK(g.node(1).feedback == "timeout");
    CHECK_THROWS_WITH_AS(g.mark_status(1, NodeStatus::running),
                         doctest::Contains("failed"), GraphError);
}

TEST_CASE("terminal status requires feedback and non-terminal forbids it") {
    TaskGraph g;
    g.build_graph({spec("a"), spec("b")});
    g.mark_status(1, NodeStatus::running);
    CHECK_THROWS_AS(g.mark_status(1, NodeStatus::succeeded), GraphError);
    CHECK_THROWS_AS(g.mark_status(2, NodeStatus::running, "why"), GraphError);
    CHECK_NOTHROW(g.mark_status(1, NodeStatus::succeeded, "done"));
}

TEST_CASE("ready set on the diamond graph") {
    TaskGraph g;
    g.build_graph({spec("a"), spec("b", {1}), spec("c", {1}), spec("d", {2, 3})});
    CHECK(g.ready_set({1}, {2, 3, 4}) == std::set<NodeId>{2, 3});
    CHECK(g.ready_set({}, {1, 2, 3, 4}) == std::set<NodeId>{1});
    CHECK(g.ready_set({}, {}) == std::set<NodeId>{});
}

TEST_CASE("ready set rejects unknown ids and overlapping partitions") {
    TaskGraph g;
    g.build_graph({spec("a")});
    CHECK_THROWS_AS(g.ready_set({9}, {}), GraphError);
    CHECK_THROWS_AS(g.ready_set({}, {9}), GraphError);
    CHECK_THROWS_AS(g.ready_set({1}, {1}), GraphError);
}

TEST_CASE("ready set matches the brute-force oracle on random graphs") {
    std::mt19937 rng(20240419);
    for (int trial = 0; trial < 1000; ++trial) {
        const TaskGraph g = random_graph(rng, 12);
        std::set<NodeId> executed;
        std::set<NodeId> unexecuted;
        for (NodeId id : g.insertion_order()) {
            switch (rng() % 3) {
                case 0: executed.insert(id); break;
                case 1: unexecuted.insert(id); break;
                default: break;  // neither (e.g. running or failed)
            }
        }
        CAPTURE(trial);
        CHECK(g.ready_set(executed, unexecuted) ==
              ready_oracle(g, executed, unexecuted));
    }
}

TEST_CASE("build_graph output is acyclic for random valid spec lists") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const TaskGraph g = random_graph(rng, 12);
        CAPTURE(trial);
        CHECK(is_acyclic(g));
        // insertion order is itself a topological order
        std::map<NodeId, std::size_t> at;
        for (std::size_t i = 0; i < g.insertion_order().size(); ++i) {
            at[g.insertion_order()[i]] = i;
        }
        for (const auto& [u, v] : g.edges()) {
            CHECK(at[u] < at[v]);
        }
    }
}

TEST_CASE("moving a node into the executed set never shrinks readiness") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const TaskGraph g = random_graph(rng, 10);
        std::set<NodeId> executed;
        std::set<NodeId> unexecuted;
        for (NodeId id : g.insertion_order()) {
            (rng() % 2 ? executed : unexecuted).insert(id);
        }
        if (unexecuted.empty()) continue;
        const std::set<NodeId> before = g.ready_set(executed, unexecuted);
        auto it = unexecuted.begin();
        std::advance(it, static_cast<long>(rng() % unexecuted.size()));
        const NodeId moved = *it;
        unexecuted.erase(moved);
        executed.insert(moved);
        const std::set<NodeId> after = g.ready_set(executed, unexecuted);
        for (NodeId id : before) {
            if (id == moved) continue;
            CAPTURE(trial);
            CHECK(after.count(id) == 1);
        }
        for (NodeId id : after) CHECK(executed.count(id) == 0);
    }
}

TEST_CASE("appending a batch never disturbs existing nodes or edges") {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        TaskGraph g = random_graph(rng, 8);
        const auto old_order = g.insertion_order();
        const auto old_edges = g.edges();
        std::vector<taskgraph::SubtaskNode> old_nodes;
        for (NodeId id : old_order) old_nodes.push_back(g.node(id));

        std::vector<SubtaskSpec> batch;
        const int extra = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < extra; ++i) {
            SubtaskSpec s = spec("extra " + std::to_string(i + 1));
            for (int p = 1; p <= i; ++p) {
                if (rng() % 2) s.predecessor_indices.push_back(p);
            }
            batch.push_back(std::move(s));
        }
        g.build_graph(batch);

        REQUIRE(g.insertion_order().size() == old_order.size() + extra);
        for (std::size_t i = 0; i < old_order.size(); ++i) {
            CHECK(g.insertion_order()[i] == old_order[i]);
            CHECK(g.node(old_order[i]) == old_nodes[i]);
        }
        for (const auto& e : old_edges) CHECK(g.edges().count(e) == 1);
    }
}

TEST_CASE("dot export lists every node and edge") {
    TaskGraph empty;
    const std::string header_only = empty.export_dot();
    CHECK(header_only == "digraph taskgraph {\n}\n");

    TaskGraph g;
    g.build_graph({spec("first"), spec("second", {1})});
    const std::string dot = g.export_dot();
    CHECK(dot.find("n1 [label=\"1: first") != std::string::npos);
    CHECK(dot.find("[pending]") != std::string::npos);
    std::size_t arrows = 0;
    for (std::size_t at = dot.find("->"); at != std::string::npos;
         at = dot.find("->", at + 1)) {
        ++arrows;
    }
    CHECK(arrows == 1);
}

TEST_CASE("structured export round-trips losslessly") {
    TaskGraph g;
    TaskGraph::BuildOptions options;
    options.round = 3;
    options.payloads = {"payload a", "", "line1\nline2"};
    g.build_graph({spec("fetch"), spec("place", {1}), spec("verify", {1, 2})},
                  options);
    g.mark_status(1, NodeStatus::running);
    g.mark_status(1, NodeStatus::succeeded, "all good");
    g.set_assigned_agents(1, {"Alice", "Bob"});
    g.mark_status(2, NodeStatus::running);

    const TaskGraph back = TaskGraph::import_structured(g.export_structured());
    CHECK(back == g);
    // And the re-export is byte-identical.
    CHECK(back.export_structured() == g.export_structured());
}

TEST_CASE("empty graph exports an empty structured document") {
    TaskGraph g;
    CHECK(g.export_structured().empty());
    CHECK(TaskGraph::import_structured("") == g);
}
