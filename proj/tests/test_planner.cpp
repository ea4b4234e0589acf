#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <thread>

#include <httplib.h>

#include "dagcrew/jsonpath.hpp"
#include "dagcrew/planner.hpp"
#include "dagcrew/planner_http.hpp"
#include "dagcrew/planner_scripted.hpp"
#include "dagcrew/tasklib.hpp"

using namespace dagcrew;
using namespace dagcrew::planner;
using nlohmann::json;
using taskgraph::SubtaskSpec;

TEST_CASE("parse_decomposition finds the array inside surrounding prose") {
    const std::string reply = R"(Sure! Here is the plan you asked for:
[
  {"description": "scout the area"},
  {"description": "gather wood", "predecessors": [1], "data_refs": ["$.wood"]},
  {"description": "build shelter", "predecessors": [2], "agents": 2}
]
Let me know if you need anything else.)";
    const std::vector<SubtaskSpec> specs = parse_decomposition(reply);
    REQUIRE(specs.size() == 3);
    CHECK(specs[0].description == "scout the area");
    CHECK(specs[0].predecessor_indices.empty());
    CHECK(specs[1].predecessor_indices == std::vector<int>{1});
    CHECK(specs[1].data_refs == std::vector<std::string>{"$.wood"});
    CHECK(specs[2].required_agents == 2);
}

TEST_CASE("empty array parses to an empty spec list") {
    CHECK(parse_decomposition("nothing to do: []").empty());
}

TEST_CASE("prose without structure is a parse error with a snippet") {
    CHECK_THROWS_WITH_AS(parse_decomposition("I could not decide on subtasks."),
                         doctest::Contains("no structured array"), ParseError);
}

TEST_CASE("forward and self references are rejected with the position") {
    CHECK_THROWS_WITH_AS(
        parse_decomposition(R"([{"description":"a","predecessors":[1]}])"),
        doctest::Contains("entry 1"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_decomposition(
            R"([{"description":"a"},{"description":"b","predecessors":[3]}])"),
        doctest::Contains("entry 2"), ParseError);
}

TEST_CASE("render then parse is the identity on valid spec lists") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SubtaskSpec> specs;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            SubtaskSpec s;
            s.description = "step " + std::to_string(i) + " #" +
                            std::to_string(rng() % 1000);
            for (int p = 1; p <= i; ++p) {
                if (rng() % 3 == 0) s.predecessor_indices.push_back(p);
            }
            if (rng() % 2) s.data_refs.push_back("$.items[" +
                                                 std::to_string(rng() % 5) + "]");
            s.required_agents = 1 + static_cast<int>(rng() % 3);
            specs.push_back(std::move(s));
        }
        const std::vector<SubtaskSpec> back =
            parse_decomposition(render_decomposition(specs));
        REQUIRE(back.size() == specs.size());
        for (std::size_t i = 0; i < specs.size(); ++i) {
            CHECK(back[i].description == specs[i].description);
            CHECK(back[i].predecessor_indices == specs[i].predecessor_indices);
            CHECK(back[i].data_refs == specs[i].data_refs);
            CHECK(back[i].required_agents == specs[i].required_agents);
        }
    }
}

TEST_CASE("data refs resolve against the blueprint document") {
    const json doc = harness::construction_document("task_24");
    SubtaskSpec spec;
    spec.data_refs = {"$.task_24[0]"};
    const std::string payload = resolve_data_refs(spec, doc);
    CHECK(payload.find("material:grass_block") != std::string::npos);
    CHECK(payload.find("start:[-9 -60 -1]") != std::string::npos);
}

TEST_CASE("unmatched path expressions leave an explicit marker") {
    SubtaskSpec spec;
    spec.data_refs = {"$.missing.entry"};
    const std::string payload = resolve_data_refs(spec, json{{"other", 1}});
    CHECK(payload.find(empty_match_marker("$.missing.entry")) !=
          std::string::npos);
}

TEST_CASE("the root path returns the whole document") {
    SubtaskSpec spec;
    spec.data_refs = {"$"};
    const json doc = {{"a", 1}, {"b", "two"}};
    CHECK(resolve_data_refs(spec, doc) == doc.dump() + "\n");
}

TEST_CASE("syntactically invalid paths name the expression") {
    SubtaskSpec spec;
    spec.data_refs = {"task.a"};
    CHECK_THROWS_WITH_AS(resolve_data_refs(spec, json::object()),
                         doctest::Contains("task.a"), ParseError);
}

TEST_CASE("jsonpath member, index and wildcard steps") {
    const json doc = json::parse(
        R"({"rooms": [{"id": 1, "hint": "a"}, {"id": 2, "hint": "b"}]})");
    CHECK(jsonpath_evaluate(doc, "$.rooms[1].hint").at(0) == "b");
    const auto all_ids = jsonpath_evaluate(doc, "$.rooms[*].id");
    REQUIRE(all_ids.size() == 2);
    CHECK(all_ids[0] == 1);
    CHECK(all_ids[1] == 2);
    CHECK(jsonpath_evaluate(doc, "$.rooms[9]").empty());
    CHECK(jsonpath_evaluate(doc, "$['rooms'][0]['id']").at(0) == 1);
}

TEST_CASE("parse_allocation accepts pairs and validates entities") {
    const std::set<std::string> agents = {"Alice", "Bob"};
    const std::map<NodeId, int> capacity = {{2, 1}, {3, 1}, {4, 2}};

    SUBCASE("two disjoint pairs") {
        const auto pairs = parse_allocation(
            R"([{"agent":"Alice","node":2},{"agent":"Bob","node":3}])", agents,
            capacity);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].agent == "Alice");
        CHECK(pairs[0].node == 2);
        CHECK(pairs[1].agent == "Bob");
        CHECK(pairs[1].node == 3);
    }
    SUBCASE("an agent may appear only once") {
        CHECK_THROWS_WITH_AS(
            parse_allocation(
                R"([{"agent":"Alice","node":2},{"agent":"Alice","node":3}])",
                agents, capacity),
            doctest::Contains("Alice"), ParseError);
    }
    SUBCASE("empty pairing is a legal idle round") {
        CHECK(parse_allocation("[]", agents, capacity).empty());
    }
    SUBCASE("unknown entities are listed") {
        CHECK_THROWS_WITH_AS(
            parse_allocation(R"([{"agent":"Mallory","node":2}])", agents,
                             capacity),
            doctest::Contains("Mallory"), ParseError);
        CHECK_THROWS_WITH_AS(
            parse_allocation(R"([{"agent":"Alice","node":9}])", agents, capacity),
            doctest::Contains("9"), ParseError);
    }
    SUBCASE("multi-agent nodes take pairs up to their capacity") {
        const auto pairs = parse_allocation(
            R"([{"agent":"Alice","node":4},{"agent":"Bob","node":4}])", agents,
            capacity);
        CHECK(pairs.size() == 2);
        CHECK_THROWS_WITH_AS(
            parse_allocation(
                R"([{"agent":"Alice","node":2},{"agent":"Bob","node":2}])",
                agents, capacity),
            doctest::Contains("requested agent count"), ParseError);
    }
}

TEST_CASE("scripted backend replies are deterministic") {
    ScriptedBackend backend;
    PlannerRequest request;
    request.template_id = TemplateId::decompose;
    request.slots = {{"goal", "build it"},
                     {"env", ""},
                     {"agent_states", "Alice:\n"},
                     {"nodes", ""},
                     {"scenario", "construction"},
                     {"document", harness::construction_document("task_0").dump()},
                     {"agents", "Alice,Bob"}};
    const PlannerReply a = complete(backend, request);
    const PlannerReply b = complete(backend, request);
    CHECK(a.text == b.text);
    CHECK(a.usage == b.usage);
    CHECK(a.usage.prompt_tokens >= 0);
    CHECK(a.usage.completion_tokens >= 0);
    // And the reply is a parsable non-empty plan.
    CHECK(!parse_decomposition(a.text).empty());
}

TEST_CASE("complete() enforces required template slots") {
    ScriptedBackend backend;
    PlannerRequest request;
    request.template_id = TemplateId::decompose;
    request.slots = {{"env", "x"}};
    CHECK_THROWS_WITH_AS(complete(backend, request), doctest::Contains("goal"),
                         PlannerError);
}

TEST_CASE("scripted reflect on an empty history says so") {
    ScriptedBackend backend;
    PlannerRequest reflect;
    reflect.template_id = TemplateId::reflect;
    reflect.slots = {{"task", "place a block"}, {"history", ""}};
    const PlannerReply r = complete(backend, reflect);
    CHECK(r.text == "no actions taken");
}

TEST_CASE("http backend surfaces unreachable endpoints as transport errors") {
    HttpConfig config;
    config.base_url = "http://127.0.0.1:9";  // nothing listens here
    config.model = "test-model";
    config.max_attempts = 1;
    config.initial_backoff_ms = 1;
    config.connect_timeout_s = 1;
    HttpBackend backend(config);
    PlannerRequest request;
    request.template_id = TemplateId::reflect;
    request.slots = {{"task", "x"}, {"history", ""}};
    CHECK_THROWS_AS(complete(backend, request), TransportError);
}

TEST_CASE("http backend defaults follow the model configuration table") {
    HttpConfig config;
    CHECK(config.temperature == 0.0);
    CHECK(config.max_output_tokens == 4096);
    CHECK(config.context_tokens == 128000);
    CHECK(config.api_key_env == "DAGCREW_API_KEY");
}

TEST_CASE("http backend round-trips a chat completion") {
    httplib::Server server;
    json seen_body;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    seen_body = json::parse(req.body);
                    json reply;
                    reply["choices"] = json::array(
                        {json{{"message", {{"role", "assistant"},
                                           {"content", "terminal(succeeded)"}}},
                              {"finish_reason", "stop"}}});
                    reply["usage"] = {{"prompt_tokens", 321},
                                      {"completion_tokens", 7}};
                    res.set_content(reply.dump(), "application/json");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "test-model";
    HttpBackend backend(config);
    PlannerRequest request;
    request.template_id = TemplateId::react;
    request.slots = {{"agent", "Alice"},
                     {"node_description", "place material=stone"},
                     {"env", "x"},
                     {"transcript", ""}};
    const PlannerReply reply = complete(backend, request);
    CHECK(reply.text == "terminal(succeeded)");
    CHECK(reply.usage.prompt_tokens == 321);
    CHECK(reply.usage.completion_tokens == 7);
    CHECK(seen_body.at("model") == "test-model");
    CHECK(seen_body.at("temperature") == 0.0);
    CHECK(seen_body.at("max_tokens") == 4096);

    server.stop();
    thread.join();
}

TEST_CASE("a length-capped completion raises a truncation error with text") {
    httplib::Server server;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    json reply;
                    reply["choices"] = json::array(
                        {json{{"message", {{"content", "partial answer..."}}},
                              {"finish_reason", "length"}}});
                    reply["usage"] = {{"prompt_tokens", 1},
                                      {"completion_tokens", 4096}};
                    res.set_content(reply.dump(), "application/json");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "m";
    HttpBackend backend(config);
    PlannerRequest request;
    request.template_id = TemplateId::reflect;
    request.slots = {{"task", "x"}, {"history", ""}};
    try {
        complete(backend, request);
        FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
        CHECK(e.partial_text == "partial answer...");
    }
    server.stop();
    thread.join();
}
