#include "dagcrew/planner_http.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace dagcrew::planner {

using nlohmann::json;

std::string render_prompt(const PlannerRequest& request) {
    static const std::map<TemplateId, std::string> preamble = {
        {TemplateId::decompose,
         "You are the task decomposer of a Minecraft agent team. Break the "
         "goal into subtasks as a JSON array; each entry carries a "
         "description, optional 1-based predecessor indices into this list, "
         "optional JSON path data_refs into the task document, and an "
         "optional agents count."},
        {TemplateId::redecompose,
         "A subtask failed. Replace it with new subtasks as a JSON array, "
         "taking the feedback into account."},
        {TemplateId::allocate,
         "You are the agent controller. Pair idle agents with ready "
         "subtasks and answer with a JSON array of {\"agent\", \"node\"} "
         "objects."},
        {TemplateId::agent_state_update,
         "Update the agent's long-term state summary from its recent "
         "actions. Answer with the new summary only."},
        {TemplateId::env_retrieve,
         "Condense the environment facts to those relevant to the goal."},
        {TemplateId::react,
         "You control one Minecraft agent. Answer with exactly one API call "
         "like navigateTo(x, y, z), or terminal(succeeded) / "
         "terminal(failed) when the subtask is finished."},
        {TemplateId::reflect,
         "Summarise the execution below as feedback for the task node."},
    };
    std::string out = preamble.at(request.template_id);
    out += "\n";
    for (const auto& [key, value] : request.slots) {
        out += "\n## " + key + "\n" + value + "\n";
    }
    return out;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key_ = key;
    }
}

PlannerReply HttpBackend::complete(const PlannerRequest& request) {
    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = std::min<long>(request.budget, config_.max_output_tokens);
    body["messages"] = json::array({json{{"role", "system"},
                                         {"content", "You are a helpful "
                                                     "Minecraft agent."}},
                                    json{{"role", "user"},
                                         {"content", render_prompt(request)}}});
    const std::string payload = body.dump();

    std::string last_error;
    int backoff_ms = config_.initial_backoff_ms;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.connect_timeout_s, 0);
        client.set_read_timeout(config_.read_timeout_s, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client.Post("/v1/chat/completions", headers, payload,
                               "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw PlannerError("completion endpoint returned status " +
                               std::to_string(res->status) + ": " + res->body);
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            throw PlannerError(std::string("malformed completion body: ") +
                               e.what());
        }
        PlannerReply out;
        const json& choice = reply.at("choices").at(0);
        out.text = choice.at("message").at("content").get<std::string>();
        if (reply.contains("usage")) {
            out.usage.prompt_tokens =
                reply["usage"].value("prompt_tokens", 0L);
            out.usage.completion_tokens =
                reply["usage"].value("completion_tokens", 0L);
        }
        if (choice.value("finish_reason", "") == "length") {
            throw TruncationError("completion hit the output token budget",
                                  out.text);
        }
        return out;
    }
    throw TransportError("completion failed after " +
                         std::to_string(config_.max_attempts) + " attempts: " +
                         last_error);
}

}  // namespace dagcrew::planner
