#pragma once

#include <string>

#include "dagcrew/planner.hpp"

namespace dagcrew::planner {

struct HttpConfig {
    std::string base_url;          // e.g. http://localhost:8080
    std::string model;
    double temperature = 0.0;
    long max_output_tokens = 4096;
    long context_tokens = 128000;
    std::string api_key_env = "DAGCREW_API_KEY";
    int max_attempts = 3;
    int initial_backoff_ms = 1000;
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
};

/// Renders a request into the chat message the template stands for: a
/// role line plus one labelled section per slot.
std::string render_prompt(const PlannerRequest& request);

/// Chat-completion client. One POST per complete() call with temperature
/// and token budgets from the configuration; transient transport failures
/// are retried with exponential backoff before surfacing a TransportError.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpConfig config);

    PlannerReply complete(const PlannerRequest& request) override;
    std::string name() const override { return "http"; }

    const HttpConfig& config() const { return config_; }

private:
    HttpConfig config_;
    std::string api_key_;
};

}  // namespace dagcrew::planner
