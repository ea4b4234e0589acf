#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/common.hpp"

namespace dagcrew::harness {

/// One trace record. Events are totally ordered by (tick, seq); the payload
/// schema depends on the type.
struct TraceEvent {
    int version = 1;
    long seq = 0;
    Tick tick = 0;
    std::string type;
    nlohmann::json payload;

    nlohmann::json to_json() const;
    static TraceEvent from_json(const nlohmann::json& j);
};

/// Append-only episode log. Every decomposition, allocation, world action,
/// execution outcome and state update lands here; metrics and replay are
/// computed from it.
class EpisodeTrace {
public:
    TraceEvent& append(const std::string& type, Tick tick,
                       nlohmann::json payload);

    const std::vector<TraceEvent>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }

    std::vector<const TraceEvent*> of_type(const std::string& type) const;

    std::string to_jsonl() const;
    static EpisodeTrace from_jsonl(const std::string& text);

private:
    std::vector<TraceEvent> events_;
    long next_seq_ = 0;
};

}  // namespace dagcrew::harness
