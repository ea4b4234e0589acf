#include "dagcrew/trace.hpp"

#include <sstream>

namespace dagcrew::harness {

using nlohmann::json;

json TraceEvent::to_json() const {
    json j;
    j["v"] = version;
    j["seq"] = seq;
    j["tick"] = tick;
    j["type"] = type;
    j["data"] = payload;
    return j;
}

TraceEvent TraceEvent::from_json(const json& j) {
    TraceEvent e;
    e.version = j.value("v", 1);
    e.seq = j.at("seq").get<long>();
    e.tick = j.at("tick").get<Tick>();
    e.type = j.at("type").get<std::string>();
    e.payload = j.value("data", json::object());
    return e;
}

TraceEvent& EpisodeTrace::append(const std::string& type, Tick tick,
                                 json payload) {
    TraceEvent event;
    event.seq = next_seq_++;
    event.tick = tick;
    event.type = type;
    event.payload = std::move(payload);
    events_.push_back(std::move(event));
    return events_.back();
}

std::vector<const TraceEvent*> EpisodeTrace::of_type(
    const std::string& type) const {
    std::vector<const TraceEvent*> out;
    for (const TraceEvent& e : events_) {
        if (e.type == type) out.push_back(&e);
    }
    return out;
}

std::string EpisodeTrace::to_jsonl() const {
    std::string out;
    for (const TraceEvent& e : events_) {
        out += e.to_json().dump();
        out += "\n";
    }
    return out;
}

EpisodeTrace EpisodeTrace::from_jsonl(const std::string& text) {
    EpisodeTrace trace;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            trace.events_.push_back(TraceEvent::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError("bad trace record on line " + std::to_string(lineno) +
                             ": " + e.what());
        }
        trace.next_seq_ = trace.events_.back().seq + 1;
    }
    return trace;
}

}  // namespace dagcrew::harness
