#include "dagcrew/config.hpp"

#include <fstream>
#include <sstream>

namespace dagcrew::harness {

using nlohmann::json;

namespace {

const std::vector<std::string>& default_names() {
    static const std::vector<std::string> names = {
        "Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi",
        "Ivan", "Judy", "Ken", "Laura",
    };
    return names;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string current;
    for (char c : s) {
        if (c == ',') {
            const std::string t = trim(current);
            if (!t.empty()) out.push_back(t);
            current.clear();
        } else {
            current += c;
        }
    }
    const std::string t = trim(current);
    if (!t.empty()) out.push_back(t);
    return out;
}

}  // namespace

std::vector<std::string> RunConfig::resolved_agent_names() const {
    std::vector<std::string> names = agent_names;
    for (std::size_t i = names.size();
         i < static_cast<std::size_t>(agent_count); ++i) {
        names.push_back(i < default_names().size()
                            ? default_names()[i]
                            : "Agent" + std::to_string(i + 1));
    }
    names.resize(static_cast<std::size_t>(agent_count));
    return names;
}

void RunConfig::validate() const {
    if (scenario != "construction" && scenario != "cooking" &&
        scenario != "escape") {
        throw ConfigError("scenario must be construction, cooking or escape"
                          " (got '" + scenario + "')");
    }
    if (agent_count < 1) throw ConfigError("agent count must be >= 1");
    if (max_rounds < 0) throw ConfigError("max_rounds cannot be negative");
    if (tick_budget <= 0 || wall_budget_s <= 0 || exec_tick_budget < 0 ||
        exec_wall_budget_s <= 0) {
        throw ConfigError("budgets must be positive");
    }
    if (planner != "scripted" && planner != "http") {
        throw ConfigError("planner must be scripted or http");
    }
    if (planner == "http" && http.base_url.empty()) {
        throw ConfigError("http planner needs http_base_url");
    }
    if (scenario == "escape" && (difficulty < 1 || difficulty > 5)) {
        throw ConfigError("difficulty must be within [1, 5]");
    }
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) +
                              " is not a key = value pair: " + stripped);
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            if (key == "scenario") cfg.scenario = value;
            else if (key == "task") cfg.task = value;
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "difficulty") cfg.difficulty = std::stoi(value);
            else if (key == "agents") cfg.agent_count = std::stoi(value);
            else if (key == "agent_names") cfg.agent_names = split_list(value);
            else if (key == "planner") cfg.planner = value;
            else if (key == "http_base_url") cfg.http.base_url = value;
            else if (key == "http_model") cfg.http.model = value;
            else if (key == "http_temperature") cfg.http.temperature = std::stod(value);
            else if (key == "http_max_output_tokens") cfg.http.max_output_tokens = std::stol(value);
            else if (key == "http_context_tokens") cfg.http.context_tokens = std::stol(value);
            else if (key == "max_rounds") cfg.max_rounds = std::stoi(value);
            else if (key == "tick_budget") cfg.tick_budget = std::stoll(value);
            else if (key == "wall_budget_s") cfg.wall_budget_s = std::stod(value);
            else if (key == "exec_tick_budget") cfg.exec_tick_budget = std::stoll(value);
            else if (key == "exec_wall_budget_s") cfg.exec_wall_budget_s = std::stod(value);
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "trace_detail") cfg.trace_detail = value;
            else if (key == "summary_cap") cfg.summary_cap = std::stoul(value);
            else if (key == "fail_decompose_times") cfg.fail_decompose_times = std::stoi(value);
            else if (key == "fail_allocation_times") cfg.fail_allocation_times = std::stoi(value);
            else if (key.rfind("capability.", 0) == 0) {
                const std::string agent = key.substr(11);
                const std::vector<std::string> kinds = split_list(value);
                cfg.capabilities[agent] = {kinds.begin(), kinds.end()};
            } else {
                throw ConfigError("unknown configuration key '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad value for '" + key + "' on line " +
                              std::to_string(lineno) + ": " + value);
        }
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str());
}

json RunConfig::to_json() const {
    json j;
    j["scenario"] = scenario;
    j["task"] = task;
    j["seed"] = seed;
    j["difficulty"] = difficulty;
    j["agents"] = agent_count;
    j["agent_names"] = resolved_agent_names();
    json caps = json::object();
    for (const auto& [agent, kinds] : capabilities) caps[agent] = kinds;
    j["capabilities"] = caps;
    j["planner"] = planner;
    j["http"] = {{"base_url", http.base_url},
                 {"model", http.model},
                 {"temperature", http.temperature},
                 {"max_output_tokens", http.max_output_tokens},
                 {"context_tokens", http.context_tokens}};
    j["max_rounds"] = max_rounds;
    j["tick_budget"] = tick_budget;
    j["wall_budget_s"] = wall_budget_s;
    j["exec_tick_budget"] = exec_tick_budget;
    j["exec_wall_budget_s"] = exec_wall_budget_s;
    j["out_dir"] = out_dir;
    j["trace_detail"] = trace_detail;
    j["summary_cap"] = summary_cap;
    j["fail_decompose_times"] = fail_decompose_times;
    j["fail_allocation_times"] = fail_allocation_times;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    cfg.scenario = j.at("scenario").get<std::string>();
    cfg.task = j.value("task", "");
    cfg.seed = j.value("seed", 0ULL);
    cfg.difficulty = j.value("difficulty", 1);
    cfg.agent_count = j.value("agents", 2);
    cfg.agent_names = j.value("agent_names", std::vector<std::string>{});
    if (j.contains("capabilities")) {
        for (const auto& [agent, kinds] : j.at("capabilities").items()) {
            std::set<std::string> set;
            for (const auto& k : kinds) set.insert(k.get<std::string>());
            if (!set.empty()) cfg.capabilities[agent] = std::move(set);
        }
    }
    cfg.planner = j.value("planner", "scripted");
    if (j.contains("http")) {
        const json& h = j.at("http");
        cfg.http.base_url = h.value("base_url", "");
        cfg.http.model = h.value("model", "");
        cfg.http.temperature = h.value("temperature", 0.0);
        cfg.http.max_output_tokens = h.value("max_output_tokens", 4096L);
        cfg.http.context_tokens = h.value("context_tokens", 128000L);
    }
    cfg.max_rounds = j.value("max_rounds", 12);
    cfg.tick_budget = j.value("tick_budget", static_cast<Tick>(24000));
    cfg.wall_budget_s = j.value("wall_budget_s", 600.0);
    cfg.exec_tick_budget = j.value("exec_tick_budget", static_cast<Tick>(240));
    cfg.exec_wall_budget_s = j.value("exec_wall_budget_s", 120.0);
    cfg.out_dir = j.value("out_dir", "runs");
    cfg.trace_detail = j.value("trace_detail", "full");
    cfg.summary_cap = j.value("summary_cap", std::size_t{1200});
    cfg.fail_decompose_times = j.value("fail_decompose_times", 0);
    cfg.fail_allocation_times = j.value("fail_allocation_times", 0);
    return cfg;
}

}  // namespace dagcrew::harness
