#include "dagcrew/harness.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dagcrew/planner_http.hpp"
#include "dagcrew/planner_scripted.hpp"
#include "dagcrew/scenario.hpp"

namespace dagcrew::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::unique_ptr<planner::Backend> make_backend(const RunConfig& config) {
    if (config.planner == "http") {
        return std::make_unique<planner::HttpBackend>(config.http);
    }
    planner::ScriptedOptions options;
    options.script_seed = config.seed;
    options.fail_decompose_times = config.fail_decompose_times;
    options.fail_allocation_times = config.fail_allocation_times;
    return std::make_unique<planner::ScriptedBackend>(options);
}

orchestrator::Limits limits_from(const RunConfig& config) {
    orchestrator::Limits limits;
    limits.max_rounds = config.max_rounds;
    limits.tick_budget = config.tick_budget;
    limits.wall_budget_s = config.wall_budget_s;
    limits.exec_tick_budget = config.exec_tick_budget;
    limits.exec_wall_budget_s = config.exec_wall_budget_s;
    limits.wall_limits_active = config.planner == "http";
    return limits;
}

std::vector<orchestrator::AgentSetup> agents_from(const RunConfig& config) {
    std::vector<orchestrator::AgentSetup> agents;
    for (const std::string& name : config.resolved_agent_names()) {
        orchestrator::AgentSetup setup;
        setup.name = name;
        auto it = config.capabilities.find(name);
        if (it != config.capabilities.end()) setup.capabilities = it->second;
        agents.push_back(std::move(setup));
    }
    return agents;
}

std::string format_metric(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << value;
    return out.str();
}

}  // namespace

RunOutcome cmd_run(const RunConfig& config) {
    config.validate();
    RunOutcome outcome;

    fs::path run_dir = fs::path(config.out_dir);
    std::string stem = config.scenario + "_" +
                       (config.task.empty() ? "default" : config.task) + "_s" +
                       std::to_string(config.seed);
    for (char& c : stem) {
        if (c == '/' || c == '.') c = '_';
    }
    run_dir /= stem;
    fs::create_directories(run_dir / "graphs");
    outcome.run_dir = run_dir.string();

    write_file(run_dir / "config.json", config.to_json().dump(2) + "\n");

    std::unique_ptr<ScenarioRuntime> scenario = make_scenario(config);
    std::unique_ptr<planner::Backend> backend = make_backend(config);
    orchestrator::Session session(*scenario, *backend, agents_from(config),
                                  limits_from(config), config.seed,
                                  config.summary_cap);

    // Stream the trace: append records as each round lands.
    std::size_t written = 0;
    std::ofstream trace_out(run_dir / "trace.jsonl", std::ios::trunc);
    auto flush_trace = [&]() {
        const auto& events = session.trace().events();
        for (; written < events.size(); ++written) {
            trace_out << events[written].to_json().dump() << "\n";
        }
        trace_out.flush();
    };

    outcome.termination_reason = session.run_episode(
        [&](const orchestrator::RoundReport& report) {
            flush_trace();
            write_file(run_dir / "graphs" /
                           ("round_" + std::to_string(report.round) + ".graph"),
                       session.graph().export_structured());
        });
    flush_trace();

    write_file(run_dir / "world_final.json",
               session.world().snapshot().dump(2) + "\n");
    outcome.report =
        scenario->report(session.world(), session.trace(), session.agent_names());
    write_file(run_dir / "metrics.json", outcome.report.to_json().dump(2) + "\n");
    return outcome;
}

int cmd_generate(std::uint64_t seed, int difficulty, int agents,
                 const std::string& out_path) {
    const worldsim::EscapeSpec spec =
        worldsim::generate_escape(seed, difficulty, agents);
    fs::path path(out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, spec.to_json().dump(2) + "\n");
    return 0;
}

std::string render_report_table(const std::vector<std::string>& run_dirs,
                                int& exit_code) {
    std::vector<std::string> dirs = run_dirs;
    std::ranges::sort(dirs);
    std::ostringstream out;
    out << std::left << std::setw(40) << "run" << std::setw(12) << "C"
        << std::setw(12) << "E" << std::setw(12) << "B" << std::setw(12) << "VHR"
        << std::setw(12) << "ACR" << std::setw(12) << "Cost" << std::setw(12)
        << "D" << "\n";
    int rendered = 0;
    for (const std::string& dir : dirs) {
        metrics::MetricReport report;
        try {
            report = metrics::MetricReport::from_json(
                json::parse(read_file(fs::path(dir) / "metrics.json")));
        } catch (const std::exception& e) {
            out << "# skipped " << dir << ": " << e.what() << "\n";
            continue;
        }
        ++rendered;
        auto opt = [&](const std::optional<double>& v) {
            return v ? format_metric(*v) : std::string("-");
        };
        out << std::left << std::setw(40) << fs::path(dir).filename().string()
            << std::setw(12) << format_metric(report.completion) << std::setw(12)
            << format_metric(report.efficiency) << std::setw(12)
            << opt(report.balance) << std::setw(12) << opt(report.vhr)
            << std::setw(12) << opt(report.acr) << std::setw(12)
            << format_metric(report.token_cost) << std::setw(12)
            << format_metric(report.dependency_complexity) << "\n";
    }
    exit_code = rendered == 0 && !dirs.empty() ? 1 : 0;
    return out.str();
}

std::string cmd_graph(const std::string& run_dir, int round,
                      const std::string& format) {
    const fs::path path = fs::path(run_dir) / "graphs" /
                          ("round_" + std::to_string(round) + ".graph");
    const taskgraph::TaskGraph graph =
        taskgraph::TaskGraph::import_structured(read_file(path));
    if (format == "dot") return graph.export_dot();
    if (format == "structured") return graph.export_structured();
    throw ConfigError("unknown graph format: " + format);
}

bool replay_run(const std::string& run_dir, std::string* error) {
    try {
        const RunConfig config = RunConfig::from_json(
            json::parse(read_file(fs::path(run_dir) / "config.json")));
        const EpisodeTrace trace =
            EpisodeTrace::from_jsonl(read_file(fs::path(run_dir) / "trace.jsonl"));
        const json recorded =
            json::parse(read_file(fs::path(run_dir) / "world_final.json"));

        std::unique_ptr<ScenarioRuntime> scenario = make_scenario(config);
        worldsim::World world(config.seed);
        scenario->populate(world);
        const std::vector<std::string> names = config.resolved_agent_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
            auto it = config.capabilities.find(names[i]);
            world.add_agent(names[i], scenario->spawn(static_cast<int>(i)),
                            it == config.capabilities.end()
                                ? std::set<std::string>{}
                                : it->second);
        }

        for (const TraceEvent& event : trace.events()) {
            if (event.type == "round_start") {
                world.begin_round();
            } else if (event.type == "action") {
                const auto request =
                    worldsim::ActionRequest::from_json(event.payload.at("request"));
                const auto expected =
                    worldsim::ActionResult::from_json(event.payload.at("result"));
                const worldsim::ActionResult got = world.apply_action(request);
                if (got.accepted != expected.accepted ||
                    got.tick != expected.tick ||
                    got.observation != expected.observation) {
                    if (error) {
                        *error = "replay diverged at seq " +
                                 std::to_string(event.seq) + ": got '" +
                                 got.observation + "'";
                    }
                    return false;
                }
            }
        }
        if (world.snapshot() != recorded) {
            if (error) *error = "final world snapshot differs";
            return false;
        }
        return true;
    } catch (const std::exception& e) {
        if (error) *error = e.what();
        return false;
    }
}

}  // namespace dagcrew::harness
