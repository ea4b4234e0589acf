#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dagcrew/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"DAG-based multi-agent cooperation engine and benchmark"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one benchmark episode");
    std::string config_path;
    run->add_option("--config", config_path, "key = value configuration file")
        ->required();
    int agents_override = -1;
    run->add_option("--agents", agents_override, "override the agent count");
    std::int64_t seed_override = -1;
    run->add_option("--seed", seed_override, "override the episode seed");
    std::string planner_override;
    run->add_option("--planner", planner_override, "scripted or http");
    std::string out_override;
    run->add_option("--out", out_override, "override the output directory");

    // generate
    auto* generate =
        app.add_subcommand("generate", "Generate an escape room task file");
    std::uint64_t gen_seed = 0;
    int gen_difficulty = 1;
    int gen_agents = 2;
    std::string gen_out;
    bool gen_batch = false;
    generate->add_option("--seed", gen_seed, "generator seed")->required();
    generate->add_option("--difficulty", gen_difficulty, "difficulty 1..5")
        ->required();
    generate->add_option("--agents", gen_agents, "agent count the task is for");
    generate->add_option("--out", gen_out, "output file (or directory in batch mode)")
        ->required();
    generate->add_flag("--batch", gen_batch,
                       "emit 5 seeds x 5 difficulties under --out");

    // report
    auto* report = app.add_subcommand("report", "Tabulate metric reports");
    std::vector<std::string> report_dirs;
    report->add_option("dirs", report_dirs, "run directories")->required();

    // graph
    auto* graph = app.add_subcommand("graph", "Export a round's task graph");
    std::string graph_run;
    int graph_round = 0;
    std::string graph_format = "dot";
    graph->add_option("--run", graph_run, "run directory")->required();
    graph->add_option("--round", graph_round, "round index")->required();
    graph->add_option("--format", graph_format, "dot or structured");

    // replay
    auto* replay = app.add_subcommand(
        "replay", "Re-simulate a recorded run and verify the final world");
    std::string replay_run_dir;
    replay->add_option("--run", replay_run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            dagcrew::harness::RunConfig config =
                dagcrew::harness::RunConfig::from_file(config_path);
            if (agents_override > 0) config.agent_count = agents_override;
            if (seed_override >= 0) {
                config.seed = static_cast<std::uint64_t>(seed_override);
            }
            if (!planner_override.empty()) config.planner = planner_override;
            if (!out_override.empty()) config.out_dir = out_override;
            const dagcrew::harness::RunOutcome outcome =
                dagcrew::harness::cmd_run(config);
            std::cout << "run dir: " << outcome.run_dir << "\n"
                      << "terminated: " << outcome.termination_reason << "\n"
                      << "completion: " << outcome.report.completion << "\n";
            return outcome.exit_code;
        }
        if (*generate) {
            if (gen_batch) {
                for (int d = 1; d <= 5; ++d) {
                    for (std::uint64_t s = gen_seed; s < gen_seed + 5; ++s) {
                        const std::string path =
                            gen_out + "/escape_d" + std::to_string(d) + "_s" +
                            std::to_string(s) + ".json";
                        dagcrew::harness::cmd_generate(s, d, gen_agents, path);
                        std::cout << path << "\n";
                    }
                }
                return 0;
            }
            const int rc = dagcrew::harness::cmd_generate(gen_seed, gen_difficulty,
                                                          gen_agents, gen_out);
            std::cout << gen_out << "\n";
            return rc;
        }
        if (*report) {
            int exit_code = 0;
            std::cout << dagcrew::harness::render_report_table(report_dirs,
                                                               exit_code);
            return exit_code;
        }
        if (*graph) {
            std::cout << dagcrew::harness::cmd_graph(graph_run, graph_round,
                                                     graph_format);
            return 0;
        }
        if (*replay) {
            std::string error;
            if (dagcrew::harness::replay_run(replay_run_dir, &error)) {
                std::cout << "replay ok\n";
                return 0;
            }
            std::cerr << "replay failed: " << error << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
