#include "dagcrew/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dagcrew/config.hpp"
#include "dagcrew/tasklib.hpp"

namespace dagcrew::harness {

using metrics::MetricReport;
using nlohmann::json;
using worldsim::Block;
using worldsim::Blueprint;
using worldsim::World;

namespace {

constexpr int kGroundY = -61;
constexpr double kTicksPerMinute = kTicksPerSecond * 60.0;

struct ActionView {
    std::string agent;
    worldsim::ActionRequest request;
    worldsim::ActionResult result;
};

std::vector<ActionView> action_views(const EpisodeTrace& trace) {
    std::vector<ActionView> out;
    for (const TraceEvent* e : trace.of_type("action")) {
        ActionView v;
        v.request = worldsim::ActionRequest::from_json(e->payload.at("request"));
        v.result = worldsim::ActionResult::from_json(e->payload.at("result"));
        v.agent = v.request.agent;
        out.push_back(std::move(v));
    }
    return out;
}

long total_completion_tokens(const EpisodeTrace& trace) {
    long total = 0;
    for (const TraceEvent& e : trace.events()) {
        if (!e.payload.contains("usage")) continue;
        for (const json& u : e.payload.at("usage")) {
            total += u.value("completion_tokens", 0L);
        }
    }
    return total;
}

/// Efficiency, balance, token cost and per-agent activity shared by every
/// scenario report.
void fill_common(MetricReport& report, const World& world,
                 const EpisodeTrace& trace,
                 const std::vector<std::string>& agents) {
    const double elapsed_min =
        static_cast<double>(std::max<Tick>(world.clock(), 1)) / kTicksPerMinute;
    report.efficiency = metrics::efficiency(report.completion, elapsed_min);

    std::vector<double> active;
    for (const std::string& name : agents) {
        const double minutes =
            static_cast<double>(world.busy_ticks(name)) / kTicksPerMinute;
        report.active_minutes[name] = minutes;
        active.push_back(minutes);
    }
    report.balance = metrics::balance(active);

    long actions = 0;
    for (const ActionView& v : action_views(trace)) {
        if (v.result.accepted) ++actions;
    }
    const long tokens = total_completion_tokens(trace);
    const double avg = actions > 0 ? static_cast<double>(tokens) /
                                         static_cast<double>(actions)
                                   : static_cast<double>(tokens);
    report.token_cost =
        metrics::token_cost(avg, report.completion * 100.0, actions);
}

// ---------------------------------------------------------------------------

class ConstructionScenario : public ScenarioRuntime {
public:
    explicit ConstructionScenario(json document)
        : document_(std::move(document)),
          blueprint_(worldsim::load_blueprint_document(document_)) {
        Vec3 lo{1 << 20, 1 << 20, 1 << 20};
        Vec3 hi{-(1 << 20), -(1 << 20), -(1 << 20)};
        for (const worldsim::BlockSpec& cell : blueprint_.cells()) {
            lo.x = std::min(lo.x, cell.position.x);
            lo.y = std::min(lo.y, cell.position.y);
            lo.z = std::min(lo.z, cell.position.z);
            hi.x = std::max(hi.x, cell.position.x);
            hi.y = std::max(hi.y, cell.position.y);
            hi.z = std::max(hi.z, cell.position.z);
        }
        chest_ = Vec3{lo.x - 3, kGroundY + 1, lo.z - 3};
        arena_lo_ = Vec3{lo.x - 24, -64, lo.z - 24};
        arena_hi_ = Vec3{hi.x + 24, 0, hi.z + 24};
    }

    std::string id() const override { return "construction"; }

    std::string goal() const override {
        return "Build the structure described by the blueprint document '" +
               document_.begin().key() + "' exactly as specified.";
    }

    json document() const override { return document_; }

    void populate(World& world) const override {
        world.set_ground(kGroundY);
        world.set_arena(arena_lo_, arena_hi_);
        // Materials are pre-stocked; no mining required.
        world.add_container(chest_, blueprint_.material_counts());
    }

    Vec3 spawn(int agent_index) const override {
        return chest_ + Vec3{1, 0, 1 + agent_index};
    }

    double completion(const World& world,
                      const EpisodeTrace& trace) const override {
        (void)trace;
        return metrics::completion_construction(world.placed_blocks(), blueprint_);
    }

    MetricReport report(const World& world, const EpisodeTrace& trace,
                        const std::vector<std::string>& agents) const override {
        MetricReport r;
        r.scenario = id();
        r.completion = completion(world, trace);
        r.vhr = metrics::vhr(world.placed_blocks(), blueprint_);
        r.dependency_complexity =
            metrics::dep_complexity_construction(blueprint_, kGroundY + 1);
        fill_common(r, world, trace, agents);
        // Blueprint-matching placements per agent.
        std::set<worldsim::BlockSpec> want;
        for (const worldsim::BlockSpec& cell : blueprint_.cells()) {
            want.insert(cell);
        }
        for (const std::string& name : agents) r.contributions[name] = 0;
        for (const ActionView& v : action_views(trace)) {
            if (!v.result.accepted || v.request.kind != "placeBlock") continue;
            if (v.request.args.size() < 4) continue;
            try {
                worldsim::BlockSpec spec;
                spec.material = v.request.args[0];
                spec.position = Vec3{std::stoi(v.request.args[1]),
                                     std::stoi(v.request.args[2]),
                                     std::stoi(v.request.args[3])};
                spec.facing = worldsim::facing_from_string(
                    v.request.args.size() > 4 ? v.request.args[4] : "none");
                spec.axis = worldsim::axis_from_string(
                    v.request.args.size() > 5 ? v.request.args[5] : "none");
                if (want.count(spec)) r.contributions[v.agent] += 1;
            } catch (...) {
            }
        }
        return r;
    }

private:
    json document_;
    Blueprint blueprint_;
    Vec3 chest_;
    Vec3 arena_lo_;
    Vec3 arena_hi_;
};

// ---------------------------------------------------------------------------

class CookingScenario : public ScenarioRuntime {
public:
    explicit CookingScenario(json document) : document_(std::move(document)) {
        goal_item_ = document_.at("goal").get<std::string>();
        for (const json& r : document_.at("recipes")) {
            book_.add(worldsim::load_recipe(r));
        }
        indicators_ = metrics::derive_cooking_indicators(book_, goal_item_);
    }

    std::string id() const override { return "cooking"; }

    std::string goal() const override {
        return "Prepare one " + goal_item_ +
               " following the provided recipes, gathering every ingredient.";
    }

    json document() const override { return document_; }

    void populate(World& world) const override {
        world.set_ground(kGroundY);
        world.set_arena(Vec3{-24, -64, -24}, Vec3{24, 0, 24});
        world.set_recipes(book_);
        world.add_block(Vec3{1, -60, 0}, Block{"furnace"});
        world.add_block(Vec3{-1, -60, 0}, Block{"crafting_table"});
        world.add_container(Vec3{0, -60, 0}, {});  // staging chest

        // Raw materials split across the pantry chests; anything that is an
        // animal drop comes from the animal itself.
        std::map<std::string, int> pantry_a;
        std::map<std::string, int> pantry_b;
        bool flip = false;
        for (const auto& [raw, amount] : indicators_.raw_required) {
            std::string prey = prey_for(raw);
            if (!prey.empty()) {
                world.add_entity({prey, Vec3{6, -60, 1}, raw, amount});
                continue;
            }
            (flip ? pantry_a : pantry_b)[raw] = amount;
            flip = !flip;
        }
        world.add_container(Vec3{4, -60, 0}, pantry_a);
        world.add_container(Vec3{4, -60, 2}, pantry_b);
        world.add_entity({"cow", Vec3{8, -60, 2}, "", 0});
        world.add_interaction("bucket", "cow", "milk_bucket");
    }

    Vec3 spawn(int agent_index) const override {
        return Vec3{0, -60, 3 + agent_index};
    }

    double completion(const World& world,
                      const EpisodeTrace& trace) const override {
        const auto [acquired, performed, by_agent] = tally(trace);
        (void)by_agent;
        const bool goal_present = world.item_totals().count(goal_item_) != 0;
        return metrics::completion_cooking(indicators_, acquired, performed,
                                           goal_present);
    }

    MetricReport report(const World& world, const EpisodeTrace& trace,
                        const std::vector<std::string>& agents) const override {
        MetricReport r;
        r.scenario = id();
        r.completion = completion(world, trace);
        r.dependency_complexity = metrics::dep_complexity_cooking(book_, goal_item_);
        fill_common(r, world, trace, agents);
        const auto [acquired, performed, by_agent] = tally(trace);
        (void)acquired;
        (void)performed;
        std::vector<double> contributions;
        for (const std::string& name : agents) {
            const auto it = by_agent.find(name);
            const double c = it == by_agent.end() ? 0.0 : it->second;
            r.contributions[name] = c;
            contributions.push_back(c);
        }
        r.acr = metrics::acr(contributions);
        return r;
    }

private:
    std::string prey_for(const std::string& raw) const {
        // raw_rabbit is dropped by the rabbit, raw_beef by the cow, etc.
        if (raw.rfind("raw_", 0) == 0) return raw.substr(4);
        return "";
    }

    std::tuple<std::map<std::string, int>, std::map<std::string, int>,
               std::map<std::string, double>>
    tally(const EpisodeTrace& trace) const {
        std::map<std::string, int> acquired;
        std::map<std::string, int> performed;
        std::map<std::string, double> by_agent;
        for (const ActionView& v : action_views(trace)) {
            if (!v.result.accepted) continue;
            if (v.request.kind == "withdrawItem" && v.request.args.size() >= 5) {
                const std::string& item = v.request.args[3];
                if (!indicators_.raw_required.count(item)) continue;
                int count = 1;
                try {
                    count = std::stoi(v.request.args[4]);
                } catch (...) {
                }
                acquired[item] += count;
                by_agent[v.agent] += count;
            } else if (v.request.kind == "attackTarget" ||
                       v.request.kind == "MineBlock") {
                // "... collected <n> <item>" / "mined <item> at ..."
                std::istringstream in(v.result.observation);
                std::string token;
                std::string prev;
                while (in >> token) {
                    if (indicators_.raw_required.count(token)) {
                        int count = 1;
                        try {
                            count = std::stoi(prev);
                        } catch (...) {
                        }
                        acquired[token] += count;
                        by_agent[v.agent] += count;
                        break;
                    }
                    prev = token;
                }
            } else if (v.request.kind == "craftBlock" ||
                       v.request.kind == "SmeltingCooking") {
                if (v.request.args.empty()) continue;
                const std::string& item = v.request.args[0];
                if (!indicators_.actions_required.count(item)) continue;
                int count = 1;
                if (v.request.args.size() > 1) {
                    try {
                        count = std::stoi(v.request.args[1]);
                    } catch (...) {
                    }
                }
                performed[item] += count;
                by_agent[v.agent] += count;
            }
        }
        return {acquired, performed, by_agent};
    }

    json document_;
    std::string goal_item_;
    worldsim::RecipeBook book_;
    metrics::CookingIndicators indicators_;
};

// ---------------------------------------------------------------------------

class EscapeScenario : public ScenarioRuntime {
public:
    explicit EscapeScenario(worldsim::EscapeSpec spec) : spec_(std::move(spec)) {}

    std::string id() const override { return "escape"; }

    std::string goal() const override {
        return "Escape the room chain: satisfy every room's conditions in "
               "order and reach the exit at " + dagcrew::to_string(spec_.exit) + ".";
    }

    json document() const override { return spec_.to_json(); }

    void populate(World& world) const override {
        world.set_ground(kGroundY);
        const Vec3 first = spec_.rooms.front().center;
        const Vec3 last = spec_.rooms.back().center;
        world.set_arena(Vec3{first.x - 30, -64, first.z - 30},
                        Vec3{last.x + 30, 0, last.z + 40});
        world.install_escape(spec_);
    }

    Vec3 spawn(int agent_index) const override {
        return spec_.rooms.front().center + Vec3{agent_index, 0, -7};
    }

    double completion(const World& world,
                      const EpisodeTrace& trace) const override {
        (void)trace;
        std::vector<int> conditions;
        std::vector<int> met;
        for (const World::RoomStatus& st : world.escape_status()) {
            conditions.push_back(st.conditions);
            met.push_back(st.met);
        }
        return metrics::completion_escape(conditions, met);
    }

    MetricReport report(const World& world, const EpisodeTrace& trace,
                        const std::vector<std::string>& agents) const override {
        MetricReport r;
        r.scenario = id();
        r.completion = completion(world, trace);
        r.dependency_complexity = metrics::dep_complexity_escape(spec_);
        fill_common(r, world, trace, agents);
        for (const std::string& name : agents) r.contributions[name] = 0;
        for (const ActionView& v : action_views(trace)) {
            if (v.result.accepted) r.contributions[v.agent] += 1;
        }
        return r;
    }

private:
    worldsim::EscapeSpec spec_;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open task file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("task file " + path + " is not valid JSON: " + e.what());
    }
    return doc;
}

bool looks_like_path(const std::string& value) {
    return value.find('/') != std::string::npos ||
           value.find(".json") != std::string::npos;
}

}  // namespace

std::unique_ptr<ScenarioRuntime> make_scenario(const RunConfig& config) {
    if (config.scenario == "construction") {
        const std::string task = config.task.empty() ? "task_0" : config.task;
        const json doc = looks_like_path(task) ? load_json_file(task)
                                               : construction_document(task);
        return std::make_unique<ConstructionScenario>(doc);
    }
    if (config.scenario == "cooking") {
        const std::string task = config.task.empty() ? "rabbit_stew" : config.task;
        const json doc =
            looks_like_path(task) ? load_json_file(task) : cooking_document(task);
        return std::make_unique<CookingScenario>(doc);
    }
    if (config.scenario == "escape") {
        worldsim::EscapeSpec spec;
        if (!config.task.empty() && looks_like_path(config.task)) {
            spec = worldsim::EscapeSpec::from_json(load_json_file(config.task));
        } else {
            spec = worldsim::generate_escape(config.seed, config.difficulty,
                                             config.agent_count);
        }
        return std::make_unique<EscapeScenario>(std::move(spec));
    }
    throw ConfigError("unknown scenario: " + config.scenario);
}

}  // namespace dagcrew::harness
