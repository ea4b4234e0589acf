#include "dagcrew/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dagcrew::metrics {

using nlohmann::json;
using worldsim::BlockSpec;
using worldsim::Blueprint;
using worldsim::RecipeBook;

namespace {

double population_stddev(const std::vector<double>& v) {
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

double completion_construction(const std::vector<BlockSpec>& placed,
                               const Blueprint& blueprint) {
    if (blueprint.empty()) {
        throw MetricError("construction completion needs a non-empty blueprint");
    }
    const std::vector<BlockSpec> want = blueprint.cells();
    const std::set<BlockSpec> placed_set(placed.begin(), placed.end());
    std::size_t hit = 0;
    for (const BlockSpec& cell : want) {
        if (placed_set.count(cell)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(want.size());
}

CookingIndicators derive_cooking_indicators(const RecipeBook& book,
                                            const std::string& goal_item,
                                            int goal_count) {
    CookingIndicators ind;
    auto walk = [&](auto&& self, const std::string& item, int amount) -> void {
        if (!book.has(item)) {
            ind.raw_required[item] += amount;
            return;
        }
        const worldsim::Recipe& recipe = book.recipe(item);
        const int applications =
            (amount + recipe.result_count - 1) / recipe.result_count;
        ind.actions_required[item] += applications;
        for (const auto& [ingredient, count] : recipe.ingredients) {
            self(self, ingredient, count * applications);
        }
    };
    walk(walk, goal_item, goal_count);
    return ind;
}

double completion_cooking(const CookingIndicators& indicators,
                          const std::map<std::string, int>& raw_acquired,
                          const std::map<std::string, int>& actions_performed,
                          bool goal_present) {
    const int total = indicators.total();
    if (total == 0) return goal_present ? 1.0 : 0.0;
    if (goal_present) return 1.0;
    auto count_latched = [](const std::map<std::string, int>& required,
                            const std::map<std::string, int>& seen) {
        int latched = 0;
        for (const auto& [item, need] : required) {
            auto it = seen.find(item);
            if (it != seen.end() && it->second >= need) ++latched;
        }
        return latched;
    };
    const int latched = count_latched(indicators.raw_required, raw_acquired) +
                        count_latched(indicators.actions_required, actions_performed);
    return static_cast<double>(latched) / static_cast<double>(total);
}

double completion_escape(const std::vector<int>& conditions_per_room,
                         const std::vector<int>& met_per_room,
                         const std::vector<double>& scores) {
    if (conditions_per_room.size() != met_per_room.size()) {
        throw MetricError("room condition and met vectors differ in length");
    }
    if (conditions_per_room.empty()) return 0.0;
    std::vector<double> s = scores;
    if (s.empty()) s.assign(conditions_per_room.size(), 1.0);
    if (s.size() != conditions_per_room.size()) {
        throw MetricError("room score vector does not match room count");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < conditions_per_room.size(); ++i) {
        if (conditions_per_room[i] <= 0) {
            throw MetricError("room " + std::to_string(i) +
                              " has no pass conditions");
        }
        num += static_cast<double>(met_per_room[i]) /
               static_cast<double>(conditions_per_room[i]) * s[i];
        den += s[i];
    }
    return num / den;
}

double efficiency(double completion, double elapsed_minutes) {
    if (elapsed_minutes <= 0.0) {
        throw MetricError("efficiency needs a positive elapsed time");
    }
    return completion / elapsed_minutes;
}

std::optional<double> balance(const std::vector<double>& active_times) {
    if (active_times.size() < 2) return std::nullopt;
    const auto [lo, hi] = std::ranges::minmax_element(active_times);
    if (*hi == *lo) return 1.0;  // equal load
    std::vector<double> norm;
    norm.reserve(active_times.size());
    for (double t : active_times) norm.push_back((t - *lo) / (*hi - *lo));
    return 1.0 - population_stddev(norm);
}

const std::vector<Viewpoint>& default_viewpoints() {
    static const std::vector<Viewpoint> views = {
        Viewpoint::pos_x, Viewpoint::neg_x, Viewpoint::pos_z, Viewpoint::neg_z,
        Viewpoint::top,
    };
    return views;
}

std::vector<BlockSpec> visible_cells(const std::vector<BlockSpec>& cells,
                                     Viewpoint view) {
    // Projection key -> the cell nearest the viewer along the view axis.
    std::map<std::pair<int, int>, BlockSpec> first_hit;
    for (const BlockSpec& cell : cells) {
        std::pair<int, int> key;
        int depth = 0;
        switch (view) {
            case Viewpoint::pos_x: key = {cell.position.y, cell.position.z}; depth = cell.position.x; break;
            case Viewpoint::neg_x: key = {cell.position.y, cell.position.z}; depth = -cell.position.x; break;
            case Viewpoint::pos_z: key = {cell.position.x, cell.position.y}; depth = cell.position.z; break;
            case Viewpoint::neg_z: key = {cell.position.x, cell.position.y}; depth = -cell.position.z; break;
            case Viewpoint::top:   key = {cell.position.x, cell.position.z}; depth = cell.position.y; break;
        }
        auto it = first_hit.find(key);
        if (it == first_hit.end()) {
            first_hit.emplace(key, cell);
            continue;
        }
        int have = 0;
        switch (view) {
            case Viewpoint::pos_x: have = it->second.position.x; break;
            case Viewpoint::neg_x: have = -it->second.position.x; break;
            case Viewpoint::pos_z: have = it->second.position.z; break;
            case Viewpoint::neg_z: have = -it->second.position.z; break;
            case Viewpoint::top:   have = it->second.position.y; break;
        }
        if (depth > have) it->second = cell;
    }
    std::vector<BlockSpec> out;
    out.reserve(first_hit.size());
    for (const auto& [key, cell] : first_hit) out.push_back(cell);
    return out;
}

double vhr(const std::vector<BlockSpec>& placed, const Blueprint& blueprint,
           const std::vector<Viewpoint>& viewpoints) {
    if (blueprint.empty()) throw MetricError("vhr needs a non-empty blueprint");
    if (viewpoints.empty()) throw MetricError("vhr needs at least one viewpoint");
    const std::vector<BlockSpec> expected = blueprint.cells();
    double sum = 0.0;
    for (Viewpoint view : viewpoints) {
        const std::vector<BlockSpec> c = visible_cells(placed, view);
        const std::vector<BlockSpec> e = visible_cells(expected, view);
        const std::set<BlockSpec> cs(c.begin(), c.end());
        const std::set<BlockSpec> es(e.begin(), e.end());
        std::size_t inter = 0;
        for (const BlockSpec& cell : cs) {
            if (es.count(cell)) ++inter;
        }
        const std::size_t uni = cs.size() + es.size() - inter;
        sum += uni == 0 ? 1.0
                        : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return sum / static_cast<double>(viewpoints.size());
}

std::optional<double> acr(const std::vector<double>& contributions) {
    if (contributions.size() < 2) return std::nullopt;
    const double total =
        std::accumulate(contributions.begin(), contributions.end(), 0.0);
    if (total <= 0.0) return std::nullopt;
    const double sigma = population_stddev(contributions);
    const double k = static_cast<double>(contributions.size());
    // Most unequal split with the same total: everything on one agent.
    const double sigma_max = (total / k) * std::sqrt(k - 1.0);
    if (sigma_max == 0.0) return 1.0;
    return std::clamp(1.0 - sigma / sigma_max, 0.0, 1.0);
}

double token_cost(double avg_completion_tokens_per_action, double score,
                  long action_count) {
    if (action_count < 0) throw MetricError("action count cannot be negative");
    return avg_completion_tokens_per_action /
           ((score + 1.0) + static_cast<double>(action_count));
}

double dep_complexity_construction(const Blueprint& blueprint, int base_layer_y,
                                   const std::set<std::string>& mined_materials,
                                   double height_weight) {
    if (blueprint.empty()) return 0.0;
    std::vector<BlockSpec> cells = blueprint.cells();
    // Scheduled placement order: bottom-up, then by x and z for determinism.
    std::ranges::sort(cells, [](const BlockSpec& a, const BlockSpec& b) {
        return std::tuple(a.position.y, a.position.x, a.position.z) <
               std::tuple(b.position.y, b.position.x, b.position.z);
    });
    std::set<Vec3> built;
    double total = 0.0;
    static const Vec3 faces[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                  {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const BlockSpec& cell : cells) {
        int support = 0;
        if (cell.position.y == base_layer_y) ++support;  // ground face
        for (const Vec3& d : faces) {
            if (built.count(cell.position + d)) ++support;
        }
        const int effective = std::max(1, support);
        const double dig = mined_materials.count(cell.material) ? 1.0 : 0.0;
        total += 1.0 / static_cast<double>(effective) +
                 height_weight * static_cast<double>(cell.position.y - base_layer_y) +
                 dig;
        built.insert(cell.position);
    }
    return total;
}

double dep_complexity_cooking(const RecipeBook& book,
                              const std::string& goal_item) {
    if (!book.has(goal_item)) {
        throw MetricError("unknown goal item: " + goal_item);
    }
    const worldsim::Recipe& goal = book.recipe(goal_item);
    double total = 0.0;
    for (const auto& [ingredient, count] : goal.ingredients) {
        total += static_cast<double>(count) *
                 static_cast<double>(book.depth(ingredient));
    }
    return total;
}

double dep_complexity_escape(const worldsim::EscapeSpec& spec) {
    // Walk from the exit back to the entrance, accumulating per-room
    // condition counts; rooms must form the expected 10-apart chain.
    double total = 0.0;
    for (std::size_t i = spec.rooms.size(); i-- > 0;) {
        const worldsim::EscapeRoom& room = spec.rooms[i];
        if (i + 1 < spec.rooms.size()) {
            const Vec3& next = spec.rooms[i + 1].center;
            if (next.z - room.center.z != 10 || next.x != room.center.x ||
                next.y != room.center.y) {
                throw MetricError("escape rooms are not a connected chain");
            }
        }
        total += static_cast<double>(room.conditions.size());
    }
    return total;
}

json MetricReport::to_json() const {
    json j;
    j["scenario"] = scenario;
    j["completion"] = completion;
    j["efficiency"] = efficiency;
    if (balance) j["balance"] = *balance;
    if (vhr) j["vhr"] = *vhr;
    if (acr) j["acr"] = *acr;
    j["token_cost"] = token_cost;
    j["dependency_complexity"] = dependency_complexity;
    j["active_minutes"] = active_minutes;
    j["contributions"] = contributions;
    return j;
}

MetricReport MetricReport::from_json(const json& j) {
    MetricReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.completion = j.at("completion").get<double>();
    r.efficiency = j.at("efficiency").get<double>();
    if (j.contains("balance")) r.balance = j.at("balance").get<double>();
    if (j.contains("vhr")) r.vhr = j.at("vhr").get<double>();
    if (j.contains("acr")) r.acr = j.at("acr").get<double>();
    r.token_cost = j.at("token_cost").get<double>();
    r.dependency_complexity = j.at("dependency_complexity").get<double>();
    r.active_minutes =
        j.value("active_minutes", std::map<std::string, double>{});
    r.contributions = j.value("contributions", std::map<std::string, double>{});
    return r;
}

}  // namespace dagcrew::metrics
