#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/blueprint.hpp"
#include "dagcrew/common.hpp"
#include "dagcrew/escape.hpp"

namespace dagcrew::metrics {

/// Fraction of blueprint cells built with matching position, material,
/// facing and axis.
double completion_construction(const std::vector<worldsim::BlockSpec>& placed,
                               const worldsim::Blueprint& blueprint);

/// Indicator set of a cooking goal: one indicator per raw material type to
/// acquire and one per processing step type to perform, derived from the
/// recipe tree.
struct CookingIndicators {
    std::map<std::string, int> raw_required;
    std::map<std::string, int> actions_required;

    int total() const {
        return static_cast<int>(raw_required.size() + actions_required.size());
    }
};

CookingIndicators derive_cooking_indicators(const worldsim::RecipeBook& book,
                                            const std::string& goal_item,
                                            int goal_count = 1);

/// Uniform-weight indicator completion. An indicator latches once the
/// acquired (or performed) count reaches the requirement; a goal item in
/// hand latches everything.
double completion_cooking(const CookingIndicators& indicators,
                          const std::map<std::string, int>& raw_acquired,
                          const std::map<std::string, int>& actions_performed,
                          bool goal_present);

/// Escape completion: mean over rooms of met/required condition fractions,
/// weighted by per-room scores (uniform by default).
double completion_escape(const std::vector<int>& conditions_per_room,
                         const std::vector<int>& met_per_room,
                         const std::vector<double>& scores = {});

/// Completion-per-minute. Elapsed must be positive.
double efficiency(double completion, double elapsed_minutes);

/// Workload balance: min-max normalise the active times, then 1 minus the
/// population standard deviation. Absent (nullopt) for fewer than two
/// agents; defined as 1 when all loads are equal.
std::optional<double> balance(const std::vector<double>& active_times);

enum class Viewpoint { pos_x, neg_x, pos_z, neg_z, top };

const std::vector<Viewpoint>& default_viewpoints();

/// The set of cells visible from a viewpoint under orthographic projection
/// with first-hit occlusion.
std::vector<worldsim::BlockSpec> visible_cells(
    const std::vector<worldsim::BlockSpec>& cells, Viewpoint view);

/// Mean IoU between constructed and expected visible cell sets across the
/// viewpoints.
double vhr(const std::vector<worldsim::BlockSpec>& placed,
           const worldsim::Blueprint& blueprint,
           const std::vector<Viewpoint>& viewpoints = default_viewpoints());

/// Contribution equality: one minus the population standard deviation of
/// the contribution vector, normalised by the most unequal distribution
/// with the same total. Absent for fewer than two agents or a zero total.
std::optional<double> acr(const std::vector<double>& contributions);

/// Cost = tokens / ((score + 1) + actions); the +1 keeps zero scores from
/// blowing the ratio up.
double token_cost(double avg_completion_tokens_per_action, double score,
                  long action_count);

/// Per-block difficulty sum: inverse effective support path, a height
/// penalty above the base layer, and a dig surcharge for factory-mined
/// materials. Support is evaluated against bottom-up placement order.
double dep_complexity_construction(
    const worldsim::Blueprint& blueprint, int base_layer_y,
    const std::set<std::string>& mined_materials = {}, double height_weight = 0.1);

/// Sum over the goal's direct ingredients of quantity times processing
/// depth (raw items count 1, each craft or smelt adds 1).
double dep_complexity_cooking(const worldsim::RecipeBook& book,
                              const std::string& goal_item);

/// Total pass conditions over the exit-to-entrance room traversal.
double dep_complexity_escape(const worldsim::EscapeSpec& spec);

struct MetricReport {
    std::string scenario;
    double completion = 0.0;
    double efficiency = 0.0;
    std::optional<double> balance;
    std::optional<double> vhr;
    std::optional<double> acr;
    double token_cost = 0.0;
    double dependency_complexity = 0.0;
    std::map<std::string, double> active_minutes;
    std::map<std::string, double> contributions;

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);
};

}  // namespace dagcrew::metrics
