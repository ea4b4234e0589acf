#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/common.hpp"

namespace dagcrew::worldsim {

enum class Facing { none, north, south, east, west };
enum class Axis { none, x, y, z };

std::string to_string(Facing f);
std::string to_string(Axis a);
Facing facing_from_string(const std::string& s);
Axis axis_from_string(const std::string& s);

/// A concrete block cell as the construction metrics see it: position plus
/// material, facing and axis.
struct BlockSpec {
    Vec3 position;
    std::string material;
    Facing facing = Facing::none;
    Axis axis = Axis::none;

    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
    friend auto operator<=>(const BlockSpec&, const BlockSpec&) = default;
};

struct BlueprintEntry {
    std::string material;
    Facing facing = Facing::none;
    Axis axis = Axis::none;
    std::vector<Vec3> positions;  // boxes are expanded on load
};

struct Blueprint {
    std::vector<BlueprintEntry> entries;

    std::vector<BlockSpec> cells() const;
    /// Total items needed per material.
    std::map<std::string, int> material_counts() const;
    bool empty() const { return entries.empty(); }
};

/// Parses the line-oriented blueprint form, e.g.
///   [material:oak_trapdoor facing:E positions:[[-8 -60 -1] [-8 -60 0]]]
/// One line may hold several material groups; position boxes written as
/// start/end pairs expand to explicit cells.
Blueprint load_blueprint_lines(const std::vector<std::string>& lines);

/// Structured equivalent: {"<task id>": ["<line>", ...]}.
Blueprint load_blueprint_document(const nlohmann::json& document);

struct Recipe {
    std::string result;
    int result_count = 1;
    std::vector<std::pair<std::string, int>> ingredients;
    enum class Station { none, crafting, smelting } station = Station::none;
};

/// A closed set of recipes with acyclic ingredient chains. Items without a
/// recipe are raw world items.
class RecipeBook {
public:
    void add(Recipe recipe);
    bool has(const std::string& item) const { return recipes_.count(item) != 0; }
    const Recipe& recipe(const std::string& item) const;
    const std::map<std::string, Recipe>& all() const { return recipes_; }

    /// Processing depth: raw items sit at depth 1 and every craft or smelt
    /// layer adds one.
    int depth(const std::string& item) const;

private:
    std::map<std::string, Recipe> recipes_;
};

/// Parses one recipe from the document shape
/// {"result": {"name":..., "count":...}, "ingredients": [...]}.
Recipe load_recipe(const nlohmann::json& document);

bool known_material(const std::string& name);

}  // namespace dagcrew::worldsim
