#include "dagcrew/tasklib.hpp"

#include "dagcrew/common.hpp"

namespace dagcrew::harness {

using nlohmann::json;

namespace {

json recipe(const std::string& result, int count,
            std::initializer_list<std::pair<const char*, int>> ingredients,
            const std::string& station) {
    json r;
    r["result"] = {{"name", result}, {"count", count}};
    r["ingredients"] = json::array();
    for (const auto& [name, n] : ingredients) {
        r["ingredients"].push_back({{"name", name}, {"count", n}});
    }
    r["station"] = station;
    return r;
}

}  // namespace

const std::vector<std::string>& bundled_construction_tasks() {
    static const std::vector<std::string> ids = {
        "task_0", "task_24", "task_tower", "task_wall", "task_garden",
    };
    return ids;
}

const std::vector<std::string>& bundled_cooking_tasks() {
    static const std::vector<std::string> ids = {"rabbit_stew", "cake"};
    return ids;
}

json construction_document(const std::string& task_id) {
    if (task_id == "task_0") {
        // Trivial flat platform.
        return json{{"task_0",
                     {"[material:grass_block facing: None "
                      "positions:[start:[0 -60 0] end:[1 -60 1]]]"}}};
    }
    if (task_id == "task_24") {
        // Flower plot ringed by trapdoors.
        return json{
            {"task_24",
             {"[material:grass_block facing: None "
              "positions:[start:[-9 -60 -1] end:[-9 -60 1]]]",
              "[material:oak_trapdoor facing:E "
              "positions:[[-8 -60 -1] [-8 -60 0]] "
              "material:oak_trapdoor facing:S positions:[[-9 -60 2]]]",
              "[material:oak_trapdoor facing:W "
              "positions:[[-10 -60 -1] [-10 -60 0]]]",
              "[material:oak_trapdoor facing:N position:[-9 -60 -2]]",
              "[material:oxeye_daisy facing: None position:[-9 -59 0]]",
              "[material:poppy facing: None position:[-9 -59 -1]]",
              "[material:dandelion facing: None position:[-9 -59 1]]"}}};
    }
    if (task_id == "task_tower") {
        return json{{"task_tower",
                     {"[material:oak_log facing: None axis:y "
                      "positions:[start:[5 -60 5] end:[5 -58 5]]]",
                      "[material:oak_planks facing: None position:[5 -57 5]]"}}};
    }
    if (task_id == "task_wall") {
        return json{{"task_wall",
                     {"[material:stone facing: None "
                      "positions:[start:[0 -60 4] end:[3 -60 4]]]",
                      "[material:stone_bricks facing: None "
                      "positions:[start:[0 -59 4] end:[3 -59 4]]]"}}};
    }
    if (task_id == "task_garden") {
        return json{{"task_garden",
                     {"[material:grass_block facing: None "
                      "positions:[start:[2 -60 -3] end:[4 -60 -3]]]",
                      "[material:oak_fence facing: None "
                      "positions:[[1 -60 -3] [5 -60 -3]]]",
                      "[material:poppy facing: None position:[2 -59 -3]]",
                      "[material:oxeye_daisy facing: None position:[3 -59 -3]]",
                      "[material:dandelion facing: None position:[4 -59 -3]]"}}};
    }
    throw ConfigError("unknown construction task: " + task_id);
}

json cooking_document(const std::string& task_id) {
    if (task_id == "rabbit_stew") {
        json doc;
        doc["goal"] = "rabbit_stew";
        doc["recipes"] = json::array({
            recipe("rabbit_stew", 1,
                   {{"baked_potato", 1},
                    {"cooked_rabbit", 1},
                    {"bowl", 1},
                    {"carrot", 1},
                    {"brown_mushroom", 1}},
                   "none"),
            recipe("baked_potato", 1, {{"potato", 1}}, "smelting"),
            recipe("cooked_rabbit", 1, {{"raw_rabbit", 1}}, "smelting"),
            recipe("bowl", 4, {{"oak_planks", 3}}, "crafting"),
            recipe("oak_planks", 4, {{"oak_log", 1}}, "none"),
        });
        return doc;
    }
    if (task_id == "cake") {
        json doc;
        doc["goal"] = "cake";
        doc["recipes"] = json::array({
            recipe("cake", 1,
                   {{"milk_bucket", 3}, {"sugar", 2}, {"wheat", 3}, {"egg", 1}},
                   "crafting"),
            recipe("sugar", 1, {{"sugar_cane", 1}}, "none"),
        });
        return doc;
    }
    throw ConfigError("unknown cooking task: " + task_id);
}

}  // namespace dagcrew::harness
