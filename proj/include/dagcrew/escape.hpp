#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/common.hpp"

namespace dagcrew::worldsim {

enum class ActivatorKind { pressure_plate, lever, button, door, trapdoor };

std::string to_string(ActivatorKind k);
ActivatorKind activator_kind_from_string(const std::string& s);

enum class ConditionKind {
    simultaneous,    // every listed activator held at one common tick
    toggle_order,    // listed activator toggled once all earlier conditions hold
    withdraw_item,   // key item taken out of the room chest
    handover_item,   // key item handed from one agent to another
    place_item,      // key item placed at the target cell
    mine_cell,       // listed cell mined away
};

std::string to_string(ConditionKind k);
ConditionKind condition_kind_from_string(const std::string& s);

struct EscapeCondition {
    ConditionKind kind = ConditionKind::simultaneous;
    std::vector<Vec3> cells;
    std::string item;
};

struct EscapeRoom {
    int index = 0;
    std::string atom;
    Vec3 center;
    int required_actors = 1;
    std::vector<std::pair<Vec3, ActivatorKind>> activators;
    std::vector<EscapeCondition> conditions;
    std::optional<Vec3> chest;
    std::map<std::string, int> chest_contents;
    std::string key_item;
    std::optional<Vec3> target;
    std::vector<Vec3> mine_cells;
    std::string hint;
    Vec3 sign;
};

/// A full escape challenge: rooms chained along +z with centers 10 apart,
/// passable in order once each room's conditions are met.
struct EscapeSpec {
    std::vector<EscapeRoom> rooms;
    Vec3 exit;
    Tick window = 600;

    nlohmann::json to_json() const;
    static EscapeSpec from_json(const nlohmann::json& j);
};

/// Seeded room-chain generator. Draws each room from the atom library,
/// excluding atoms that need more simultaneous actors than `agent_count`.
/// Room count is difficulty + 1.
EscapeSpec generate_escape(std::uint64_t seed, int difficulty, int agent_count);

/// Names of the bundled atom templates.
const std::vector<std::string>& escape_atom_library();

}  // namespace dagcrew::worldsim
