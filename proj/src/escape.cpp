#include "dagcrew/escape.hpp"

#include <algorithm>
#include <random>

namespace dagcrew::worldsim {

using nlohmann::json;

std::string to_string(ConditionKind k) {
    switch (k) {
        case ConditionKind::simultaneous:  return "simultaneous";
        case ConditionKind::toggle_order:  return "toggle_order";
        case ConditionKind::withdraw_item: return "withdraw_item";
        case ConditionKind::handover_item: return "handover_item";
        case ConditionKind::place_item:    return "place_item";
        case ConditionKind::mine_cell:     return "mine_cell";
    }
    return "simultaneous";
}

ConditionKind condition_kind_from_string(const std::string& s) {
    if (s == "simultaneous") return ConditionKind::simultaneous;
    if (s == "toggle_order") return ConditionKind::toggle_order;
    if (s == "withdraw_item") return ConditionKind::withdraw_item;
    if (s == "handover_item") return ConditionKind::handover_item;
    if (s == "place_item") return ConditionKind::place_item;
    if (s == "mine_cell") return ConditionKind::mine_cell;
    throw ParseError("unknown condition kind: " + s);
}

const std::vector<std::string>& escape_atom_library() {
    static const std::vector<std::string> atoms = {
        "simultaneous_plates", "button_hold", "lever_sequence",
        "item_fetch_place", "handover_relay", "barrier_mining",
    };
    return atoms;
}

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

// Drawing through raw engine output keeps generation identical across
// standard library implementations.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    return rng() % n;
}

int atom_min_actors(const std::string& atom) {
    if (atom == "simultaneous_plates" || atom == "button_hold" ||
        atom == "handover_relay") {
        return 2;
    }
    return 1;
}

const std::vector<std::string>& key_item_cycle() {
    static const std::vector<std::string> items = {
        "redstone_block", "gold_block", "iron_block", "quartz_block",
        "hay_block",
    };
    return items;
}

std::string cells_text(const std::vector<Vec3>& cells) {
    std::string out;
    for (const Vec3& c : cells) {
        if (!out.empty()) out += " ";
        out += dagcrew::to_string(c);
    }
    return out;
}

EscapeRoom make_room(const std::string& atom, int index, const Vec3& center,
                     int difficulty, int agent_count, std::mt19937_64& rng) {
    EscapeRoom room;
    room.index = index;
    room.atom = atom;
    room.center = center;
    room.sign = center + Vec3{0, 0, -4};
    room.key_item = key_item_cycle()[static_cast<std::size_t>(index) %
                                     key_item_cycle().size()];

    if (atom == "simultaneous_plates") {
        const int max_plates = std::min(4, agent_count);
        const int n = 2 + static_cast<int>(bounded(
                              rng, static_cast<std::uint64_t>(max_plates - 1)));
        static const Vec3 offsets[4] = {{-2, 0, 0}, {2, 0, 0}, {0, 0, -2}, {0, 0, 2}};
        EscapeCondition cond;
        cond.kind = ConditionKind::simultaneous;
        for (int i = 0; i < n; ++i) {
            const Vec3 cell = center + offsets[i];
            room.activators.emplace_back(cell, ActivatorKind::pressure_plate);
            cond.cells.push_back(cell);
        }
        room.conditions.push_back(cond);
        room.required_actors = n;
        room.hint = "Step on all the pressure plates at the same time: " +
                    cells_text(cond.cells);
    } else if (atom == "button_hold") {
        const Vec3 button = center + Vec3{-2, 0, 0};
        const Vec3 plate = center + Vec3{2, 0, 0};
        room.activators.emplace_back(button, ActivatorKind::button);
        room.activators.emplace_back(plate, ActivatorKind::pressure_plate);
        EscapeCondition cond;
        cond.kind = ConditionKind::simultaneous;
        cond.cells = {button, plate};
        room.conditions.push_back(cond);
        room.required_actors = 2;
        room.hint = "Hold the button and the pressure plate together: " +
                    cells_text(cond.cells);
    } else if (atom == "lever_sequence") {
        const int n = 2 + static_cast<int>(bounded(
                              rng, static_cast<std::uint64_t>(
                                       std::min(3, difficulty))));
        static const Vec3 offsets[4] = {{-1, 0, 1}, {0, 0, 1}, {1, 0, 1}, {2, 0, 1}};
        for (int i = 0; i < n; ++i) {
            const Vec3 cell = center + offsets[i];
            room.activators.emplace_back(cell, ActivatorKind::lever);
            EscapeCondition cond;
            cond.kind = ConditionKind::toggle_order;
            cond.cells = {cell};
            room.conditions.push_back(cond);
        }
        room.required_actors = 1;
        std::vector<Vec3> order;
        for (const auto& [cell, kind] : room.activators) order.push_back(cell);
        room.hint = "Pull the levers in this exact order: " + cells_text(order);
    } else if (atom == "item_fetch_place") {
        room.chest = center + Vec3{-3, 0, -3};
        room.chest_contents = {{room.key_item, 1}};
        room.target = center + Vec3{3, 0, 3};
        room.conditions.push_back(
            {ConditionKind::withdraw_item, {}, room.key_item});
        room.conditions.push_back(
            {ConditionKind::place_item, {*room.target}, room.key_item});
        room.required_actors = 1;
        room.hint = "Take the " + room.key_item + " from the chest at " +
                    dagcrew::to_string(*room.chest) + " and place it at " +
                    dagcrew::to_string(*room.target);
    } else if (atom == "handover_relay") {
        room.chest = center + Vec3{-3, 0, -3};
        room.chest_contents = {{room.key_item, 1}};
        room.target = center + Vec3{3, 0, 3};
        room.conditions.push_back(
            {ConditionKind::handover_item, {}, room.key_item});
        room.conditions.push_back(
            {ConditionKind::place_item, {*room.target}, room.key_item});
        room.required_actors = 2;
        room.hint = "One agent fetches the " + room.key_item + " from " +
                    dagcrew::to_string(*room.chest) +
                    ", hands it to a partner, and the partner places it at " +
                    dagcrew::to_string(*room.target);
    } else if (atom == "barrier_mining") {
        const int k = 2 + static_cast<int>(bounded(
                              rng, static_cast<std::uint64_t>(
                                       std::min(3, difficulty))));
        for (int i = 0; i < k; ++i) {
            const Vec3 cell = center + Vec3{-1 + i, 0, 4};
            room.mine_cells.push_back(cell);
            room.conditions.push_back({ConditionKind::mine_cell, {cell}, ""});
        }
        room.required_actors = 1;
        room.hint = "Mine the stone blocks sealing the passage: " +
                    cells_text(room.mine_cells);
    } else {
        throw WorldError("unknown escape atom: " + atom);
    }
    return room;
}

}  // namespace

EscapeSpec generate_escape(std::uint64_t seed, int difficulty, int agent_count) {
    if (difficulty < 1 || difficulty > 5) {
        throw WorldError("difficulty must be within [1, 5], got " +
                         std::to_string(difficulty));
    }
    if (agent_count < 1) throw WorldError("agent_count must be >= 1");

    std::vector<std::string> feasible;
    for (const std::string& atom : escape_atom_library()) {
        if (atom_min_actors(atom) <= agent_count) feasible.push_back(atom);
    }
    if (feasible.empty()) {
        throw WorldError("no escape atom is feasible for " +
                         std::to_string(agent_count) + " agents");
    }

    std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(difficulty) << 32) ^
                        (static_cast<std::uint64_t>(agent_count) << 48));
    EscapeSpec spec;
    const int room_count = difficulty + 1;
    for (int i = 0; i < room_count; ++i) {
        const Vec3 center{130, -60, 130 + 10 * i};
        const std::string atom = feasible[bounded(rng, feasible.size())];
        spec.rooms.push_back(
            make_room(atom, i, center, difficulty, agent_count, rng));
    }
    spec.exit = spec.rooms.back().center + Vec3{0, 0, 10};
    return spec;
}

json EscapeSpec::to_json() const {
    json j;
    j["exit"] = vec_to_json(exit);
    j["window"] = window;
    j["rooms"] = json::array();
    for (const EscapeRoom& room : rooms) {
        json r;
        r["index"] = room.index;
        r["atom"] = room.atom;
        r["center"] = vec_to_json(room.center);
        r["required_actors"] = room.required_actors;
        r["activators"] = json::array();
        for (const auto& [pos, kind] : room.activators) {
            r["activators"].push_back(
                json{{"pos", vec_to_json(pos)}, {"kind", to_string(kind)}});
        }
        r["conditions"] = json::array();
        for (const EscapeCondition& cond : room.conditions) {
            json c{{"kind", to_string(cond.kind)}, {"item", cond.item}};
            c["cells"] = json::array();
            for (const Vec3& cell : cond.cells) c["cells"].push_back(vec_to_json(cell));
            r["conditions"].push_back(std::move(c));
        }
        if (room.chest) {
            r["chest"] = vec_to_json(*room.chest);
            r["chest_contents"] = room.chest_contents;
        }
        r["key_item"] = room.key_item;
        if (room.target) r["target"] = vec_to_json(*room.target);
        r["mine_cells"] = json::array();
        for (const Vec3& cell : room.mine_cells) {
            r["mine_cells"].push_back(vec_to_json(cell));
        }
        r["hint"] = room.hint;
        r["sign"] = vec_to_json(room.sign);
        j["rooms"].push_back(std::move(r));
    }
    return j;
}

EscapeSpec EscapeSpec::from_json(const json& j) {
    EscapeSpec spec;
    spec.exit = vec_from_json(j.at("exit"));
    spec.window = j.value("window", 600);
    for (const json& r : j.at("rooms")) {
        EscapeRoom room;
        room.index = r.at("index").get<int>();
        room.atom = r.at("atom").get<std::string>();
        room.center = vec_from_json(r.at("center"));
        room.required_actors = r.at("required_actors").get<int>();
        for (const json& a : r.at("activators")) {
            room.activators.emplace_back(
                vec_from_json(a.at("pos")),
                activator_kind_from_string(a.at("kind").get<std::string>()));
        }
        for (const json& c : r.at("conditions")) {
            EscapeCondition cond;
            cond.kind = condition_kind_from_string(c.at("kind").get<std::string>());
            cond.item = c.value("item", "");
            for (const json& cell : c.at("cells")) {
                cond.cells.push_back(vec_from_json(cell));
            }
            room.conditions.push_back(std::move(cond));
        }
        if (r.contains("chest")) {
            room.chest = vec_from_json(r.at("chest"));
            room.chest_contents =
                r.at("chest_contents").get<std::map<std::string, int>>();
        }
        room.key_item = r.value("key_item", "");
        if (r.contains("target")) room.target = vec_from_json(r.at("target"));
        for (const json& cell : r.value("mine_cells", json::array())) {
            room.mine_cells.push_back(vec_from_json(cell));
        }
        room.hint = r.value("hint", "");
        room.sign = vec_from_json(r.at("sign"));
        spec.rooms.push_back(std::move(room));
    }
    return spec;
}

}  // namespace dagcrew::worldsim
