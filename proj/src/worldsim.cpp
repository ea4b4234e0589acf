#include "dagcrew/worldsim.hpp"

#include <algorithm>
#include <sstream>

namespace dagcrew::worldsim {

using nlohmann::json;

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

std::optional<int> parse_int(const std::string& s) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

std::optional<Vec3> parse_vec(const std::vector<std::string>& args,
                              std::size_t at) {
    if (args.size() < at + 3) return std::nullopt;
    const auto x = parse_int(args[at]);
    const auto y = parse_int(args[at + 1]);
    const auto z = parse_int(args[at + 2]);
    if (!x || !y || !z) return std::nullopt;
    return Vec3{*x, *y, *z};
}

int chebyshev(const Vec3& a, const Vec3& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y),
                     std::abs(a.z - b.z)});
}

constexpr int kScanRadius = 16;
constexpr int kContainerRange = 3;
constexpr int kStationRange = 3;
constexpr int kHandoverRange = 2;
constexpr int kToggleRange = 3;
constexpr int kInteractRange = 3;

std::string items_to_text(const std::map<std::string, int>& items) {
    std::string out;
    for (const auto& [name, count] : items) {
        if (count <= 0) continue;
        if (!out.empty()) out += ", ";
        out += name + " x" + std::to_string(count);
    }
    return out.empty() ? "nothing" : out;
}

}  // namespace

std::string to_string(ActivatorKind k) {
    switch (k) {
        case ActivatorKind::pressure_plate: return "pressure_plate";
        case ActivatorKind::lever:          return "lever";
        case ActivatorKind::button:         return "button";
        case ActivatorKind::door:           return "door";
        case ActivatorKind::trapdoor:       return "trapdoor";
    }
    return "lever";
}

ActivatorKind activator_kind_from_string(const std::string& s) {
    if (s == "pressure_plate") return ActivatorKind::pressure_plate;
    if (s == "lever") return ActivatorKind::lever;
    if (s == "button") return ActivatorKind::button;
    if (s == "door") return ActivatorKind::door;
    if (s == "trapdoor") return ActivatorKind::trapdoor;
    throw ParseError("unknown activator kind: " + s);
}

const std::set<std::string>& action_catalogue() {
    static const std::set<std::string> catalogue = {
        "placeBlock", "MineBlock", "navigateTo", "scanNearbyEntities",
        "fetchContainerContents", "withdrawItem", "storeItem", "equipItem",
        "craftBlock", "SmeltingCooking", "attackTarget", "UseItemOnEntity",
        "handoverBlock", "ToggleAction", "erectDirtLadder",
        "dismantleDirtLadder",
    };
    return catalogue;
}

json ActionRequest::to_json() const {
    return json{{"agent", agent}, {"kind", kind}, {"args", args}};
}

ActionRequest ActionRequest::from_json(const json& j) {
    ActionRequest r;
    r.agent = j.at("agent").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    for (const auto& a : j.at("args")) r.args.push_back(a.get<std::string>());
    return r;
}

json ActionResult::to_json() const {
    return json{{"accepted", accepted}, {"observation", observation}, {"tick", tick}};
}

ActionResult ActionResult::from_json(const json& j) {
    ActionResult r;
    r.accepted = j.at("accepted").get<bool>();
    r.observation = j.at("observation").get<std::string>();
    r.tick = j.at("tick").get<Tick>();
    return r;
}

std::string ObservationRecord::render() const {
    std::string out = kind + " " + subject + " " + dagcrew::to_string(position);
    if (!detail.empty()) out += " " + detail;
    return out;
}

World::World(std::uint64_t seed) : seed_(seed) {}

void World::set_arena(const Vec3& lo, const Vec3& hi) {
    arena_lo_ = lo;
    arena_hi_ = hi;
}

void World::add_block(const Vec3& pos, const Block& block) {
    blocks_[pos] = block;
    preexisting_.insert(pos);
}

void World::add_container(const Vec3& pos, const std::map<std::string, int>& items) {
    containers_[pos] = items;
    preexisting_.insert(pos);
}

void World::add_activator(const Vec3& pos, ActivatorKind kind) {
    activators_[pos] = Activator{kind, false, 0, std::nullopt};
}

void World::add_entity(const Entity& entity) { entities_.push_back(entity); }

void World::add_sign(const Vec3& pos, const std::string& text) {
    signs_[pos] = text;
}

void World::add_agent(const std::string& name, const Vec3& pos,
                      const std::set<std::string>& capabilities) {
    AgentBody body;
    body.position = pos;
    body.capabilities = capabilities;
    agents_[name] = std::move(body);
    agent_ticks_[name] = clock_;
    busy_ticks_[name] = 0;
}

void World::add_interaction(const std::string& item, const std::string& entity,
                            const std::string& product) {
    interactions_[{item, entity}] = product;
}

void World::install_escape(const EscapeSpec& spec) {
    escape_ = spec;
    for (const EscapeRoom& room : spec.rooms) {
        for (const auto& [pos, kind] : room.activators) add_activator(pos, kind);
        if (room.chest) add_container(*room.chest, room.chest_contents);
        for (const Vec3& cell : room.mine_cells) {
            add_block(cell, Block{"stone", Facing::none, Axis::none});
        }
        add_sign(room.sign, room.hint);
        RoomRuntime rt;
        rt.room = room;
        rt.met.assign(room.conditions.size(), false);
        rooms_.push_back(std::move(rt));
    }
}

const AgentBody& World::agent(const std::string& name) const {
    auto it = agents_.find(name);
    if (it == agents_.end()) throw WorldError("unknown agent: " + name);
    return it->second;
}

Tick World::agent_tick(const std::string& agent) const {
    auto it = agent_ticks_.find(agent);
    if (it == agent_ticks_.end()) throw WorldError("unknown agent: " + agent);
    return it->second;
}

Tick World::busy_ticks(const std::string& agent) const {
    auto it = busy_ticks_.find(agent);
    if (it == busy_ticks_.end()) throw WorldError("unknown agent: " + agent);
    return it->second;
}

void World::begin_round() {
    for (auto& [name, t] : agent_ticks_) t = clock_;
}

bool World::in_arena(const Vec3& p) const {
    return p.x >= arena_lo_.x && p.x <= arena_hi_.x && p.y >= arena_lo_.y &&
           p.y <= arena_hi_.y && p.z >= arena_lo_.z && p.z <= arena_hi_.z;
}

bool World::cell_occupied(const Vec3& pos) const {
    return blocks_.count(pos) || containers_.count(pos) || activators_.count(pos);
}

bool World::placeable(const Vec3& pos) const {
    if (pos.y - 1 == ground_y_) return true;
    static const Vec3 faces[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                  {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const Vec3& d : faces) {
        if (cell_occupied(pos + d)) return true;
    }
    return false;
}

bool World::path_clear(const Vec3& from, const Vec3& to) const {
    if (!escape_) return true;
    const auto& rooms = escape_->rooms;
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        // Gate plane behind room i; open once the room is passed.
        const int gate_z = rooms[i].center.z + 5;
        const bool crosses = (from.z < gate_z && to.z >= gate_z) ||
                             (to.z < gate_z && from.z >= gate_z);
        if (crosses && !rooms_[i].passed) return false;
    }
    return true;
}

const std::set<std::string>& World::capabilities_of(const AgentBody& body) const {
    return body.capabilities.empty() ? action_catalogue() : body.capabilities;
}

Tick World::action_cost(const ActionRequest& request) const {
    if (request.kind == "navigateTo") {
        if (const auto dest = parse_vec(request.args, 0)) {
            auto it = agents_.find(request.agent);
            if (it != agents_.end()) {
                return 1 + manhattan(it->second.position, *dest);
            }
        }
    }
    return 1;
}

Tick World::peek_effect_tick(const ActionRequest& request) const {
    return agent_tick(request.agent) + action_cost(request);
}

ActionResult World::apply_action(const ActionRequest& request) {
    if (!agents_.count(request.agent)) {
        throw WorldError("unknown agent: " + request.agent);
    }
    const Tick cost = action_cost(request);
    const Tick effect = agent_ticks_[request.agent] + cost;
    ActionResult result = evaluate(request, effect);
    result.tick = effect;
    agent_ticks_[request.agent] = effect;
    busy_ticks_[request.agent] += cost;
    clock_ = std::max(clock_, effect);
    evaluate_conditions(effect);
    journal_.push_back({request, result});
    return result;
}

ActionResult World::evaluate(const ActionRequest& request, Tick effect) {
    AgentBody& body = agents_.at(request.agent);
    const auto& args = request.args;
    auto reject = [&](const std::string& why) {
        return ActionResult{false, why, effect};
    };
    auto accept = [&](const std::string& what) {
        return ActionResult{true, what, effect};
    };

    if (!action_catalogue().count(request.kind)) {
        return reject("unknown action '" + request.kind + "'");
    }
    if (!capabilities_of(body).count(request.kind)) {
        return reject("action '" + request.kind + "' is not among " +
                      request.agent + "'s capabilities");
    }

    if (request.kind == "navigateTo") {
        const auto dest = parse_vec(args, 0);
        if (!dest) return reject("navigateTo needs x y z");
        if (!in_arena(*dest)) {
            return reject("destination " + dagcrew::to_string(*dest) +
                          " is outside the arena");
        }
        if (!path_clear(body.position, *dest)) {
            return reject("the way to " + dagcrew::to_string(*dest) +
                          " is blocked by a closed room barrier");
        }
        body.position = *dest;
        return accept("arrived at " + dagcrew::to_string(*dest));
    }

    if (request.kind == "placeBlock") {
        if (args.empty()) return reject("placeBlock needs a material");
        const std::string& material = args[0];
        const auto pos = parse_vec(args, 1);
        if (!pos) return reject("placeBlock needs material x y z");
        Facing facing = Facing::none;
        Axis axis = Axis::none;
        try {
            if (args.size() > 4) facing = facing_from_string(args[4]);
            if (args.size() > 5) axis = axis_from_string(args[5]);
        } catch (const ParseError& e) {
            return reject(e.what());
        }
        if (body.inventory[material] < 1) {
            return reject("no " + material + " in inventory");
        }
        if (!in_arena(*pos)) return reject("cell is outside the arena");
        if (cell_occupied(*pos)) {
            return reject("cell " + dagcrew::to_string(*pos) +
                          " is already occupied");
        }
        if (!placeable(*pos)) {
            return reject("cell " + dagcrew::to_string(*pos) +
                          " has no adjacent block or ground support");
        }
        body.inventory[material] -= 1;
        blocks_[*pos] = Block{material, facing, axis};
        on_place(material, *pos, effect);
        return accept("placed " + material + " at " + dagcrew::to_string(*pos) +
                      " facing=" + to_string(facing) + " axis=" + to_string(axis));
    }

    if (request.kind == "MineBlock") {
        const auto pos = parse_vec(args, 0);
        if (!pos) return reject("MineBlock needs x y z");
        auto it = blocks_.find(*pos);
        if (it == blocks_.end()) {
            return reject("no block at " + dagcrew::to_string(*pos));
        }
        const std::string material = it->second.material;
        blocks_.erase(it);
        preexisting_.erase(*pos);
        body.inventory[material] += 1;
        on_mine(*pos, effect);
        return accept("mined " + material + " at " + dagcrew::to_string(*pos));
    }

    if (request.kind == "scanNearbyEntities") {
        std::string seen;
        for (const ObservationRecord& rec : local_view(request.agent)) {
            if (rec.kind == "entity" || rec.kind == "activator" ||
                rec.kind == "container" || rec.kind == "agent") {
                if (!seen.empty()) seen += "; ";
                seen += rec.render();
            }
        }
        return accept(seen.empty() ? "nothing nearby" : seen);
    }

    if (request.kind == "fetchContainerContents") {
        const auto pos = parse_vec(args, 0);
        if (!pos) return reject("fetchContainerContents needs x y z");
        if (chebyshev(body.position, *pos) > kScanRadius) {
            return reject("container is beyond scan radius");
        }
        auto it = containers_.find(*pos);
        if (it == containers_.end()) {
            return reject("no container at " + dagcrew::to_string(*pos));
        }
        return accept("container " + dagcrew::to_string(*pos) + " holds " +
                      items_to_text(it->second));
    }

    if (request.kind == "withdrawItem" || request.kind == "storeItem") {
        const auto pos = parse_vec(args, 0);
        if (!pos || args.size() < 5) {
            return reject(request.kind + " needs x y z item count");
        }
        const std::string& item = args[3];
        const auto count = parse_int(args[4]);
        if (!count || *count < 1) return reject("count must be a positive number");
        auto it = containers_.find(*pos);
        if (it == containers_.end()) {
            return reject("no container at " + dagcrew::to_string(*pos));
        }
        if (manhattan(body.position, *pos) > kContainerRange) {
            return reject("container " + dagcrew::to_string(*pos) +
                          " is out of reach");
        }
        if (request.kind == "withdrawItem") {
            if (it->second[item] < *count) {
                return reject("container lacks " + std::to_string(*count) + " " + item);
            }
            it->second[item] -= *count;
            if (it->second[item] == 0) it->second.erase(item);
            body.inventory[item] += *count;
            on_withdraw(item, *pos, effect);
            return accept("withdrew " + std::to_string(*count) + " " + item +
                          " from " + dagcrew::to_string(*pos));
        }
        if (body.inventory[item] < *count) {
            return reject("inventory lacks " + std::to_string(*count) + " " + item);
        }
        body.inventory[item] -= *count;
        if (body.inventory[item] == 0) body.inventory.erase(item);
        it->second[item] += *count;
        return accept("stored " + std::to_string(*count) + " " + item + " into " +
                      dagcrew::to_string(*pos));
    }

    if (request.kind == "equipItem") {
        if (args.empty()) return reject("equipItem needs an item");
        if (body.inventory[args[0]] < 1) {
            return reject("no " + args[0] + " in inventory");
        }
        body.equipped = args[0];
        return accept("equipped " + args[0]);
    }

    if (request.kind == "craftBlock" || request.kind == "SmeltingCooking") {
        if (args.empty()) return reject(request.kind + " needs a recipe result");
        const std::string& item = args[0];
        int times = 1;
        if (args.size() > 1) {
            const auto t = parse_int(args[1]);
            if (!t || *t < 1) return reject("count must be a positive number");
            times = *t;
        }
        if (!recipes_.has(item)) return reject("no recipe for " + item);
        const Recipe& recipe = recipes_.recipe(item);
        const bool smelting = recipe.station == Recipe::Station::smelting;
        if (request.kind == "SmeltingCooking" && !smelting) {
            return reject(item + " is not smelted or cooked");
        }
        if (request.kind == "craftBlock" && smelting) {
            return reject(item + " requires a furnace");
        }
        if (!station_near(body.position, recipe.station)) {
            return reject(smelting ? "no furnace within reach"
                                   : "no crafting table within reach");
        }
        if (!consume_ingredients(body, body.position, recipe.ingredients, times)) {
            return reject("missing ingredients for " + item);
        }
        body.inventory[item] += recipe.result_count * times;
        return accept((smelting ? "smelted " : "crafted ") +
                      std::to_string(recipe.result_count * times) + " " + item);
    }

    if (request.kind == "attackTarget") {
        if (args.empty()) return reject("attackTarget needs an entity name");
        const std::string& name = args[0];
        std::size_t best = entities_.size();
        int best_d = kScanRadius + 1;
        for (std::size_t i = 0; i < entities_.size(); ++i) {
            if (entities_[i].name != name) continue;
            const int d = chebyshev(body.position, entities_[i].position);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best == entities_.size()) {
            return reject("no " + name + " within range");
        }
        const Entity target = entities_[best];
        entities_.erase(entities_.begin() + static_cast<long>(best));
        if (!target.drop_item.empty()) {
            body.inventory[target.drop_item] += target.drop_count;
        }
        return accept("defeated " + name + ", collected " +
                      std::to_string(target.drop_count) + " " + target.drop_item);
    }

    if (request.kind == "UseItemOnEntity") {
        if (args.size() < 2) return reject("UseItemOnEntity needs item and entity");
        const std::string& item = args[0];
        const std::string& name = args[1];
        if (body.inventory[item] < 1) return reject("no " + item + " in inventory");
        bool near = false;
        for (const Entity& e : entities_) {
            if (e.name == name && chebyshev(body.position, e.position) <= kInteractRange) {
                near = true;
                break;
            }
        }
        if (!near) return reject("no " + name + " within range");
        auto it = interactions_.find({item, name});
        if (it == interactions_.end()) {
            return reject("using " + item + " on " + name + " does nothing");
        }
        body.inventory[item] -= 1;
        if (body.inventory[item] == 0) body.inventory.erase(item);
        body.inventory[it->second] += 1;
        return accept("used " + item + " on " + name + ", received " + it->second);
    }

    if (request.kind == "handoverBlock") {
        if (args.size() < 3) return reject("handoverBlock needs agent item count");
        const std::string& other = args[0];
        const std::string& item = args[1];
        const auto count = parse_int(args[2]);
        if (!count || *count < 1) return reject("count must be a positive number");
        auto it = agents_.find(other);
        if (it == agents_.end()) return reject("no such agent: " + other);
        if (manhattan(body.position, it->second.position) > kHandoverRange) {
            return reject(other + " is too far away for a handover");
        }
        if (body.inventory[item] < *count) {
            return reject("inventory lacks " + std::to_string(*count) + " " + item);
        }
        body.inventory[item] -= *count;
        if (body.inventory[item] == 0) body.inventory.erase(item);
        it->second.inventory[item] += *count;
        on_handover(item, effect);
        return accept("handed " + std::to_string(*count) + " " + item + " to " + other);
    }

    if (request.kind == "ToggleAction") {
        const auto pos = parse_vec(args, 0);
        if (!pos) return reject("ToggleAction needs x y z");
        auto it = activators_.find(*pos);
        if (it == activators_.end()) {
            return reject("no activator at " + dagcrew::to_string(*pos));
        }
        if (manhattan(body.position, *pos) > kToggleRange) {
            return reject("activator " + dagcrew::to_string(*pos) +
                          " is out of reach");
        }
        Activator& act = it->second;
        act.powered = !act.powered;
        act.last_change_tick = effect;
        if (act.powered) {
            act.last_on_tick = effect;
            on_toggle_order(*pos);
        }
        return accept("toggled " + to_string(act.kind) + " at " +
                      dagcrew::to_string(*pos) + ": now " +
                      (act.powered ? "powered" : "unpowered"));
    }

    if (request.kind == "erectDirtLadder" || request.kind == "dismantleDirtLadder") {
        // Kept for API-surface compatibility; vertical access is free in the
        // flat arena.
        return accept(request.kind + " done");
    }

    return reject("unhandled action '" + request.kind + "'");
}

bool World::station_near(const Vec3& pos, Recipe::Station station) const {
    if (station == Recipe::Station::none) return true;
    const std::string needed =
        station == Recipe::Station::crafting ? "crafting_table" : "furnace";
    for (const auto& [bpos, block] : blocks_) {
        if (block.material == needed && manhattan(pos, bpos) <= kStationRange) {
            return true;
        }
    }
    return false;
}

bool World::consume_ingredients(
    AgentBody& body, const Vec3& at,
    const std::vector<std::pair<std::string, int>>& needs, int multiple) {
    // Inventory first, then containers within reach. All-or-nothing.
    std::vector<std::map<Vec3, std::map<std::string, int>>::iterator> nearby;
    for (auto it = containers_.begin(); it != containers_.end(); ++it) {
        if (manhattan(at, it->first) <= kContainerRange) nearby.push_back(it);
    }
    std::map<std::string, int> from_inventory;
    std::map<Vec3, std::map<std::string, int>> from_containers;
    for (const auto& [item, count] : needs) {
        int remaining = count * multiple;
        const int inv = body.inventory.count(item) ? body.inventory.at(item) : 0;
        const int take = std::min(inv, remaining);
        from_inventory[item] += take;
        remaining -= take;
        for (auto& it : nearby) {
            if (remaining == 0) break;
            auto found = it->second.find(item);
            if (found == it->second.end()) continue;
            const int avail = found->second - from_containers[it->first][item];
            const int grab = std::min(avail, remaining);
            from_containers[it->first][item] += grab;
            remaining -= grab;
        }
        if (remaining > 0) return false;
    }
    for (const auto& [item, count] : from_inventory) {
        if (count == 0) continue;
        body.inventory[item] -= count;
        if (body.inventory[item] == 0) body.inventory.erase(item);
    }
    for (const auto& [pos, items] : from_containers) {
        for (const auto& [item, count] : items) {
            if (count == 0) continue;
            containers_[pos][item] -= count;
            if (containers_[pos][item] == 0) containers_[pos].erase(item);
        }
    }
    return true;
}

void World::tick(Tick n) {
    if (n < 1) throw WorldError("tick count must be >= 1");
    for (Tick i = 0; i < n; ++i) {
        ++clock_;
        evaluate_conditions(clock_);
    }
}

void World::evaluate_conditions(Tick now) {
    if (!escape_) return;
    for (RoomRuntime& rt : rooms_) {
        if (rt.passed) continue;
        for (std::size_t i = 0; i < rt.room.conditions.size(); ++i) {
            if (rt.met[i]) continue;
            const EscapeCondition& cond = rt.room.conditions[i];
            if (cond.kind != ConditionKind::simultaneous) continue;
            bool all_held = !cond.cells.empty();
            for (const Vec3& cell : cond.cells) {
                auto it = activators_.find(cell);
                const bool held = it != activators_.end() &&
                                  it->second.last_on_tick.has_value() &&
                                  *it->second.last_on_tick <= now &&
                                  now - *it->second.last_on_tick <= escape_->window;
                if (!held) {
                    all_held = false;
                    break;
                }
            }
            if (all_held) rt.met[i] = true;
        }
        rt.passed = std::ranges::all_of(rt.met, [](bool b) { return b; });
    }
}

namespace {

/// Latches condition i of a room when all earlier conditions are met —
/// used by the order-sensitive kinds.
bool earlier_met(const std::vector<bool>& met, std::size_t i) {
    for (std::size_t k = 0; k < i; ++k) {
        if (!met[k]) return false;
    }
    return true;
}

}  // namespace

void World::on_withdraw(const std::string& item, const Vec3& container, Tick now) {
    (void)now;
    for (RoomRuntime& rt : rooms_) {
        if (rt.passed || !rt.room.chest || *rt.room.chest != container) continue;
        for (std::size_t i = 0; i < rt.room.conditions.size(); ++i) {
            const EscapeCondition& cond = rt.room.conditions[i];
            if (!rt.met[i] && cond.kind == ConditionKind::withdraw_item &&
                cond.item == item) {
                rt.met[i] = true;
            }
        }
        rt.passed = std::ranges::all_of(rt.met, [](bool b) { return b; });
    }
}

void World::on_place(const std::string& item, const Vec3& cell, Tick now) {
    (void)now;
    for (RoomRuntime& rt : rooms_) {
        if (rt.passed) continue;
        for (std::size_t i = 0; i < rt.room.conditions.size(); ++i) {
            const EscapeCondition& cond = rt.room.conditions[i];
            if (!rt.met[i] && cond.kind == ConditionKind::place_item &&
                cond.item == item && !cond.cells.empty() && cond.cells[0] == cell &&
                earlier_met(rt.met, i)) {
                rt.met[i] = true;
            }
        }
        rt.passed = std::ranges::all_of(rt.met, [](bool b) { return b; });
    }
}

void World::on_handover(const std::string& item, Tick now) {
    (void)now;
    for (RoomRuntime& rt : rooms_) {
        if (rt.passed) continue;
        for (std::size_t i = 0; i < rt.room.conditions.size(); ++i) {
            const EscapeCondition& cond = rt.room.conditions[i];
            if (!rt.met[i] && cond.kind == ConditionKind::handover_item &&
                cond.item == item && earlier_met(rt.met, i)) {
                rt.met[i] = true;
            }
        }
        rt.passed = std::ranges::all_of(rt.met, [](bool b) { return b; });
    }
}

void World::on_mine(const Vec3& cell, Tick now) {
    (void)now;
    for (RoomRuntime& rt : rooms_) {
        if (rt.passed) continue;
        for (std::size_t i = 0; i < rt.room.conditions.size(); ++i) {
            const EscapeCondition& cond = rt.room.conditions[i];
            if (!rt.met[i] && cond.kind == ConditionKind::mine_cell &&
                !cond.cells.empty() && cond.cells[0] == cell) {
                rt.met[i] = true;
            }
        }
        rt.passed = std::ranges::all_of(rt.met, [](bool b) { return b; });
    }
}

void World::on_toggle_order(const Vec3& cell) {
    for (RoomRuntime& rt : rooms_) {
        if (rt.passed) continue;
        for (std::size_t i = 0; i < rt.room.conditions.size(); ++i) {
            const EscapeCondition& cond = rt.room.conditions[i];
            if (!rt.met[i] && cond.kind == ConditionKind::toggle_order &&
                !cond.cells.empty() && cond.cells[0] == cell &&
                earlier_met(rt.met, i)) {
                rt.met[i] = true;
            }
        }
        rt.passed = std::ranges::all_of(rt.met, [](bool b) { return b; });
    }
}

std::vector<ObservationRecord> World::local_view(const std::string& name) const {
    const AgentBody& me = agent(name);
    std::vector<ObservationRecord> records;
    auto near = [&](const Vec3& p) {
        return chebyshev(me.position, p) <= kScanRadius;
    };
    for (const auto& [pos, block] : blocks_) {
        if (!near(pos)) continue;
        records.push_back({"block", pos, block.material,
                           "facing=" + to_string(block.facing) +
                               " axis=" + to_string(block.axis)});
    }
    for (const auto& [pos, items] : containers_) {
        if (!near(pos)) continue;
        records.push_back({"container", pos, "chest",
                           "contents: " + items_to_text(items)});
    }
    for (const auto& [pos, act] : activators_) {
        if (!near(pos)) continue;
        records.push_back({"activator", pos, to_string(act.kind),
                           act.powered ? "powered=true" : "powered=false"});
    }
    for (const Entity& e : entities_) {
        if (!near(e.position)) continue;
        records.push_back({"entity", e.position, e.name, ""});
    }
    for (const auto& [pos, text] : signs_) {
        if (!near(pos)) continue;
        records.push_back({"sign", pos, "sign", text});
    }
    for (const auto& [other, body] : agents_) {
        if (other != name && !near(body.position)) continue;
        records.push_back({"agent", body.position, other,
                           "inventory: " + items_to_text(body.inventory)});
    }
    std::ranges::sort(records);
    return records;
}

std::vector<BlockSpec> World::placed_blocks() const {
    std::vector<BlockSpec> out;
    for (const auto& [pos, block] : blocks_) {
        if (preexisting_.count(pos)) continue;
        out.push_back({pos, block.material, block.facing, block.axis});
    }
    return out;
}

std::map<std::string, int> World::item_totals() const {
    std::map<std::string, int> totals;
    for (const auto& [name, body] : agents_) {
        for (const auto& [item, count] : body.inventory) totals[item] += count;
    }
    for (const auto& [pos, items] : containers_) {
        for (const auto& [item, count] : items) totals[item] += count;
    }
    std::erase_if(totals, [](const auto& kv) { return kv.second == 0; });
    return totals;
}

std::vector<World::RoomStatus> World::escape_status() const {
    std::vector<RoomStatus> out;
    for (const RoomRuntime& rt : rooms_) {
        RoomStatus st;
        st.conditions = static_cast<int>(rt.met.size());
        st.met = static_cast<int>(std::ranges::count(rt.met, true));
        st.passed = rt.passed;
        out.push_back(st);
    }
    return out;
}

const EscapeSpec& World::escape_spec() const {
    if (!escape_) throw WorldError("no escape challenge installed");
    return *escape_;
}

json World::snapshot() const {
    json j;
    j["clock"] = clock_;
    j["ground_y"] = ground_y_;
    j["blocks"] = json::array();
    for (const auto& [pos, block] : blocks_) {
        j["blocks"].push_back(json{{"pos", vec_to_json(pos)},
                                   {"material", block.material},
                                   {"facing", to_string(block.facing)},
                                   {"axis", to_string(block.axis)},
                                   {"placed", preexisting_.count(pos) == 0}});
    }
    j["containers"] = json::array();
    for (const auto& [pos, items] : containers_) {
        j["containers"].push_back(json{{"pos", vec_to_json(pos)}, {"items", items}});
    }
    j["activators"] = json::array();
    for (const auto& [pos, act] : activators_) {
        json a{{"pos", vec_to_json(pos)},
               {"kind", to_string(act.kind)},
               {"powered", act.powered},
               {"last_change", act.last_change_tick}};
        if (act.last_on_tick) a["last_on"] = *act.last_on_tick;
        j["activators"].push_back(std::move(a));
    }
    j["entities"] = json::array();
    for (const Entity& e : entities_) {
        j["entities"].push_back(json{{"name", e.name},
                                     {"pos", vec_to_json(e.position)},
                                     {"drop", e.drop_item},
                                     {"drop_count", e.drop_count}});
    }
    j["agents"] = json::object();
    for (const auto& [name, body] : agents_) {
        j["agents"][name] = json{{"pos", vec_to_json(body.position)},
                                 {"inventory", body.inventory},
                                 {"equipped", body.equipped},
                                 {"tick", agent_ticks_.at(name)},
                                 {"busy", busy_ticks_.at(name)}};
    }
    j["rooms"] = json::array();
    for (const RoomRuntime& rt : rooms_) {
        j["rooms"].push_back(json{{"met", rt.met}, {"passed", rt.passed}});
    }
    return j;
}

void WorldGate::register_worker(const std::string& agent) {
    std::lock_guard lock(mu_);
    active_.insert(agent);
}

void WorldGate::deregister_worker(const std::string& agent) {
    std::lock_guard lock(mu_);
    active_.erase(agent);
    pending_.erase(agent);
    cv_.notify_all();
}

ActionResult WorldGate::submit(const ActionRequest& request) {
    std::unique_lock lock(mu_);
    auto mine = std::make_shared<Pending>();
    mine->request = request;
    mine->key = world_.peek_effect_tick(request);
    pending_[request.agent] = mine;
    cv_.notify_all();
    while (!mine->done) {
        if (pending_.size() == active_.size() && !pending_.empty()) {
            auto best = pending_.begin();
            for (auto it = pending_.begin(); it != pending_.end(); ++it) {
                if (it->second->key < best->second->key ||
                    (it->second->key == best->second->key &&
                     it->first < best->first)) {
                    best = it;
                }
            }
            auto chosen = best->second;
            pending_.erase(best);
            chosen->result = world_.apply_action(chosen->request);
            chosen->done = true;
            cv_.notify_all();
            continue;
        }
        cv_.wait(lock);
    }
    return mine->result;
}

}  // namespace dagcrew::worldsim
