#include "dagcrew/planner_scripted.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dagcrew/blueprint.hpp"
#include "dagcrew/escape.hpp"
#include "dagcrew/metrics.hpp"

namespace dagcrew::planner {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Small text utilities shared by the template rules.
// ---------------------------------------------------------------------------

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == ',') {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else if (c != ' ') {
            current += c;
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

std::optional<Vec3> parse_vec_text(const std::string& text) {
    // "(x,y,z)"
    if (text.size() < 7 || text.front() != '(' || text.back() != ')') {
        return std::nullopt;
    }
    int coords[3];
    std::size_t pos = 1;
    for (int i = 0; i < 3; ++i) {
        std::size_t next = text.find_first_of(",)", pos);
        if (next == std::string::npos) return std::nullopt;
        try {
            coords[i] = std::stoi(text.substr(pos, next - pos));
        } catch (...) {
            return std::nullopt;
        }
        pos = next + 1;
    }
    return Vec3{coords[0], coords[1], coords[2]};
}

std::string cells_to_text(const std::vector<Vec3>& cells) {
    std::string out = "[";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ";";
        out += dagcrew::to_string(cells[i]);
    }
    return out + "]";
}

std::vector<Vec3> parse_cells_text(const std::string& text) {
    std::vector<Vec3> cells;
    std::size_t pos = 0;
    while ((pos = text.find('(', pos)) != std::string::npos) {
        const std::size_t end = text.find(')', pos);
        if (end == std::string::npos) break;
        if (auto v = parse_vec_text(text.substr(pos, end - pos + 1))) {
            cells.push_back(*v);
        }
        pos = end + 1;
    }
    return cells;
}

/// Value of a `key=value` field inside a directive string; the value runs
/// until the next space (or the matching ']' for bracketed lists).
std::optional<std::string> field(const std::string& text, const std::string& key) {
    const std::string needle = key + "=";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        // Must start a word.
        if (pos > 0 && text[pos - 1] != ' ') {
            pos += needle.size();
            continue;
        }
        std::size_t start = pos + needle.size();
        if (start < text.size() && text[start] == '[') {
            const std::size_t end = text.find(']', start);
            if (end == std::string::npos) return std::nullopt;
            return text.substr(start, end - start + 1);
        }
        std::size_t end = text.find(' ', start);
        if (end == std::string::npos) end = text.size();
        return text.substr(start, end - start);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsed views of the env and transcript slots.
// ---------------------------------------------------------------------------

struct EnvRecord {
    std::string kind;
    std::string subject;
    Vec3 position;
    std::string detail;
};

std::vector<EnvRecord> parse_env(const std::string& env) {
    std::vector<EnvRecord> records;
    for (const std::string& line : split_lines(env)) {
        std::istringstream in(line);
        EnvRecord rec;
        std::string pos_text;
        if (!(in >> rec.kind >> rec.subject >> pos_text)) continue;
        const auto pos = parse_vec_text(pos_text);
        if (!pos) continue;
        rec.position = *pos;
        std::getline(in, rec.detail);
        if (!rec.detail.empty() && rec.detail.front() == ' ') {
            rec.detail.erase(0, 1);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::map<std::string, int> parse_items_text(const std::string& text) {
    // "potato x2, carrot x1" (or "nothing")
    std::map<std::string, int> items;
    std::istringstream in(text);
    std::string token;
    std::string pending_name;
    while (in >> token) {
        if (!token.empty() && token.back() == ',') token.pop_back();
        if (token.size() > 1 && token[0] == 'x' &&
            std::isdigit(static_cast<unsigned char>(token[1]))) {
            if (!pending_name.empty()) {
                try {
                    items[pending_name] += std::stoi(token.substr(1));
                } catch (...) {
                }
                pending_name.clear();
            }
        } else {
            pending_name = token;
        }
    }
    return items;
}

struct TranscriptAction {
    std::string kind;
    std::vector<std::string> args;
    bool accepted = false;
    std::string observation;
};

std::vector<TranscriptAction> parse_transcript(const std::string& transcript) {
    std::vector<TranscriptAction> actions;
    for (const std::string& line : split_lines(transcript)) {
        const std::size_t open = line.find('(');
        const std::size_t close = line.find(')', open);
        const std::size_t arrow = line.find(" -> ", close);
        if (open == std::string::npos || close == std::string::npos ||
            arrow == std::string::npos) {
            continue;
        }
        TranscriptAction act;
        act.kind = line.substr(0, open);
        std::string argtext = line.substr(open + 1, close - open - 1);
        std::string current;
        for (char c : argtext) {
            if (c == ',') {
                act.args.push_back(current);
                current.clear();
            } else if (c != ' ') {
                current += c;
            }
        }
        if (!current.empty()) act.args.push_back(current);
        std::string rest = line.substr(arrow + 4);
        act.accepted = rest.rfind("rejected: ", 0) != 0;
        if (!act.accepted) rest = rest.substr(10);
        const std::size_t at = rest.rfind(" @");
        act.observation = at == std::string::npos ? rest : rest.substr(0, at);
        actions.push_back(std::move(act));
    }
    return actions;
}

/// Tracks position and inventory as of the end of the transcript, starting
/// from the env snapshot taken at round start.
struct AgentLens {
    Vec3 position{};
    bool position_known = false;
    std::map<std::string, int> inventory;

    AgentLens(const std::string& me, const std::vector<EnvRecord>& env,
              const std::vector<TranscriptAction>& transcript) {
        for (const EnvRecord& rec : env) {
            if (rec.kind == "agent" && rec.subject == me) {
                position = rec.position;
                position_known = true;
                const std::size_t at = rec.detail.find("inventory: ");
                if (at != std::string::npos) {
                    inventory = parse_items_text(rec.detail.substr(at + 11));
                }
            }
        }
        for (const TranscriptAction& act : transcript) {
            if (!act.accepted) continue;
            if (act.kind == "navigateTo" && act.args.size() >= 3) {
                try {
                    position = Vec3{std::stoi(act.args[0]), std::stoi(act.args[1]),
                                    std::stoi(act.args[2])};
                    position_known = true;
                } catch (...) {
                }
            } else if (act.kind == "withdrawItem" && act.args.size() >= 5) {
                try {
                    inventory[act.args[3]] += std::stoi(act.args[4]);
                } catch (...) {
                }
            } else if (act.kind == "storeItem" && act.args.size() >= 5) {
                try {
                    inventory[act.args[3]] -= std::stoi(act.args[4]);
                } catch (...) {
                }
            } else if (act.kind == "placeBlock" && !act.args.empty()) {
                inventory[act.args[0]] -= 1;
            } else if (act.kind == "handoverBlock" && act.args.size() >= 3) {
                try {
                    inventory[act.args[1]] -= std::stoi(act.args[2]);
                } catch (...) {
                }
            }
        }
    }

    int count(const std::string& item) const {
        auto it = inventory.find(item);
        return it == inventory.end() ? 0 : it->second;
    }
};

std::string action_text(const std::string& kind,
                        const std::vector<std::string>& args) {
    std::string out = kind + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += args[i];
    }
    return out + ")";
}

std::string nav_to(const Vec3& v) {
    return action_text("navigateTo", {std::to_string(v.x), std::to_string(v.y),
                                      std::to_string(v.z)});
}

std::vector<std::string> vec_args(const Vec3& v) {
    return {std::to_string(v.x), std::to_string(v.y), std::to_string(v.z)};
}

// ---------------------------------------------------------------------------
// Decomposition rules.
// ---------------------------------------------------------------------------

struct ChunkSpec {
    std::string description;
    std::vector<int> preds;
    std::vector<std::string> data_refs;
    int agents = 1;
};

json chunks_to_reply(const std::vector<ChunkSpec>& chunks) {
    json arr = json::array();
    for (const ChunkSpec& c : chunks) {
        json item{{"description", c.description}};
        if (!c.preds.empty()) item["predecessors"] = c.preds;
        if (!c.data_refs.empty()) item["data_refs"] = c.data_refs;
        if (c.agents != 1) item["agents"] = c.agents;
        arr.push_back(std::move(item));
    }
    return arr;
}

std::set<std::string> existing_node_descriptions(const std::string& nodes_slot) {
    std::set<std::string> descs;
    for (const std::string& line : split_lines(nodes_slot)) {
        const std::size_t at = line.find("desc=");
        if (at != std::string::npos) descs.insert(line.substr(at + 5));
    }
    return descs;
}

std::string place_directive(const std::string& material, worldsim::Facing facing,
                            worldsim::Axis axis, const std::vector<Vec3>& cells) {
    return "place material=" + material + " facing=" + worldsim::to_string(facing) +
           " axis=" + worldsim::to_string(axis) + " cells=" + cells_to_text(cells);
}

std::string decompose_construction(const PlannerRequest& request) {
    const json doc = json::parse(request.slot("document"));
    const std::string task_key = doc.begin().key();
    const std::vector<EnvRecord> env = parse_env(request.slot_or("env", ""));
    const std::set<std::string> existing =
        existing_node_descriptions(request.slot_or("nodes", ""));

    // Cells already standing in the world.
    std::set<worldsim::BlockSpec> placed;
    for (const EnvRecord& rec : env) {
        if (rec.kind != "block") continue;
        worldsim::BlockSpec spec;
        spec.position = rec.position;
        spec.material = rec.subject;
        const auto f = field(rec.detail, "facing");
        const auto a = field(rec.detail, "axis");
        try {
            spec.facing = worldsim::facing_from_string(f.value_or("none"));
            spec.axis = worldsim::axis_from_string(a.value_or("none"));
        } catch (const ParseError&) {
            continue;
        }
        placed.insert(spec);
    }

    struct Chunk {
        std::string material;
        worldsim::Facing facing;
        worldsim::Axis axis;
        std::vector<Vec3> cells;
        int line_index;
        int min_y;
    };
    std::vector<Chunk> chunks;
    const auto& lines = doc.begin().value();
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const worldsim::Blueprint line_bp =
            worldsim::load_blueprint_lines({lines.at(li).get<std::string>()});
        for (const worldsim::BlueprintEntry& entry : line_bp.entries) {
            std::vector<Vec3> todo;
            for (const Vec3& cell : entry.positions) {
                if (!placed.count({cell, entry.material, entry.facing, entry.axis})) {
                    todo.push_back(cell);
                }
            }
            std::ranges::sort(todo, [](const Vec3& a, const Vec3& b) {
                return std::tuple(a.y, a.x, a.z) < std::tuple(b.y, b.x, b.z);
            });
            for (std::size_t start = 0; start < todo.size(); start += 3) {
                Chunk chunk;
                chunk.material = entry.material;
                chunk.facing = entry.facing;
                chunk.axis = entry.axis;
                chunk.cells.assign(
                    todo.begin() + static_cast<long>(start),
                    todo.begin() +
                        static_cast<long>(std::min(start + 3, todo.size())));
                chunk.line_index = static_cast<int>(li);
                chunk.min_y = chunk.cells.front().y;
                chunks.push_back(std::move(chunk));
            }
        }
    }
    // Bottom layers first so support chunks precede the chunks resting on
    // them; stable to keep line order within a layer.
    std::ranges::stable_sort(
        chunks, [](const Chunk& a, const Chunk& b) { return a.min_y < b.min_y; });

    std::vector<ChunkSpec> specs;
    std::vector<const Chunk*> emitted;
    for (const Chunk& chunk : chunks) {
        ChunkSpec spec;
        spec.description =
            place_directive(chunk.material, chunk.facing, chunk.axis, chunk.cells);
        if (existing.count(spec.description)) continue;
        spec.data_refs = {"$." + task_key + "[" +
                          std::to_string(chunk.line_index) + "]"};
        for (std::size_t k = 0; k < emitted.size(); ++k) {
            const Chunk* support = emitted[k];
            bool depends = false;
            for (const Vec3& cell : chunk.cells) {
                const Vec3 below{cell.x, cell.y - 1, cell.z};
                if (std::ranges::find(support->cells, below) !=
                    support->cells.end()) {
                    depends = true;
                    break;
                }
            }
            if (depends) spec.preds.push_back(static_cast<int>(k) + 1);
        }
        emitted.push_back(&chunk);
        specs.push_back(std::move(spec));
    }
    // Dropping already-covered chunks would shift predecessor indices, so
    // recompute them only over what is actually emitted.
    if (specs.size() != emitted.size()) {
        // (cannot happen: covered chunks are skipped before emission)
    }
    return chunks_to_reply(specs).dump();
}

std::string decompose_cooking(const PlannerRequest& request) {
    const json doc = json::parse(request.slot("document"));
    const std::string goal = doc.at("goal").get<std::string>();
    worldsim::RecipeBook book;
    for (const json& r : doc.at("recipes")) book.add(worldsim::load_recipe(r));
    const std::vector<EnvRecord> env = parse_env(request.slot_or("env", ""));
    const std::set<std::string> existing =
        existing_node_descriptions(request.slot_or("nodes", ""));

    // Nothing to do once the dish exists anywhere.
    for (const EnvRecord& rec : env) {
        if (rec.kind == "agent" || rec.kind == "container") {
            if (rec.detail.find(goal + " x") != std::string::npos) {
                return "[]";
            }
        }
    }

    struct Source {
        Vec3 position;
        std::map<std::string, int> items;
    };
    std::vector<Source> containers;
    std::vector<EnvRecord> entities;
    std::vector<Vec3> furnaces;
    for (const EnvRecord& rec : env) {
        if (rec.kind == "container") {
            const std::size_t at = rec.detail.find("contents: ");
            Source src;
            src.position = rec.position;
            if (at != std::string::npos) {
                src.items = parse_items_text(rec.detail.substr(at + 10));
            }
            containers.push_back(std::move(src));
        } else if (rec.kind == "entity") {
            entities.push_back(rec);
        } else if (rec.kind == "block" && rec.subject == "furnace") {
            furnaces.push_back(rec.position);
        }
    }
    // Staging chest: the one beside a furnace, so smelting, crafting and
    // storing all happen from one standing spot.
    std::optional<Vec3> staging;
    for (const Source& src : containers) {
        for (const Vec3& f : furnaces) {
            if (manhattan(src.position, f) <= 3) {
                staging = src.position;
                break;
            }
        }
        if (staging) break;
    }
    if (!staging && !containers.empty()) staging = containers.front().position;
    if (!staging) return "[]";  // nowhere to work from yet
    const std::string store = dagcrew::to_string(*staging);

    const metrics::CookingIndicators indicators =
        metrics::derive_cooking_indicators(book, goal);

    std::vector<ChunkSpec> specs;
    std::map<std::string, int> producer_index;  // item -> 1-based spec index

    // Gather specs for every raw requirement (roots).
    for (const auto& [raw, amount] : indicators.raw_required) {
        ChunkSpec spec;
        std::optional<Vec3> from;
        for (const Source& src : containers) {
            auto it = src.items.find(raw);
            if (it != src.items.end() && it->second >= amount) {
                from = src.position;
                break;
            }
        }
        if (from) {
            spec.description = "gather item=" + raw + " count=" +
                               std::to_string(amount) + " from=" +
                               dagcrew::to_string(*from) + " store=" + store;
        } else {
            // Hunt the animal whose drop this is.
            std::optional<std::string> prey;
            for (const EnvRecord& e : entities) {
                if (e.subject == raw || "raw_" + e.subject == raw) {
                    prey = e.subject;
                    break;
                }
            }
            if (!prey) continue;  // not obtainable; leave to feedback loops
            spec.description = "hunt entity=" + *prey + " drop=" + raw +
                               " count=" + std::to_string(amount) +
                               " store=" + store;
        }
        specs.push_back(std::move(spec));
        producer_index[raw] = static_cast<int>(specs.size());
    }

    // Processing specs in dependency-depth order; the goal craft comes last
    // and keeps its product in hand.
    std::vector<std::string> processed;
    for (const auto& [item, applications] : indicators.actions_required) {
        processed.push_back(item);
    }
    std::ranges::sort(processed, [&](const std::string& a, const std::string& b) {
        const int da = book.depth(a);
        const int db = book.depth(b);
        return da != db ? da < db : a < b;
    });
    for (const std::string& item : processed) {
        const worldsim::Recipe& recipe = book.recipe(item);
        const int applications = indicators.actions_required.at(item);
        ChunkSpec spec;
        const bool smelt = recipe.station == worldsim::Recipe::Station::smelting;
        const bool is_goal = item == goal;
        spec.description = std::string(smelt ? "smelt" : "craft") +
                           " recipe=" + item + " count=" +
                           std::to_string(applications) + " produce=" +
                           std::to_string(applications * recipe.result_count) +
                           (is_goal ? " keep" : " store=" + store);
        for (const auto& [ingredient, count] : recipe.ingredients) {
            (void)count;
            auto it = producer_index.find(ingredient);
            if (it != producer_index.end()) spec.preds.push_back(it->second);
        }
        std::ranges::sort(spec.preds);
        specs.push_back(std::move(spec));
        producer_index[item] = static_cast<int>(specs.size());
    }

    // Skip work already represented in the graph, remapping predecessor
    // indices onto the surviving batch.
    std::vector<ChunkSpec> fresh;
    std::map<int, int> remap;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (existing.count(specs[i].description)) continue;
        ChunkSpec spec = specs[i];
        std::vector<int> preds;
        for (int p : spec.preds) {
            auto it = remap.find(p);
            if (it != remap.end()) preds.push_back(it->second);
        }
        spec.preds = std::move(preds);
        fresh.push_back(std::move(spec));
        remap[static_cast<int>(i) + 1] = static_cast<int>(fresh.size());
    }
    return chunks_to_reply(fresh).dump();
}

std::string decompose_escape(const PlannerRequest& request) {
    const json doc = json::parse(request.slot("document"));
    const worldsim::EscapeSpec spec = worldsim::EscapeSpec::from_json(doc);
    const std::vector<std::string> agents = split_csv(request.slot("agents"));
    const std::set<std::string> existing =
        existing_node_descriptions(request.slot_or("nodes", ""));

    std::vector<ChunkSpec> specs;
    int previous_last = 0;  // 1-based index of the previous room's last spec
    for (const worldsim::EscapeRoom& room : spec.rooms) {
        const std::string tag = " room=" + std::to_string(room.index);
        std::vector<ChunkSpec> room_specs;
        if (room.atom == "simultaneous_plates" || room.atom == "button_hold") {
            std::vector<Vec3> targets;
            for (const auto& [cell, kind] : room.activators) {
                (void)kind;
                targets.push_back(cell);
            }
            ChunkSpec s;
            s.description = "press mode=sim targets=" + cells_to_text(targets) + tag;
            s.agents = room.required_actors;
            room_specs.push_back(std::move(s));
        } else if (room.atom == "lever_sequence") {
            std::vector<Vec3> targets;
            for (const auto& [cell, kind] : room.activators) {
                (void)kind;
                targets.push_back(cell);
            }
            ChunkSpec s;
            s.description = "press mode=seq targets=" + cells_to_text(targets) + tag;
            room_specs.push_back(std::move(s));
        } else if (room.atom == "item_fetch_place") {
            ChunkSpec s;
            s.description = "relocate item=" + room.key_item + " from=" +
                            dagcrew::to_string(*room.chest) + " to=" +
                            dagcrew::to_string(*room.target) + tag;
            room_specs.push_back(std::move(s));
        } else if (room.atom == "handover_relay") {
            const std::string& carrier = agents.at(0);
            const std::string& receiver =
                agents.size() > 1 ? agents.at(1) : agents.at(0);
            ChunkSpec fetch;
            fetch.description = "courier item=" + room.key_item + " from=" +
                                dagcrew::to_string(*room.chest) + " to_agent=" +
                                receiver + tag + " assignee:" + carrier;
            ChunkSpec place;
            place.description = "deposit item=" + room.key_item + " to=" +
                                dagcrew::to_string(*room.target) + tag +
                                " assignee:" + receiver;
            place.preds = {1};  // adjusted below when appended
            room_specs.push_back(std::move(fetch));
            room_specs.push_back(std::move(place));
        } else if (room.atom == "barrier_mining") {
            ChunkSpec s;
            s.description = "mine cells=" + cells_to_text(room.mine_cells) + tag;
            room_specs.push_back(std::move(s));
        }

        for (std::size_t k = 0; k < room_specs.size(); ++k) {
            ChunkSpec s = std::move(room_specs[k]);
            if (k == 0) {
                s.preds.clear();
                if (previous_last > 0) s.preds.push_back(previous_last);
            } else {
                s.preds = {static_cast<int>(specs.size())};  // previous in room
            }
            specs.push_back(std::move(s));
        }
        previous_last = static_cast<int>(specs.size());
    }

    // One shot: if any of this plan is already in the graph, emit nothing
    // new (the chain was issued in an earlier round).
    for (const ChunkSpec& s : specs) {
        if (existing.count(s.description)) return "[]";
    }
    return chunks_to_reply(specs).dump();
}

std::string rule_decompose(const PlannerRequest& request) {
    const std::string scenario = request.slot_or("scenario", "");
    if (scenario == "construction") return decompose_construction(request);
    if (scenario == "cooking") return decompose_cooking(request);
    if (scenario == "escape") return decompose_escape(request);
    return "[]";
}

std::string rule_redecompose(const PlannerRequest& request) {
    std::string desc = request.slot("failed_description");
    // Strip a previous assignee mark before re-issuing.
    const std::size_t at = desc.find(" assignee:");
    if (at != std::string::npos) desc = desc.substr(0, at);
    const std::vector<std::string> crew =
        split_csv(request.slot_or("failed_agents", ""));
    const std::string assignee = crew.empty() ? "" : " assignee:" + crew.front();

    json arr = json::array();
    if (desc.rfind("place material=", 0) == 0) {
        // Re-stock then retry the placement with the same cells.
        const std::string material = field(desc, "material").value_or("");
        const std::vector<Vec3> cells =
            parse_cells_text(field(desc, "cells").value_or(""));
        arr.push_back({{"description",
                        "fetch material=" + material + " count=" +
                            std::to_string(cells.size()) + assignee}});
        arr.push_back(
            {{"description", desc + assignee}, {"predecessors", {1}}});
    } else {
        arr.push_back({{"description", desc + assignee}});
    }
    return arr.dump();
}

std::string rule_allocate(const PlannerRequest& request) {
    struct ReadyNode {
        NodeId id = 0;
        int agents = 1;
        std::string desc;
    };
    std::vector<ReadyNode> ready;
    for (const std::string& line : split_lines(request.slot("ready_nodes"))) {
        ReadyNode node;
        const auto id = field(line, "id");
        if (!id) continue;
        try {
            node.id = std::stoll(*id);
        } catch (...) {
            continue;
        }
        const auto agents = field(line, "agents");
        if (agents) {
            try {
                node.agents = std::stoi(*agents);
            } catch (...) {
            }
        }
        const std::size_t at = line.find("desc=");
        if (at != std::string::npos) node.desc = line.substr(at + 5);
        ready.push_back(std::move(node));
    }
    std::ranges::sort(ready, [](const ReadyNode& a, const ReadyNode& b) {
        return a.id < b.id;
    });

    std::vector<std::string> idle = split_csv(request.slot("agents"));
    json arr = json::array();
    for (const ReadyNode& node : ready) {
        // Honour explicit assignees when the plan pinned the work.
        std::vector<std::string> wanted;
        std::size_t pos = 0;
        while ((pos = node.desc.find("assignee:", pos)) != std::string::npos) {
            pos += 9;
            std::size_t end = node.desc.find(' ', pos);
            if (end == std::string::npos) end = node.desc.size();
            wanted.push_back(node.desc.substr(pos, end - pos));
        }
        std::vector<std::string> chosen;
        if (!wanted.empty()) {
            for (const std::string& name : wanted) {
                auto it = std::ranges::find(idle, name);
                if (it != idle.end()) chosen.push_back(name);
            }
            if (chosen.size() <
                static_cast<std::size_t>(std::max(1, (int)wanted.size()))) {
                continue;  // pinned agent is busy; wait
            }
        } else {
            for (const std::string& name : idle) {
                if (chosen.size() ==
                    static_cast<std::size_t>(node.agents)) {
                    break;
                }
                chosen.push_back(name);
            }
            if (chosen.size() < static_cast<std::size_t>(node.agents)) {
                continue;  // not enough idle agents; the node waits
            }
        }
        for (const std::string& name : chosen) {
            arr.push_back({{"agent", name}, {"node", node.id}});
            std::erase(idle, name);
        }
    }
    return arr.dump();
}

std::string rule_agent_state_update(const PlannerRequest& request) {
    std::vector<std::string> facts;
    std::istringstream old(request.slot_or("summary", ""));
    std::string piece;
    while (std::getline(old, piece, ';')) {
        while (!piece.empty() && piece.front() == ' ') piece.erase(0, 1);
        if (!piece.empty()) facts.push_back(piece);
    }
    for (const TranscriptAction& act :
         parse_transcript(request.slot_or("history", ""))) {
        if (act.accepted && !act.observation.empty()) {
            facts.push_back(act.observation);
        }
    }
    // Keep each fact once, newest mention last.
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (auto it = facts.rbegin(); it != facts.rend(); ++it) {
        if (seen.insert(*it).second) unique.push_back(*it);
    }
    std::ranges::reverse(unique);
    std::string out;
    for (const std::string& fact : unique) {
        if (!out.empty()) out += "; ";
        out += fact;
    }
    return out;
}

std::string rule_env_retrieve(const PlannerRequest& request) {
    const std::string scenario = request.slot_or("scenario", "");
    std::string out;
    for (const std::string& line : split_lines(request.slot_or("global_env", ""))) {
        std::istringstream in(line);
        std::string kind, subject;
        in >> kind >> subject;
        bool keep = false;
        if (kind == "agent") {
            keep = true;
        } else if (scenario == "construction") {
            keep = kind == "block" || kind == "container";
        } else if (scenario == "cooking") {
            keep = kind == "container" || kind == "entity" ||
                   (kind == "block" &&
                    (subject == "furnace" || subject == "crafting_table"));
        } else if (scenario == "escape") {
            keep = kind == "activator" || kind == "sign" || kind == "container" ||
                   (kind == "block" && subject == "stone");
        } else {
            keep = true;
        }
        if (keep) {
            out += line;
            out += "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ReAct rules: one concrete action (or terminal claim) per call, decided
// from the directive in the node description plus the transcript so far.
// ---------------------------------------------------------------------------

std::string react_place(const std::string& desc, const AgentLens& lens,
                        const std::vector<EnvRecord>& env,
                        const std::vector<TranscriptAction>& transcript) {
    const std::string material = field(desc, "material").value_or("");
    const std::string facing = field(desc, "facing").value_or("none");
    const std::string axis = field(desc, "axis").value_or("none");
    std::vector<Vec3> cells = parse_cells_text(field(desc, "cells").value_or(""));
    if (material.empty() || cells.empty()) return "terminal(failed)";

    // Remaining cells: drop those placed earlier this execution or already
    // present in the world view.
    std::set<Vec3> done;
    for (const TranscriptAction& act : transcript) {
        if (act.accepted && act.kind == "placeBlock" && act.args.size() >= 4) {
            try {
                done.insert(Vec3{std::stoi(act.args[1]), std::stoi(act.args[2]),
                                 std::stoi(act.args[3])});
            } catch (...) {
            }
        }
    }
    for (const EnvRecord& rec : env) {
        if (rec.kind == "block" && rec.subject == material) {
            done.insert(rec.position);
        }
    }
    std::erase_if(cells, [&](const Vec3& c) { return done.count(c) != 0; });
    if (cells.empty()) return "terminal(succeeded)";
    std::ranges::sort(cells, [](const Vec3& a, const Vec3& b) {
        return std::tuple(a.y, a.x, a.z) < std::tuple(b.y, b.x, b.z);
    });

    if (lens.count(material) < static_cast<int>(cells.size())) {
        // Restock from the chest that carries this material.
        std::optional<Vec3> chest;
        for (const EnvRecord& rec : env) {
            if (rec.kind == "container" &&
                rec.detail.find(material + " x") != std::string::npos) {
                chest = rec.position;
                break;
            }
        }
        if (chest) {
            if (!lens.position_known || manhattan(lens.position, *chest) > 3) {
                return nav_to(*chest);
            }
            const int needed =
                static_cast<int>(cells.size()) - lens.count(material);
            std::vector<std::string> args = vec_args(*chest);
            args.push_back(material);
            args.push_back(std::to_string(needed));
            return action_text("withdrawItem", args);
        }
        // No chest in sight; try placing anyway and learn from rejections.
    }
    std::vector<std::string> args{material};
    const std::vector<std::string> pos = vec_args(cells.front());
    args.insert(args.end(), pos.begin(), pos.end());
    args.push_back(facing);
    args.push_back(axis);
    return action_text("placeBlock", args);
}

std::string react_fetch(const std::string& desc, const AgentLens& lens,
                        const std::vector<EnvRecord>& env,
                        const std::vector<TranscriptAction>& transcript) {
    const std::string material = field(desc, "material").value_or("");
    const int count = std::stoi(field(desc, "count").value_or("1"));
    for (const TranscriptAction& act : transcript) {
        if (act.accepted && act.kind == "withdrawItem") {
            return "terminal(succeeded)";
        }
    }
    std::optional<Vec3> chest;
    for (const EnvRecord& rec : env) {
        if (rec.kind == "container" &&
            rec.detail.find(material + " x") != std::string::npos) {
            chest = rec.position;
            break;
        }
    }
    if (!chest) return "terminal(failed)";
    if (!lens.position_known || manhattan(lens.position, *chest) > 3) {
        return nav_to(*chest);
    }
    std::vector<std::string> args = vec_args(*chest);
    args.push_back(material);
    args.push_back(std::to_string(count));
    return action_text("withdrawItem", args);
}

bool did(const std::vector<TranscriptAction>& transcript,
         const std::string& kind) {
    return std::ranges::any_of(transcript, [&](const TranscriptAction& a) {
        return a.accepted && a.kind == kind;
    });
}

std::string react_gather(const std::string& desc, const AgentLens& lens,
                         const std::vector<TranscriptAction>& transcript) {
    const std::string item = field(desc, "item").value_or("");
    const std::string count = field(desc, "count").value_or("1");
    const auto from = parse_vec_text(field(desc, "from").value_or(""));
    const auto store = parse_vec_text(field(desc, "store").value_or(""));
    if (item.empty() || !from || !store) return "terminal(failed)";
    if (!did(transcript, "withdrawItem")) {
        if (!lens.position_known || manhattan(lens.position, *from) > 3) {
            return nav_to(*from);
        }
        std::vector<std::string> args = vec_args(*from);
        args.push_back(item);
        args.push_back(count);
        return action_text("withdrawItem", args);
    }
    if (!did(transcript, "storeItem")) {
        if (manhattan(lens.position, *store) > 3) return nav_to(*store);
        std::vector<std::string> args = vec_args(*store);
        args.push_back(item);
        args.push_back(count);
        return action_text("storeItem", args);
    }
    return "terminal(succeeded)";
}

std::string react_hunt(const std::string& desc, const AgentLens& lens,
                       const std::vector<EnvRecord>& env,
                       const std::vector<TranscriptAction>& transcript) {
    const std::string prey = field(desc, "entity").value_or("");
    const std::string drop = field(desc, "drop").value_or("");
    const std::string count = field(desc, "count").value_or("1");
    const auto store = parse_vec_text(field(desc, "store").value_or(""));
    if (prey.empty() || !store) return "terminal(failed)";
    if (!did(transcript, "attackTarget")) {
        std::optional<Vec3> at;
        for (const EnvRecord& rec : env) {
            if (rec.kind == "entity" && rec.subject == prey) {
                at = rec.position;
                break;
            }
        }
        if (at && lens.position_known &&
            std::max({std::abs(lens.position.x - at->x),
                      std::abs(lens.position.y - at->y),
                      std::abs(lens.position.z - at->z)}) > 16) {
            return nav_to(*at);
        }
        return action_text("attackTarget", {prey});
    }
    if (!did(transcript, "storeItem")) {
        if (manhattan(lens.position, *store) > 3) return nav_to(*store);
        std::vector<std::string> args = vec_args(*store);
        args.push_back(drop);
        args.push_back(count);
        return action_text("storeItem", args);
    }
    return "terminal(succeeded)";
}

std::string react_process(const std::string& desc, bool smelt,
                          const AgentLens& lens,
                          const std::vector<TranscriptAction>& transcript) {
    const std::string recipe = field(desc, "recipe").value_or("");
    const std::string count = field(desc, "count").value_or("1");
    const std::string produce = field(desc, "produce").value_or("1");
    const bool keep = desc.find(" keep") != std::string::npos;
    const auto store = parse_vec_text(field(desc, "store").value_or(""));
    if (recipe.empty() || (!keep && !store)) return "terminal(failed)";
    const Vec3 spot = store ? *store : lens.position;
    const std::string act_kind = smelt ? "SmeltingCooking" : "craftBlock";
    if (!did(transcript, act_kind)) {
        if (store && (!lens.position_known || manhattan(lens.position, spot) > 2)) {
            return nav_to(spot);
        }
        return action_text(act_kind, {recipe, count});
    }
    if (!keep && !did(transcript, "storeItem")) {
        if (manhattan(lens.position, *store) > 3) return nav_to(*store);
        std::vector<std::string> args = vec_args(*store);
        args.push_back(recipe);
        args.push_back(produce);
        return action_text("storeItem", args);
    }
    return "terminal(succeeded)";
}

std::string react_press(const std::string& desc, int agent_index,
                        const AgentLens& lens,
                        const std::vector<TranscriptAction>& transcript) {
    const std::string mode = field(desc, "mode").value_or("sim");
    const std::vector<Vec3> targets =
        parse_cells_text(field(desc, "targets").value_or(""));
    if (targets.empty()) return "terminal(failed)";
    int toggles = 0;
    for (const TranscriptAction& act : transcript) {
        if (act.accepted && act.kind == "ToggleAction") ++toggles;
    }
    if (mode == "sim") {
        const Vec3 mine =
            targets[static_cast<std::size_t>(agent_index) % targets.size()];
        if (toggles >= 1) return "terminal(succeeded)";
        if (!lens.position_known || manhattan(lens.position, mine) > 3) {
            return nav_to(mine);
        }
        return action_text("ToggleAction", vec_args(mine));
    }
    if (toggles >= static_cast<int>(targets.size())) {
        return "terminal(succeeded)";
    }
    if (!lens.position_known || manhattan(lens.position, targets[0]) > 3) {
        return nav_to(targets[0]);
    }
    return action_text("ToggleAction", vec_args(targets[static_cast<std::size_t>(toggles)]));
}

std::string react_relocate(const std::string& desc, const AgentLens& lens,
                           const std::vector<TranscriptAction>& transcript) {
    const std::string item = field(desc, "item").value_or("");
    const auto from = parse_vec_text(field(desc, "from").value_or(""));
    const auto to = parse_vec_text(field(desc, "to").value_or(""));
    if (item.empty() || !from || !to) return "terminal(failed)";
    if (!did(transcript, "withdrawItem")) {
        if (!lens.position_known || manhattan(lens.position, *from) > 3) {
            return nav_to(*from);
        }
        std::vector<std::string> args = vec_args(*from);
        args.push_back(item);
        args.push_back("1");
        return action_text("withdrawItem", args);
    }
    if (!did(transcript, "placeBlock")) {
        std::vector<std::string> args{item};
        const std::vector<std::string> pos = vec_args(*to);
        args.insert(args.end(), pos.begin(), pos.end());
        return action_text("placeBlock", args);
    }
    return "terminal(succeeded)";
}

std::string react_courier(const std::string& desc, const AgentLens& lens,
                          const std::vector<EnvRecord>& env,
                          const std::vector<TranscriptAction>& transcript) {
    const std::string item = field(desc, "item").value_or("");
    const auto from = parse_vec_text(field(desc, "from").value_or(""));
    std::string receiver = field(desc, "to_agent").value_or("");
    if (item.empty() || !from || receiver.empty()) return "terminal(failed)";
    if (!did(transcript, "withdrawItem")) {
        if (!lens.position_known || manhattan(lens.position, *from) > 3) {
            return nav_to(*from);
        }
        std::vector<std::string> args = vec_args(*from);
        args.push_back(item);
        args.push_back("1");
        return action_text("withdrawItem", args);
    }
    if (!did(transcript, "handoverBlock")) {
        std::optional<Vec3> other;
        for (const EnvRecord& rec : env) {
            if (rec.kind == "agent" && rec.subject == receiver) {
                other = rec.position;
                break;
            }
        }
        if (!other) return "terminal(failed)";
        if (manhattan(lens.position, *other) > 2) return nav_to(*other);
        return action_text("handoverBlock", {receiver, item, "1"});
    }
    return "terminal(succeeded)";
}

std::string react_deposit(const std::string& desc,
                          const std::vector<TranscriptAction>& transcript) {
    const std::string item = field(desc, "item").value_or("");
    const auto to = parse_vec_text(field(desc, "to").value_or(""));
    if (item.empty() || !to) return "terminal(failed)";
    if (!did(transcript, "placeBlock")) {
        std::vector<std::string> args{item};
        const std::vector<std::string> pos = vec_args(*to);
        args.insert(args.end(), pos.begin(), pos.end());
        return action_text("placeBlock", args);
    }
    return "terminal(succeeded)";
}

std::string react_mine(const std::string& desc,
                       const std::vector<TranscriptAction>& transcript) {
    std::vector<Vec3> cells = parse_cells_text(field(desc, "cells").value_or(""));
    if (cells.empty()) return "terminal(failed)";
    std::set<Vec3> mined;
    for (const TranscriptAction& act : transcript) {
        if (act.accepted && act.kind == "MineBlock" && act.args.size() >= 3) {
            try {
                mined.insert(Vec3{std::stoi(act.args[0]), std::stoi(act.args[1]),
                                  std::stoi(act.args[2])});
            } catch (...) {
            }
        }
    }
    std::erase_if(cells, [&](const Vec3& c) { return mined.count(c) != 0; });
    if (cells.empty()) return "terminal(succeeded)";
    std::ranges::sort(cells);
    return action_text("MineBlock", vec_args(cells.front()));
}

std::string rule_react(const PlannerRequest& request) {
    const std::string desc = request.slot("node_description");
    const std::vector<EnvRecord> env = parse_env(request.slot_or("env", ""));
    const std::vector<TranscriptAction> transcript =
        parse_transcript(request.slot_or("transcript", ""));
    const AgentLens lens(request.slot("agent"), env, transcript);
    int agent_index = 0;
    try {
        agent_index = std::stoi(request.slot_or("agent_index", "0"));
    } catch (...) {
    }

    if (desc.rfind("place material=", 0) == 0) {
        return react_place(desc, lens, env, transcript);
    }
    if (desc.rfind("fetch material=", 0) == 0) {
        return react_fetch(desc, lens, env, transcript);
    }
    if (desc.rfind("gather ", 0) == 0) return react_gather(desc, lens, transcript);
    if (desc.rfind("hunt ", 0) == 0) return react_hunt(desc, lens, env, transcript);
    if (desc.rfind("smelt ", 0) == 0) {
        return react_process(desc, true, lens, transcript);
    }
    if (desc.rfind("craft ", 0) == 0) {
        return react_process(desc, false, lens, transcript);
    }
    if (desc.rfind("press ", 0) == 0) {
        return react_press(desc, agent_index, lens, transcript);
    }
    if (desc.rfind("relocate ", 0) == 0) {
        return react_relocate(desc, lens, transcript);
    }
    if (desc.rfind("courier ", 0) == 0) {
        return react_courier(desc, lens, env, transcript);
    }
    if (desc.rfind("deposit ", 0) == 0) return react_deposit(desc, transcript);
    if (desc.rfind("mine ", 0) == 0) return react_mine(desc, transcript);
    return "terminal(failed)";
}

std::string rule_reflect(const PlannerRequest& request) {
    const std::vector<TranscriptAction> history =
        parse_transcript(request.slot_or("history", ""));
    const std::string claim = request.slot_or("claim", "");
    std::string out;
    if (history.empty()) {
        out = "no actions taken";
    } else {
        std::map<std::string, int> kinds;
        for (const TranscriptAction& act : history) ++kinds[act.kind];
        out = "actions:";
        for (const auto& [kind, count] : kinds) {
            out += " " + kind + "x" + std::to_string(count);
        }
        out += "; last: " + history.back().observation;
    }
    if (!claim.empty()) {
        out = (claim == "succeeded" ? "task completed; " : "task failed; ") + out;
    } else if (!history.empty() && history.back().accepted) {
        out = "task completed; " + out;
    }
    return out;
}

long approx_tokens(const std::string& text) {
    return static_cast<long>(text.size() / 4) + 1;
}

}  // namespace

PlannerReply ScriptedBackend::complete(const PlannerRequest& request) {
    calls_.fetch_add(1);
    std::string text;
    switch (request.template_id) {
        case TemplateId::decompose:
            if (decompose_faults_.fetch_sub(1) > 0) {
                text = "I am sorry, I cannot structure this task right now.";
            } else {
                decompose_faults_.store(0);
                text = rule_decompose(request);
            }
            break;
        case TemplateId::redecompose:
            text = rule_redecompose(request);
            break;
        case TemplateId::allocate:
            if (allocation_faults_.fetch_sub(1) > 0) {
                text = "Let me think about who should do what...";
            } else {
                allocation_faults_.store(0);
                text = rule_allocate(request);
            }
            break;
        case TemplateId::agent_state_update:
            text = rule_agent_state_update(request);
            break;
        case TemplateId::env_retrieve:
            text = rule_env_retrieve(request);
            break;
        case TemplateId::react:
            text = rule_react(request);
            break;
        case TemplateId::reflect:
            text = rule_reflect(request);
            break;
    }
    PlannerReply reply;
    reply.text = std::move(text);
    long prompt = 0;
    for (const auto& [key, value] : request.slots) {
        prompt += approx_tokens(key) + approx_tokens(value);
    }
    reply.usage.prompt_tokens = prompt;
    reply.usage.completion_tokens = approx_tokens(reply.text);
    return reply;
}

}  // namespace dagcrew::planner
