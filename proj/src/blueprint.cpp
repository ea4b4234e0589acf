#include "dagcrew/blueprint.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dagcrew::worldsim {

using nlohmann::json;

std::string to_string(Facing f) {
    switch (f) {
        case Facing::none:  return "none";
        case Facing::north: return "N";
        case Facing::south: return "S";
        case Facing::east:  return "E";
        case Facing::west:  return "W";
    }
    return "none";
}

std::string to_string(Axis a) {
    switch (a) {
        case Axis::none: return "none";
        case Axis::x:    return "x";
        case Axis::y:    return "y";
        case Axis::z:    return "z";
    }
    return "none";
}

Facing facing_from_string(const std::string& s) {
    if (s == "N" || s == "north") return Facing::north;
    if (s == "S" || s == "south") return Facing::south;
    if (s == "E" || s == "east") return Facing::east;
    if (s == "W" || s == "west") return Facing::west;
    if (s == "None" || s == "none" || s.empty()) return Facing::none;
    throw ParseError("unknown facing token: " + s);
}

Axis axis_from_string(const std::string& s) {
    if (s == "x") return Axis::x;
    if (s == "y") return Axis::y;
    if (s == "z") return Axis::z;
    if (s == "None" || s == "none" || s.empty()) return Axis::none;
    throw ParseError("unknown axis token: " + s);
}

bool known_material(const std::string& name) {
    static const std::set<std::string> vocabulary = {
        "grass_block", "dirt", "stone", "cobblestone", "sandstone", "glass",
        "oak_log", "oak_planks", "oak_trapdoor", "oak_door", "oak_fence",
        "oak_stairs", "oak_slab", "oxeye_daisy", "poppy", "dandelion",
        "torch", "chest", "furnace", "crafting_table", "redstone_block",
        "lever", "stone_button", "oak_pressure_plate", "stone_bricks",
        "white_wool", "red_wool", "quartz_block", "bookshelf", "hay_block",
        "pumpkin", "melon", "iron_block", "gold_block", "sign",
    };
    return vocabulary.count(name) != 0;
}

std::vector<BlockSpec> Blueprint::cells() const {
    std::vector<BlockSpec> out;
    for (const BlueprintEntry& e : entries) {
        for (const Vec3& p : e.positions) {
            out.push_back({p, e.material, e.facing, e.axis});
        }
    }
    return out;
}

std::map<std::string, int> Blueprint::material_counts() const {
    std::map<std::string, int> counts;
    for (const BlueprintEntry& e : entries) {
        counts[e.material] += static_cast<int>(e.positions.size());
    }
    return counts;
}

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int lineno;

    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError("blueprint line " + std::to_string(lineno) + ": " + why);
    }

    void skip_ws() {
        while (pos < text.size() &&
               (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                text[pos] == '[' || text[pos] == ']' || text[pos] == ',')) {
            // Brackets around the whole line and between position triples are
            // decorative; the keyword structure carries the meaning.
            if (text.compare(pos, 10, "positions:") == 0) break;
            ++pos;
        }
    }

    bool at_keyword(const std::string& kw) const {
        return text.compare(pos, kw.size(), kw) == 0;
    }

    std::string read_token() {
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t' &&
               text[pos] != ']' && text[pos] != '[' && text[pos] != ',' &&
               text[pos] != '\n') {
            ++pos;
        }
        return text.substr(start, pos - start);
    }
};

std::vector<int> read_numbers(const std::string& text, std::size_t& pos,
                              std::size_t count, Cursor& cur) {
    std::vector<int> nums;
    while (nums.size() < count && pos < text.size()) {
        while (pos < text.size() &&
               (text[pos] == ' ' || text[pos] == ',' || text[pos] == '[')) {
            ++pos;
        }
        if (pos >= text.size()) break;
        if (text[pos] == ']') cur.fail("expected a coordinate number");
        std::size_t start = pos;
        if (text[pos] == '-' || text[pos] == '+') ++pos;
        while (pos < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (pos == start) cur.fail("malformed coordinate");
        nums.push_back(std::stoi(text.substr(start, pos - start)));
    }
    if (nums.size() < count) cur.fail("truncated coordinate triple");
    return nums;
}

Vec3 read_triple(const std::string& text, std::size_t& pos, Cursor& cur) {
    const std::vector<int> n = read_numbers(text, pos, 3, cur);
    while (pos < text.size() && (text[pos] == ']' || text[pos] == ' ')) {
        if (text[pos] == ']') {
            ++pos;
            break;
        }
        ++pos;
    }
    return {n[0], n[1], n[2]};
}

std::vector<Vec3> expand_box(const Vec3& a, const Vec3& b) {
    std::vector<Vec3> cells;
    const Vec3 lo{std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
    const Vec3 hi{std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
    for (int x = lo.x; x <= hi.x; ++x) {
        for (int y = lo.y; y <= hi.y; ++y) {
            for (int z = lo.z; z <= hi.z; ++z) cells.push_back({x, y, z});
        }
    }
    return cells;
}

std::vector<Vec3> read_positions(const std::string& text, std::size_t& pos,
                                 Cursor& cur) {
    // Expects the region after "positions:" — either start/end box syntax
    // or a sequence of [x y z] triples, terminated by the next keyword or
    // end of line.
    std::vector<Vec3> out;
    while (pos < text.size()) {
        while (pos < text.size() &&
               (text[pos] == ' ' || text[pos] == '[' || text[pos] == ']' ||
                text[pos] == ',')) {
            ++pos;
        }
        if (pos >= text.size()) break;
        if (text.compare(pos, 6, "start:") == 0) {
            pos += 6;
            const Vec3 a = read_triple(text, pos, cur);
            while (pos < text.size() && text.compare(pos, 4, "end:") != 0) ++pos;
            if (pos >= text.size()) cur.fail("box start without end");
            pos += 4;
            const Vec3 b = read_triple(text, pos, cur);
            const std::vector<Vec3> cells = expand_box(a, b);
            out.insert(out.end(), cells.begin(), cells.end());
        } else if (text[pos] == '-' || text[pos] == '+' ||
                   std::isdigit(static_cast<unsigned char>(text[pos]))) {
            out.push_back(read_triple(text, pos, cur));
        } else {
            break;  // next keyword (e.g. another material group)
        }
    }
    return out;
}

}  // namespace

Blueprint load_blueprint_lines(const std::vector<std::string>& lines) {
    Blueprint bp;
    int lineno = 0;
    for (const std::string& line : lines) {
        ++lineno;
        Cursor cur{line, 0, lineno};
        std::size_t pos = 0;
        while ((pos = line.find("material:", pos)) != std::string::npos) {
            pos += 9;
            cur.pos = pos;
            BlueprintEntry entry;
            entry.material = cur.read_token();
            if (!known_material(entry.material)) {
                cur.fail("unknown material token '" + entry.material + "'");
            }
            pos = cur.pos;
            const std::size_t group_end = line.find("material:", pos);
            // Scan this group's keywords up to the next material group.
            std::size_t facing_at = line.find("facing:", pos);
            if (facing_at != std::string::npos && facing_at < group_end) {
                cur.pos = facing_at + 7;
                while (cur.pos < line.size() && line[cur.pos] == ' ') ++cur.pos;
                entry.facing = facing_from_string(cur.read_token());
            }
            std::size_t axis_at = line.find("axis:", pos);
            if (axis_at != std::string::npos && axis_at < group_end) {
                cur.pos = axis_at + 5;
                while (cur.pos < line.size() && line[cur.pos] == ' ') ++cur.pos;
                entry.axis = axis_from_string(cur.read_token());
            }
            std::size_t pos_at = line.find("positions:", pos);
            std::size_t pos_kw_len = 10;
            if (pos_at == std::string::npos || pos_at >= group_end) {
                pos_at = line.find("position:", pos);
                pos_kw_len = 9;
            }
            if (pos_at == std::string::npos || pos_at >= group_end) {
                cur.fail("material group without positions");
            }
            std::size_t scan = pos_at + pos_kw_len;
            entry.positions = read_positions(line, scan, cur);
            if (entry.positions.empty()) cur.fail("empty position list");
            bp.entries.push_back(std::move(entry));
            pos = group_end == std::string::npos ? line.size() : group_end;
        }
    }
    return bp;
}

Blueprint load_blueprint_document(const json& document) {
    if (!document.is_object() || document.empty()) {
        throw ParseError("blueprint document must be an object of task lines");
    }
    std::vector<std::string> lines;
    for (const auto& line : document.begin().value()) {
        lines.push_back(line.get<std::string>());
    }
    return load_blueprint_lines(lines);
}

void RecipeBook::add(Recipe recipe) {
    const std::string name = recipe.result;
    recipes_[name] = std::move(recipe);
    // Reject cycles as soon as they would close.
    try {
        depth(name);
    } catch (const WorldError&) {
        recipes_.erase(name);
        throw;
    }
}

const Recipe& RecipeBook::recipe(const std::string& item) const {
    auto it = recipes_.find(item);
    if (it == recipes_.end()) throw WorldError("no recipe for item: " + item);
    return it->second;
}

int RecipeBook::depth(const std::string& item) const {
    std::set<std::string> visiting;
    auto rec = [&](auto&& self, const std::string& name) -> int {
        auto it = recipes_.find(name);
        if (it == recipes_.end()) return 1;  // raw world item
        if (!visiting.insert(name).second) {
            throw WorldError("recipe cycle through item: " + name);
        }
        int deepest = 0;
        for (const auto& [ingredient, count] : it->second.ingredients) {
            (void)count;
            deepest = std::max(deepest, self(self, ingredient));
        }
        visiting.erase(name);
        return deepest + 1;
    };
    return rec(rec, item);
}

Recipe load_recipe(const json& document) {
    Recipe r;
    r.result = document.at("result").at("name").get<std::string>();
    r.result_count = document.at("result").value("count", 1);
    if (r.result_count < 1) throw ParseError("recipe result count must be >= 1");
    for (const auto& ing : document.at("ingredients")) {
        const int count = ing.value("count", 1);
        if (count < 1) throw ParseError("recipe ingredient count must be >= 1");
        r.ingredients.emplace_back(ing.at("name").get<std::string>(), count);
    }
    const std::string station = document.value("station", "none");
    if (station == "crafting") {
        r.station = Recipe::Station::crafting;
    } else if (station == "smelting") {
        r.station = Recipe::Station::smelting;
    } else if (station == "none") {
        r.station = Recipe::Station::none;
    } else {
        throw ParseError("unknown recipe station: " + station);
    }
    return r;
}

}  // namespace dagcrew::worldsim
