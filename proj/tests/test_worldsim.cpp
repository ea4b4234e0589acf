#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <thread>

#include "dagcrew/tasklib.hpp"
#include "dagcrew/worldsim.hpp"

using namespace dagcrew;
using namespace dagcrew::worldsim;
using nlohmann::json;

namespace {

ActionRequest act(const std::string& agent, const std::string& kind,
                  std::initializer_list<std::string> args) {
    return ActionRequest{agent, kind, args};
}

std::vector<std::string> vec_args(const Vec3& v) {
    return {std::to_string(v.x), std::to_string(v.y), std::to_string(v.z)};
}

RecipeBook stew_book() {
    RecipeBook book;
    const json doc = harness::cooking_document("rabbit_stew");
    for (const json& r : doc.at("recipes")) book.add(load_recipe(r));
    return book;
}

World basic_world() {
    World world(1);
    world.set_ground(-61);
    world.set_arena({-64, -64, -64}, {200, 0, 200});
    return world;
}

EscapeSpec plate_room(int plates, Tick window) {
    EscapeSpec spec;
    spec.window = window;
    EscapeRoom room;
    room.index = 0;
    room.atom = "simultaneous_plates";
    room.center = {130, -60, 130};
    EscapeCondition cond;
    cond.kind = ConditionKind::simultaneous;
    for (int i = 0; i < plates; ++i) {
        const Vec3 cell{128 + 2 * i, -60, 130};
        room.activators.emplace_back(cell, ActivatorKind::pressure_plate);
        cond.cells.push_back(cell);
    }
    room.conditions.push_back(cond);
    room.required_actors = plates;
    room.sign = {130, -60, 126};
    room.hint = "press the plates together";
    spec.rooms.push_back(room);
    spec.exit = {130, -60, 140};
    return spec;
}

/// Presses a plate at (as close as possible to) the requested tick and
/// returns the actual effect tick.
Tick press_at(World& world, const std::string& agent, const Vec3& plate,
              Tick when) {
    if (when - 1 > world.clock()) world.tick(when - 1 - world.clock());
    world.begin_round();
    const ActionResult r = world.apply_action(
        ActionRequest{agent, "ToggleAction", vec_args(plate)});
    REQUIRE(r.accepted);
    return r.tick;
}

}  // namespace

TEST_CASE("the flower-plot blueprint parses with every cell in place") {
    const Blueprint bp =
        load_blueprint_document(harness::construction_document("task_24"));
    const std::vector<BlockSpec> cells = bp.cells();
    // 3 grass + 6 trapdoors + 3 flowers
    CHECK(cells.size() == 12);
    const BlockSpec daisy{{-9, -59, 0}, "oxeye_daisy", Facing::none, Axis::none};
    CHECK(std::count(cells.begin(), cells.end(), daisy) == 1);
    const BlockSpec east_door{{-8, -60, -1}, "oak_trapdoor", Facing::east,
                              Axis::none};
    CHECK(std::count(cells.begin(), cells.end(), east_door) == 1);
    const auto counts = bp.material_counts();
    CHECK(counts.at("grass_block") == 3);
    CHECK(counts.at("oak_trapdoor") == 6);
}

TEST_CASE("a single-position line yields one entry with one cell") {
    const Blueprint bp = load_blueprint_lines(
        {"[material:stone facing: None position:[1 -60 2]]"});
    REQUIRE(bp.entries.size() == 1);
    CHECK(bp.entries[0].positions == std::vector<Vec3>{{1, -60, 2}});
}

TEST_CASE("boxes expand to the full cell grid") {
    const Blueprint bp = load_blueprint_lines(
        {"[material:stone facing: None positions:[start:[0 -60 0] end:[1 -60 1]]]"});
    REQUIRE(bp.entries.size() == 1);
    // Independent enumeration of the 2x1x2 box.
    std::set<Vec3> expect;
    for (int x = 0; x <= 1; ++x) {
        for (int z = 0; z <= 1; ++z) expect.insert({x, -60, z});
    }
    const std::set<Vec3> got(bp.entries[0].positions.begin(),
                             bp.entries[0].positions.end());
    CHECK(got == expect);
}

TEST_CASE("unknown material tokens name the offending line") {
    CHECK_THROWS_WITH_AS(
        load_blueprint_lines({"[material:stone facing: None position:[0 -60 0]]",
                              "[material:unobtainium position:[1 -60 0]]"}),
        doctest::Contains("line 2"), ParseError);
}

TEST_CASE("recipe loading validates counts and rejects cycles") {
    RecipeBook book = stew_book();
    CHECK(book.recipe("rabbit_stew").ingredients.size() == 5);
    CHECK(book.depth("carrot") == 1);        // raw
    CHECK(book.depth("baked_potato") == 2);  // one smelt
    CHECK(book.depth("bowl") == 3);          // log -> planks -> bowl

    Recipe a{"a", 1, {{"b", 1}}, Recipe::Station::none};
    Recipe b{"b", 1, {{"a", 1}}, Recipe::Station::none};
    RecipeBook cyclic;
    cyclic.add(a);
    CHECK_THROWS_WITH_AS(cyclic.add(b), doctest::Contains("cycle"), WorldError);
}

TEST_CASE("placing a block consumes inventory and needs support") {
    World world = basic_world();
    world.add_container({0, -60, 0}, {{"grass_block", 2}});
    world.add_agent("Alice", {0, -60, 1});
    REQUIRE(world
                .apply_action(act("Alice", "withdrawItem",
                                  {"0", "-60", "0", "grass_block", "2"}))
                .accepted);

    SUBCASE("ground-adjacent cell accepts and decrements") {
        const ActionResult r = world.apply_action(
            act("Alice", "placeBlock", {"grass_block", "2", "-60", "2"}));
        CHECK(r.accepted);
        CHECK(world.agent("Alice").inventory.at("grass_block") == 1);
        CHECK(world.blocks().count({2, -60, 2}) == 1);
    }
    SUBCASE("occupied cells reject and leave the world unchanged") {
        REQUIRE(world
                    .apply_action(act("Alice", "placeBlock",
                                      {"grass_block", "2", "-60", "2"}))
                    .accepted);
        const json before = world.snapshot();
        const ActionResult r = world.apply_action(
            act("Alice", "placeBlock", {"grass_block", "2", "-60", "2"}));
        CHECK_FALSE(r.accepted);
        CHECK(r.observation.find("occupied") != std::string::npos);
        json after = world.snapshot();
        // Time advances even for a rejected attempt; everything else is equal.
        after["agents"]["Alice"]["tick"] = before["agents"]["Alice"]["tick"];
        after["agents"]["Alice"]["busy"] = before["agents"]["Alice"]["busy"];
        after["clock"] = before["clock"];
        CHECK(after == before);
    }
    SUBCASE("floating cells reject for lack of support") {
        const ActionResult r = world.apply_action(
            act("Alice", "placeBlock", {"grass_block", "2", "-50", "2"}));
        CHECK_FALSE(r.accepted);
        CHECK(r.observation.find("support") != std::string::npos);
    }
    SUBCASE("stacking works cell by cell") {
        REQUIRE(world
                    .apply_action(act("Alice", "placeBlock",
                                      {"grass_block", "2", "-60", "2"}))
                    .accepted);
        CHECK(world
                  .apply_action(act("Alice", "placeBlock",
                                    {"grass_block", "2", "-59", "2"}))
                  .accepted);
    }
}

TEST_CASE("crafting the stew needs all five ingredients and no station") {
    World world = basic_world();
    world.set_recipes(stew_book());
    world.add_agent("Alice", {0, -60, 0});
    world.add_container({1, -60, 0},
                        {{"baked_potato", 1},
                         {"cooked_rabbit", 1},
                         {"bowl", 1},
                         {"carrot", 1},
                         {"brown_mushroom", 1}});

    SUBCASE("with everything within reach the craft is accepted") {
        const ActionResult r =
            world.apply_action(act("Alice", "craftBlock", {"rabbit_stew"}));
        CHECK(r.accepted);
        CHECK(world.agent("Alice").inventory.at("rabbit_stew") == 1);
        CHECK(world.containers().at({1, -60, 0}).empty());
    }
    SUBCASE("out-of-reach ingredients reject the craft") {
        REQUIRE(world
                    .apply_action(act("Alice", "withdrawItem",
                                      {"1", "-60", "0", "carrot", "1"}))
                    .accepted);
        REQUIRE(world.apply_action(act("Alice", "navigateTo", {"20", "-60", "0"}))
                    .accepted);
        const ActionResult r =
            world.apply_action(act("Alice", "craftBlock", {"rabbit_stew"}));
        // Alice carries only the carrot here; the rest is out of reach.
        CHECK_FALSE(r.accepted);
        CHECK(r.observation.find("missing ingredients") != std::string::npos);
    }
    SUBCASE("smelting requires the furnace nearby") {
        world.add_container({2, -60, 0}, {{"potato", 1}});
        const ActionResult no_furnace =
            world.apply_action(act("Alice", "SmeltingCooking", {"baked_potato"}));
        CHECK_FALSE(no_furnace.accepted);
        world.add_block({0, -60, 1}, Block{"furnace"});
        const ActionResult with_furnace =
            world.apply_action(act("Alice", "SmeltingCooking", {"baked_potato"}));
        CHECK(with_furnace.accepted);
        CHECK(world.agent("Alice").inventory.at("baked_potato") == 1);
    }
    SUBCASE("smelted goods cannot be crafted and vice versa") {
        world.add_container({2, -60, 0}, {{"potato", 1}});
        world.add_block({0, -60, 1}, Block{"furnace"});
        CHECK_FALSE(world.apply_action(act("Alice", "craftBlock", {"baked_potato"}))
                        .accepted);
        CHECK_FALSE(
            world.apply_action(act("Alice", "SmeltingCooking", {"rabbit_stew"}))
                .accepted);
    }
}

TEST_CASE("mining moves a block into the miner's inventory") {
    World world = basic_world();
    world.add_block({3, -60, 3}, Block{"stone"});
    world.add_agent("Alice", {0, -60, 0});
    const ActionResult r =
        world.apply_action(act("Alice", "MineBlock", {"3", "-60", "3"}));
    CHECK(r.accepted);
    CHECK(world.blocks().count({3, -60, 3}) == 0);
    CHECK(world.agent("Alice").inventory.at("stone") == 1);
    CHECK_FALSE(
        world.apply_action(act("Alice", "MineBlock", {"3", "-60", "3"})).accepted);
}

TEST_CASE("navigation costs one tick per action plus the travelled distance") {
    World world = basic_world();
    world.add_agent("Alice", {0, -60, 0});
    const ActionResult r =
        world.apply_action(act("Alice", "navigateTo", {"3", "-60", "4"}));
    CHECK(r.accepted);
    CHECK(r.tick == 8);  // 1 + 3 + 0 + 4
    CHECK(world.agent_tick("Alice") == 8);
    CHECK(world.busy_ticks("Alice") == 8);
    CHECK(world.clock() == 8);
    CHECK_FALSE(
        world.apply_action(act("Alice", "navigateTo", {"999", "0", "0"})).accepted);
}

TEST_CASE("capability gates reject actions outside an agent's set") {
    World world = basic_world();
    world.add_agent("Limited", {0, -60, 0}, {"navigateTo"});
    const ActionResult r = world.apply_action(
        act("Limited", "placeBlock", {"stone", "1", "-60", "0"}));
    CHECK_FALSE(r.accepted);
    CHECK(r.observation.find("capabilities") != std::string::npos);
    CHECK(world.apply_action(act("Limited", "navigateTo", {"1", "-60", "0"}))
              .accepted);
}

TEST_CASE("withdraw and store respect the container range") {
    World world = basic_world();
    world.add_container({10, -60, 10}, {{"carrot", 3}});
    world.add_agent("Alice", {0, -60, 0});
    CHECK_FALSE(world
                    .apply_action(act("Alice", "withdrawItem",
                                      {"10", "-60", "10", "carrot", "1"}))
                    .accepted);
    REQUIRE(world.apply_action(act("Alice", "navigateTo", {"10", "-60", "9"}))
                .accepted);
    CHECK(world
              .apply_action(act("Alice", "withdrawItem",
                                {"10", "-60", "10", "carrot", "2"}))
              .accepted);
    CHECK_FALSE(world
                    .apply_action(act("Alice", "withdrawItem",
                                      {"10", "-60", "10", "carrot", "5"}))
                    .accepted);
    CHECK(world
              .apply_action(act("Alice", "storeItem",
                                {"10", "-60", "10", "carrot", "1"}))
              .accepted);
    CHECK(world.agent("Alice").inventory.at("carrot") == 1);
    CHECK(world.containers().at({10, -60, 10}).at("carrot") == 2);
}

TEST_CASE("handover needs both agents within range two") {
    World world = basic_world();
    world.add_agent("Alice", {0, -60, 0});
    world.add_agent("Bob", {8, -60, 0});
    world.add_container({0, -60, 1}, {{"stone", 1}});
    REQUIRE(world
                .apply_action(
                    act("Alice", "withdrawItem", {"0", "-60", "1", "stone", "1"}))
                .accepted);
    CHECK_FALSE(
        world.apply_action(act("Alice", "handoverBlock", {"Bob", "stone", "1"}))
            .accepted);
    REQUIRE(world.apply_action(act("Alice", "navigateTo", {"7", "-60", "0"}))
                .accepted);
    CHECK(world.apply_action(act("Alice", "handoverBlock", {"Bob", "stone", "1"}))
              .accepted);
    CHECK(world.agent("Bob").inventory.at("stone") == 1);
    CHECK(world.agent("Alice").inventory.count("stone") == 0);
}

TEST_CASE("attack drops and entity interactions") {
    World world = basic_world();
    world.add_agent("Alice", {0, -60, 0});
    world.add_entity({"rabbit", {5, -60, 0}, "raw_rabbit", 1});
    world.add_entity({"cow", {2, -60, 0}, "", 0});
    world.add_interaction("bucket", "cow", "milk_bucket");
    world.add_container({0, -60, 1}, {{"bucket", 1}});

    CHECK(world.apply_action(act("Alice", "attackTarget", {"rabbit"})).accepted);
    CHECK(world.agent("Alice").inventory.at("raw_rabbit") == 1);
    CHECK(world.entities().size() == 1);
    CHECK_FALSE(world.apply_action(act("Alice", "attackTarget", {"rabbit"}))
                    .accepted);

    REQUIRE(world
                .apply_action(
                    act("Alice", "withdrawItem", {"0", "-60", "1", "bucket", "1"}))
                .accepted);
    CHECK(world.apply_action(act("Alice", "UseItemOnEntity", {"bucket", "cow"}))
              .accepted);
    CHECK(world.agent("Alice").inventory.at("milk_bucket") == 1);
    CHECK(world.agent("Alice").inventory.count("bucket") == 0);
}

TEST_CASE("ladder actions are accepted no-ops and unknown kinds reject") {
    World world = basic_world();
    world.add_agent("Alice", {0, -60, 0});
    const json before = world.snapshot();
    CHECK(world.apply_action(act("Alice", "erectDirtLadder", {"0", "-59", "0"}))
              .accepted);
    CHECK(world
              .apply_action(act("Alice", "dismantleDirtLadder", {"0", "-59", "0"}))
              .accepted);
    CHECK_FALSE(world.apply_action(act("Alice", "flyToTheMoon", {})).accepted);
    json after = world.snapshot();
    after["agents"]["Alice"]["tick"] = before["agents"]["Alice"]["tick"];
    after["agents"]["Alice"]["busy"] = before["agents"]["Alice"]["busy"];
    after["clock"] = before["clock"];
    CHECK(after == before);
}

TEST_CASE("item totals change only through the sanctioned channels") {
    std::mt19937 rng(123);
    World world = basic_world();
    world.set_recipes(stew_book());
    world.add_block({1, -60, 0}, Block{"furnace"});
    world.add_block({-1, -60, 0}, Block{"crafting_table"});
    world.add_container({0, -60, 0},
                        {{"potato", 4}, {"oak_log", 3}, {"carrot", 2}});
    world.add_container({0, -60, 2}, {{"brown_mushroom", 2}, {"stone", 5}});
    world.add_block({5, -60, 5}, Block{"stone"});
    world.add_entity({"rabbit", {4, -60, 0}, "raw_rabbit", 1});
    world.add_agent("Alice", {0, -60, 1});
    world.add_agent("Bob", {0, -60, 3});

    const std::vector<std::string> agents = {"Alice", "Bob"};
    for (int step = 0; step < 400; ++step) {
        const std::string& who = agents[rng() % agents.size()];
        ActionRequest request;
        switch (rng() % 10) {
            case 0:
                request = act(who, "navigateTo",
                              {std::to_string((int)(rng() % 8)), "-60",
                               std::to_string((int)(rng() % 8))});
                break;
            case 1:
                request = act(who, "withdrawItem", {"0", "-60", "0", "potato", "1"});
                break;
            case 2:
                request = act(who, "withdrawItem", {"0", "-60", "2", "stone", "1"});
                break;
            case 3:
                request = act(who, "storeItem", {"0", "-60", "0", "potato", "1"});
                break;
            case 4:
                request = act(who, "placeBlock",
                              {"stone", std::to_string((int)(rng() % 8)), "-60",
                               std::to_string((int)(rng() % 8))});
                break;
            case 5:
                request = act(who, "MineBlock",
                              {std::to_string((int)(rng() % 8)), "-60",
                               std::to_string((int)(rng() % 8))});
                break;
            case 6:
                request = act(who, "SmeltingCooking", {"baked_potato"});
                break;
            case 7:
                request = act(who, "craftBlock", {"oak_planks"});
                break;
            case 8:
                request = act(who, "attackTarget", {"rabbit"});
                break;
            default:
                request = act(who, "handoverBlock",
                              {who == "Alice" ? "Bob" : "Alice", "potato", "1"});
                break;
        }
        const std::map<std::string, int> before = world.item_totals();
        const ActionResult result = world.apply_action(request);
        const std::map<std::string, int> after = world.item_totals();
        CAPTURE(step);
        CAPTURE(request.kind);
        if (!result.accepted) {
            CHECK(after == before);
            continue;
        }
        if (request.kind == "MineBlock") {
            std::map<std::string, int> expect = before;
            const std::string mined =
                result.observation.substr(6, result.observation.find(" at") - 6);
            expect[mined] += 1;
            CHECK(after == expect);
        } else if (request.kind == "placeBlock") {
            std::map<std::string, int> expect = before;
            if (--expect[request.args[0]] == 0) expect.erase(request.args[0]);
            CHECK(after == expect);
        } else if (request.kind == "SmeltingCooking") {
            std::map<std::string, int> expect = before;
            expect["baked_potato"] += 1;
            if (--expect["potato"] == 0) expect.erase("potato");
            CHECK(after == expect);
        } else if (request.kind == "craftBlock") {
            std::map<std::string, int> expect = before;
            expect["oak_planks"] += 4;
            if (--expect["oak_log"] == 0) expect.erase("oak_log");
            CHECK(after == expect);
        } else if (request.kind == "attackTarget") {
            std::map<std::string, int> expect = before;
            expect["raw_rabbit"] += 1;
            CHECK(after == expect);
        } else {
            // Navigation, container moves and handovers conserve totals.
            CHECK(after == before);
        }
    }
}

TEST_CASE("identical seeds and action sequences reproduce identical worlds") {
    auto build = [] {
        World world(77);
        world.set_ground(-61);
        world.set_arena({-32, -64, -32}, {32, 0, 32});
        world.add_container({0, -60, 0}, {{"stone", 8}});
        world.add_agent("Alice", {0, -60, 1});
        world.add_agent("Bob", {2, -60, 1});
        return world;
    };
    const std::vector<ActionRequest> script = {
        act("Alice", "withdrawItem", {"0", "-60", "0", "stone", "4"}),
        act("Bob", "navigateTo", {"1", "-60", "1"}),
        act("Alice", "placeBlock", {"stone", "3", "-60", "3"}),
        act("Bob", "withdrawItem", {"0", "-60", "0", "stone", "2"}),
        act("Alice", "placeBlock", {"stone", "3", "-59", "3"}),
        act("Bob", "placeBlock", {"stone", "4", "-60", "3"}),
        act("Alice", "handoverBlock", {"Bob", "stone", "1"}),
    };
    World a = build();
    World b = build();
    for (const ActionRequest& request : script) {
        const ActionResult ra = a.apply_action(request);
        const ActionResult rb = b.apply_action(request);
        CHECK(ra.accepted == rb.accepted);
        CHECK(ra.tick == rb.tick);
        CHECK(ra.observation == rb.observation);
        CHECK(a.snapshot() == b.snapshot());
    }
}

TEST_CASE("simultaneity window arithmetic on two plates") {
    SUBCASE("presses 100 ticks apart fire the condition") {
        World world = basic_world();
        world.install_escape(plate_room(2, 600));
        world.add_agent("Alice", {130, -60, 130});
        const Tick first = press_at(world, "Alice", {128, -60, 130}, 1);
        press_at(world, "Alice", {130, -60, 130}, first + 100);
        CHECK(world.escape_status()[0].met == 1);
        CHECK(world.escape_status()[0].passed);
    }
    SUBCASE("presses 700 ticks apart do not fire") {
        World world = basic_world();
        world.install_escape(plate_room(2, 600));
        world.add_agent("Alice", {130, -60, 130});
        const Tick first = press_at(world, "Alice", {128, -60, 130}, 1);
        press_at(world, "Alice", {130, -60, 130}, first + 700);
        world.tick(700);
        CHECK(world.escape_status()[0].met == 0);
        CHECK_FALSE(world.escape_status()[0].passed);
    }
    SUBCASE("tick requires a positive count") {
        World world = basic_world();
        CHECK_THROWS_AS(world.tick(0), WorldError);
    }
}

TEST_CASE("simultaneity agrees with an interval oracle on random schedules") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int plates = 2 + static_cast<int>(rng() % 2);
        const Tick window = 600;
        World world = basic_world();
        world.install_escape(plate_room(plates, window));
        world.add_agent("Alice", {130, -60, 130});

        const int presses = 2 + static_cast<int>(rng() % 5);
        std::vector<std::pair<Tick, int>> schedule;
        for (int i = 0; i < presses; ++i) {
            schedule.emplace_back(1 + static_cast<Tick>(rng() % 1500),
                                  static_cast<int>(rng() % plates));
        }
        std::ranges::sort(schedule);

        // Drive the world, logging the actual on-transitions per plate.
        std::map<int, std::vector<Tick>> ons;
        std::map<int, bool> powered;
        std::vector<Tick> toggle_times;
        for (const auto& [when, plate] : schedule) {
            const Vec3 cell{128 + 2 * plate, -60, 130};
            const Tick t = press_at(world, "Alice", cell, when);
            toggle_times.push_back(t);
            powered[plate] = !powered[plate];
            if (powered[plate]) ons[plate].push_back(t);
        }
        world.tick(window + 1);

        // Oracle: fired iff some toggle instant is covered by a held
        // interval of every plate.
        bool expect_fire = false;
        for (const Tick t : toggle_times) {
            bool all = true;
            for (int p = 0; p < plates; ++p) {
                bool held = false;
                for (const Tick on : ons[p]) {
                    if (on <= t && t - on <= window) held = true;
                }
                if (!held) all = false;
            }
            if (all) expect_fire = true;
        }
        CAPTURE(trial);
        CHECK(world.escape_status()[0].passed == expect_fire);
    }
}

TEST_CASE("escape generation is seeded and feasible") {
    SUBCASE("equal seeds produce equal specs") {
        const EscapeSpec a = generate_escape(7, 1, 2);
        const EscapeSpec b = generate_escape(7, 1, 2);
        CHECK(a.to_json() == b.to_json());
    }
    SUBCASE("a lone agent never faces multi-actor rooms") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            for (int difficulty = 1; difficulty <= 5; ++difficulty) {
                const EscapeSpec spec = generate_escape(seed, difficulty, 1);
                for (const EscapeRoom& room : spec.rooms) {
                    CAPTURE(seed);
                    CAPTURE(difficulty);
                    CHECK(room.required_actors <= 1);
                }
            }
        }
    }
    SUBCASE("difficulty five builds six rooms spaced ten apart") {
        const EscapeSpec spec = generate_escape(3, 5, 2);
        REQUIRE(spec.rooms.size() == 6);
        for (std::size_t i = 1; i < spec.rooms.size(); ++i) {
            CHECK(spec.rooms[i].center.z - spec.rooms[i - 1].center.z == 10);
            CHECK(spec.rooms[i].center.x == spec.rooms[i - 1].center.x);
        }
    }
    SUBCASE("out-of-range parameters are rejected") {
        CHECK_THROWS_AS(generate_escape(1, 0, 2), WorldError);
        CHECK_THROWS_AS(generate_escape(1, 6, 2), WorldError);
        CHECK_THROWS_AS(generate_escape(1, 1, 0), WorldError);
    }
    SUBCASE("specs round-trip through JSON") {
        const EscapeSpec spec = generate_escape(11, 3, 2);
        const EscapeSpec back = EscapeSpec::from_json(spec.to_json());
        CHECK(back.to_json() == spec.to_json());
    }
}

TEST_CASE("escape barriers gate navigation until the room is passed") {
    World world = basic_world();
    world.set_arena({100, -64, 100}, {160, 0, 170});
    world.install_escape(plate_room(1, 600));
    world.add_agent("Alice", {130, -60, 123});
    // Room 0's gate sits at z = 135.
    CHECK_FALSE(
        world.apply_action(act("Alice", "navigateTo", {"130", "-60", "140"}))
            .accepted);
    REQUIRE(world.apply_action(act("Alice", "navigateTo", {"130", "-60", "130"}))
                .accepted);
    REQUIRE(world
                .apply_action(act("Alice", "ToggleAction", {"128", "-60", "130"}))
                .accepted);
    CHECK(world.escape_status()[0].passed);
    CHECK(world.apply_action(act("Alice", "navigateTo", {"130", "-60", "140"}))
              .accepted);
}

TEST_CASE("local views are radius-limited and self-inclusive") {
    World world = basic_world();

    SUBCASE("an empty arena shows only the agent itself") {
        world.add_agent("Alice", {0, -60, 0});
        const auto view = world.local_view("Alice");
        REQUIRE(view.size() == 1);
        CHECK(view[0].kind == "agent");
        CHECK(view[0].subject == "Alice");
    }
    SUBCASE("a chest beside the agent is visible") {
        world.add_agent("Alice", {0, -60, 0});
        world.add_container({1, -60, 0}, {{"carrot", 1}});
        bool seen = false;
        for (const auto& rec : world.local_view("Alice")) {
            if (rec.kind == "container" && rec.position == Vec3{1, -60, 0}) {
                seen = true;
            }
        }
        CHECK(seen);
    }
    SUBCASE("agents far apart have disjoint views") {
        world.add_agent("Alice", {0, -60, 0});
        world.add_agent("Bob", {40, -60, 0});
        world.add_block({2, -60, 0}, Block{"stone"});
        world.add_block({38, -60, 0}, Block{"stone"});
        const auto va = world.local_view("Alice");
        const auto vb = world.local_view("Bob");
        // Distance filter: everything in a view is within 16 (Chebyshev).
        for (const auto& rec : va) {
            CHECK(std::max({std::abs(rec.position.x - 0),
                            std::abs(rec.position.y + 60),
                            std::abs(rec.position.z - 0)}) <= 16);
        }
        std::set<std::tuple<std::string, Vec3, std::string>> keys_a, keys_b;
        for (const auto& rec : va) {
            keys_a.emplace(rec.kind, rec.position, rec.subject);
        }
        for (const auto& rec : vb) {
            keys_b.emplace(rec.kind, rec.position, rec.subject);
        }
        for (const auto& key : keys_a) CHECK(keys_b.count(key) == 0);
    }
}

TEST_CASE("executing a blueprint's placement sequence reproduces it exactly") {
    const Blueprint bp =
        load_blueprint_document(harness::construction_document("task_24"));
    World world = basic_world();
    world.add_agent("Alice", {0, -60, 0});
    world.add_container({0, -60, 1}, bp.material_counts());
    for (const auto& [material, count] : bp.material_counts()) {
        REQUIRE(world
                    .apply_action(act("Alice", "withdrawItem",
                                      {"0", "-60", "1", material,
                                       std::to_string(count)}))
                    .accepted);
    }
    std::vector<BlockSpec> cells = bp.cells();
    std::ranges::sort(cells, [](const BlockSpec& a, const BlockSpec& b) {
        return std::tuple(a.position.y, a.position.x, a.position.z) <
               std::tuple(b.position.y, b.position.x, b.position.z);
    });
    for (const BlockSpec& cell : cells) {
        std::vector<std::string> args{cell.material};
        for (const std::string& v : vec_args(cell.position)) args.push_back(v);
        args.push_back(to_string(cell.facing));
        args.push_back(to_string(cell.axis));
        REQUIRE(world.apply_action({"Alice", "placeBlock", args}).accepted);
    }
    std::set<BlockSpec> placed;
    for (const BlockSpec& b : world.placed_blocks()) placed.insert(b);
    const std::set<BlockSpec> want(cells.begin(), cells.end());
    CHECK(placed == want);
}

TEST_CASE("the world gate orders concurrent submissions deterministically") {
    auto run_once = [] {
        World world(5);
        world.set_ground(-61);
        world.set_arena({-32, -64, -32}, {32, 0, 32});
        world.add_container({0, -60, 0}, {{"stone", 10}});
        world.add_agent("Alice", {0, -60, 1});
        world.add_agent("Bob", {0, -60, 2});
        WorldGate gate(world);
        gate.register_worker("Alice");
        gate.register_worker("Bob");
        std::thread alice([&] {
            gate.submit(
                act("Alice", "withdrawItem", {"0", "-60", "0", "stone", "3"}));
            gate.submit(act("Alice", "navigateTo", {"5", "-60", "1"}));
            gate.submit(act("Alice", "placeBlock", {"stone", "5", "-60", "2"}));
            gate.deregister_worker("Alice");
        });
        std::thread bob([&] {
            gate.submit(
                act("Bob", "withdrawItem", {"0", "-60", "0", "stone", "2"}));
            gate.submit(act("Bob", "placeBlock", {"stone", "1", "-60", "2"}));
            gate.deregister_worker("Bob");
        });
        alice.join();
        bob.join();
        json journal = json::array();
        for (const World::JournalEntry& e : world.journal()) {
            journal.push_back(
                {{"req", e.request.to_json()}, {"res", e.result.to_json()}});
        }
        return std::pair(journal.dump(), world.snapshot().dump());
    };
    const auto [journal1, world1] = run_once();
    for (int i = 0; i < 10; ++i) {
        const auto [journal2, world2] = run_once();
        CHECK(journal1 == journal2);
        CHECK(world1 == world2);
    }
}
