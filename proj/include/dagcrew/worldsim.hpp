#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/blueprint.hpp"
#include "dagcrew/common.hpp"
#include "dagcrew/escape.hpp"

namespace dagcrew::worldsim {

struct ActionRequest {
    std::string agent;
    std::string kind;
    std::vector<std::string> args;

    nlohmann::json to_json() const;
    static ActionRequest from_json(const nlohmann::json& j);
};

struct ActionResult {
    bool accepted = false;
    std::string observation;
    Tick tick = 0;

    nlohmann::json to_json() const;
    static ActionResult from_json(const nlohmann::json& j);
};

/// The action catalogue. Anything else is rejected with an observation.
const std::set<std::string>& action_catalogue();

struct Activator {
    ActivatorKind kind = ActivatorKind::lever;
    bool powered = false;
    Tick last_change_tick = 0;
    /// Most recent off-to-on transition; drives the simultaneity window.
    std::optional<Tick> last_on_tick;
};

struct Entity {
    std::string name;
    Vec3 position;
    std::string drop_item;
    int drop_count = 1;
};

struct AgentBody {
    Vec3 position;
    std::map<std::string, int> inventory;
    std::set<std::string> capabilities;  // empty means the full catalogue
    std::string equipped;
};

struct ObservationRecord {
    std::string kind;  // block | container | activator | entity | agent | sign | inventory
    Vec3 position;
    std::string subject;
    std::string detail;

    std::string render() const;
    friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
    friend auto operator<=>(const ObservationRecord&, const ObservationRecord&) = default;
};

struct Block {
    std::string material;
    Facing facing = Facing::none;
    Axis axis = Axis::none;
};

/// Deterministic discrete world shared by the three scenarios. All
/// mutation goes through apply_action/tick; identical seeds and action
/// sequences reproduce identical states tick for tick.
class World {
public:
    struct JournalEntry {
        ActionRequest request;
        ActionResult result;
    };

    explicit World(std::uint64_t seed = 0);

    // --- scenario assembly -------------------------------------------------
    void set_ground(int y) { ground_y_ = y; }
    void set_arena(const Vec3& lo, const Vec3& hi);
    void add_block(const Vec3& pos, const Block& block);
    void add_container(const Vec3& pos, const std::map<std::string, int>& items);
    void add_activator(const Vec3& pos, ActivatorKind kind);
    void add_entity(const Entity& entity);
    void add_sign(const Vec3& pos, const std::string& text);
    void add_agent(const std::string& name, const Vec3& pos,
                   const std::set<std::string>& capabilities = {});
    void set_recipes(RecipeBook book) { recipes_ = std::move(book); }
    void add_interaction(const std::string& item, const std::string& entity,
                         const std::string& product);
    /// Installs rooms, activators, chests, signs and mineable cells from an
    /// escape spec and arms the per-room condition watchers.
    void install_escape(const EscapeSpec& spec);

    // --- simulation --------------------------------------------------------
    /// Applies one action at the submitting agent's current tick. Every
    /// attempt costs one tick, navigation adds the travelled distance, and
    /// rejected actions leave the world unchanged.
    ActionResult apply_action(const ActionRequest& request);

    /// Effect tick the request would get if applied now; used to order
    /// concurrent submissions deterministically.
    Tick peek_effect_tick(const ActionRequest& request) const;

    /// Advances the clock n >= 1 ticks, evaluating simultaneity windows.
    void tick(Tick n);

    /// Everything within the scan radius of the agent plus its own
    /// inventory, deduplicated by (kind, position, subject).
    std::vector<ObservationRecord> local_view(const std::string& agent) const;

    /// Aligns every agent's personal tick with the global clock; called at
    /// round boundaries.
    void begin_round();

    // --- accessors ---------------------------------------------------------
    Tick clock() const { return clock_; }
    Tick agent_tick(const std::string& agent) const;
    Tick busy_ticks(const std::string& agent) const;
    bool has_agent(const std::string& name) const { return agents_.count(name) != 0; }
    const AgentBody& agent(const std::string& name) const;
    const std::map<Vec3, Block>& blocks() const { return blocks_; }
    const std::map<Vec3, std::map<std::string, int>>& containers() const {
        return containers_;
    }
    const std::map<Vec3, Activator>& activators() const { return activators_; }
    const std::vector<Entity>& entities() const { return entities_; }
    const RecipeBook& recipes() const { return recipes_; }
    int ground_y() const { return ground_y_; }

    /// Blocks placed by agents since construction (for completion metrics).
    std::vector<BlockSpec> placed_blocks() const;

    /// Total of each item across all inventories and containers.
    std::map<std::string, int> item_totals() const;

    struct RoomStatus {
        int conditions = 0;
        int met = 0;
        bool passed = false;
    };
    std::vector<RoomStatus> escape_status() const;
    bool escape_installed() const { return escape_.has_value(); }
    const EscapeSpec& escape_spec() const;

    const std::vector<JournalEntry>& journal() const { return journal_; }

    nlohmann::json snapshot() const;

private:
    struct RoomRuntime {
        EscapeRoom room;
        std::vector<bool> met;
        bool passed = false;
    };

    Tick action_cost(const ActionRequest& request) const;
    ActionResult evaluate(const ActionRequest& request, Tick effect);
    bool cell_occupied(const Vec3& pos) const;
    bool placeable(const Vec3& pos) const;
    bool in_arena(const Vec3& pos) const;
    bool path_clear(const Vec3& from, const Vec3& to) const;
    const std::set<std::string>& capabilities_of(const AgentBody& body) const;
    bool consume_ingredients(AgentBody& body, const Vec3& at,
                             const std::vector<std::pair<std::string, int>>& needs,
                             int multiple);
    bool station_near(const Vec3& pos, Recipe::Station station) const;
    void evaluate_conditions(Tick now);
    void on_withdraw(const std::string& item, const Vec3& container, Tick now);
    void on_place(const std::string& item, const Vec3& cell, Tick now);
    void on_handover(const std::string& item, Tick now);
    void on_mine(const Vec3& cell, Tick now);
    void on_toggle_order(const Vec3& cell);

    std::uint64_t seed_;
    Tick clock_ = 0;
    int ground_y_ = -61;
    Vec3 arena_lo_{-256, -64, -256};
    Vec3 arena_hi_{256, 64, 256};

    std::map<Vec3, Block> blocks_;
    std::map<Vec3, std::map<std::string, int>> containers_;
    std::map<Vec3, Activator> activators_;
    std::map<Vec3, std::string> signs_;
    std::vector<Entity> entities_;
    std::map<std::string, AgentBody> agents_;
    std::map<std::string, Tick> agent_ticks_;
    std::map<std::string, Tick> busy_ticks_;
    std::set<Vec3> preexisting_;  // blocks present before any agent acted
    RecipeBook recipes_;
    std::map<std::pair<std::string, std::string>, std::string> interactions_;
    std::optional<EscapeSpec> escape_;
    std::vector<RoomRuntime> rooms_;
    std::vector<JournalEntry> journal_;
};

/// Serialization point for concurrent agent workers: requests block until
/// every registered worker has one pending, then apply in
/// (effect tick, agent id) order. This makes round execution deterministic
/// regardless of thread scheduling.
class WorldGate {
public:
    explicit WorldGate(World& world) : world_(world) {}

    void register_worker(const std::string& agent);
    void deregister_worker(const std::string& agent);
    ActionResult submit(const ActionRequest& request);

private:
    struct Pending {
        ActionRequest request;
        Tick key = 0;
        bool done = false;
        ActionResult result;
    };

    World& world_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::set<std::string> active_;
    std::map<std::string, std::shared_ptr<Pending>> pending_;
};

}  // namespace dagcrew::worldsim
