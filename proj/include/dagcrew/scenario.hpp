#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagcrew/metrics.hpp"
#include "dagcrew/trace.hpp"
#include "dagcrew/worldsim.hpp"

namespace dagcrew::harness {

struct RunConfig;

/// One benchmark scenario: how to build its world, what the goal text and
/// task document look like, and how progress is scored.
class ScenarioRuntime {
public:
    virtual ~ScenarioRuntime() = default;

    virtual std::string id() const = 0;
    virtual std::string goal() const = 0;
    /// The document D that decomposition data refs resolve against.
    virtual nlohmann::json document() const = 0;
    virtual void populate(worldsim::World& world) const = 0;
    virtual Vec3 spawn(int agent_index) const = 0;
    virtual double completion(const worldsim::World& world,
                              const EpisodeTrace& trace) const = 0;
    virtual metrics::MetricReport report(
        const worldsim::World& world, const EpisodeTrace& trace,
        const std::vector<std::string>& agents) const = 0;
};

std::unique_ptr<ScenarioRuntime> make_scenario(const RunConfig& config);

}  // namespace dagcrew::harness
