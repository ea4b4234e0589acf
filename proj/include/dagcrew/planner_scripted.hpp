#pragma once

#include <atomic>
#include <cstdint>

#include "dagcrew/planner.hpp"

namespace dagcrew::planner {

struct ScriptedOptions {
    std::uint64_t script_seed = 0;
    /// Fault injection for failure-path tests: the first N decompose (or
    /// allocate) calls return unparsable prose.
    int fail_decompose_times = 0;
    int fail_allocation_times = 0;
};

/// Deterministic rule-based stand-in for the language model. Replies are a
/// pure function of (template id, slots, script seed); the same request
/// always yields a byte-identical reply. Safe for concurrent use.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(ScriptedOptions options) : options_(options) {
        decompose_faults_ = options.fail_decompose_times;
        allocation_faults_ = options.fail_allocation_times;
    }

    PlannerReply complete(const PlannerRequest& request) override;
    std::string name() const override { return "scripted"; }

    long total_calls() const { return calls_.load(); }

private:
    ScriptedOptions options_;
    std::atomic<long> calls_{0};
    std::atomic<int> decompose_faults_{0};
    std::atomic<int> allocation_faults_{0};
};

}  // namespace dagcrew::planner
