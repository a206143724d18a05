#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bcp/protocol.hpp"
#include "bcp/rng.hpp"

namespace bcp {

using InputMap = std::map<std::string, std::uint64_t>; // symbol -> count

enum class Consensus { Zero, One, Mixed };

Configuration init_config(Protocol& p, const InputMap& input);

// delta(q) applied at `config`: the broadcaster leaves q, everyone else
// follows the response, the broadcaster re-enters at the successor.
Configuration apply_broadcast(Protocol& p, const Configuration& config, StateId q);

std::pair<StateId, Configuration> sample_step(Protocol& p, const Configuration& config, Rng& rng);

Consensus consensus_of(Protocol& p, const Configuration& config);
inline bool is_consensus(Protocol& p, const Configuration& c, bool b) {
    return consensus_of(p, c) == (b ? Consensus::One : Consensus::Zero);
}

std::vector<StateId> enabled_nonsilent(Protocol& p, const Configuration& config);
bool quiescent(Protocol& p, const Configuration& config);

struct StopPolicy {
    enum Kind { Quiescence, ExactStable, FixedSteps } kind = Quiescence;
    // ExactStable: reachability node budget per stability query.
    std::size_t stable_budget = 1'000'000;

    static StopPolicy quiescence() { return {Quiescence, 0}; }
    static StopPolicy exact_stable(std::size_t budget = 1'000'000) { return {ExactStable, budget}; }
    static StopPolicy fixed_steps() { return {FixedSteps, 0}; }
};

struct TraceStep {
    StateId chosen;
    Configuration config;
};

struct Trace {
    Configuration initial;
    std::vector<TraceStep> steps; // empty when elided
    bool elided = false;
    std::uint64_t step_count = 0;
    bool truncated = false; // max_steps hit before the stop policy fired
    Configuration final;

    // Consensus change history: step indices where the consensus value of the
    // resulting configuration differs from the previous one.
    std::vector<std::uint64_t> consensus_changes;
    Consensus final_consensus = Consensus::Mixed;
};

struct RunOptions {
    bool retain_steps = false;
    bool track_consensus = true;
};

Trace run_execution(Protocol& p, const InputMap& input, Rng& rng, StopPolicy stop,
                    std::uint64_t max_steps, const RunOptions& opts = {});
Trace run_from(Protocol& p, const Configuration& start, Rng& rng, StopPolicy stop,
               std::uint64_t max_steps, const RunOptions& opts = {});

} // namespace bcp
