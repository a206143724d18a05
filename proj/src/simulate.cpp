#include "bcp/simulate.hpp"

#include "bcp/analysis.hpp"

namespace bcp {

Configuration init_config(Protocol& p, const InputMap& input) {
    Configuration c;
    for (const auto& [sym, count] : input) {
        auto idx = p.symbol_index(sym);
        if (!idx) fail(Err::UnknownSymbol, "unknown input symbol '" + sym + "'");
        if (count > 0) c.add(p.input_state(*idx), static_cast<std::int64_t>(count));
    }
    if (c.empty()) fail(Err::EmptyPopulation, "initial configuration is empty");
    return c;
}

Configuration apply_broadcast(Protocol& p, const Configuration& config, StateId q) {
    if (config.count(q) == 0)
        fail(Err::StateNotPresent, "state '" + p.state_label(q) + "' not present");
    Configuration out;
    for (const auto& [s, c] : config.entries()) {
        std::uint64_t n = c;
        if (s == q) --n;
        if (n > 0) out.add(p.respond(q, s), static_cast<std::int64_t>(n));
    }
    out.add(p.successor(q), 1);
    return out;
}

std::pair<StateId, Configuration> sample_step(Protocol& p, const Configuration& config, Rng& rng) {
    if (config.empty()) fail(Err::EmptyPopulation, "cannot step an empty configuration");
    std::uint64_t target = rng.below(config.size());
    StateId chosen = 0;
    for (const auto& [s, c] : config.entries()) {
        if (target < c) {
            chosen = s;
            break;
        }
        target -= c;
    }
    return {chosen, apply_broadcast(p, config, chosen)};
}

Consensus consensus_of(Protocol& p, const Configuration& config) {
    bool any_in = false, any_out = false;
    for (const auto& [s, c] : config.entries()) {
        (void)c;
        if (p.accepting(s))
            any_in = true;
        else
            any_out = true;
        if (any_in && any_out) return Consensus::Mixed;
    }
    if (any_in && !any_out) return Consensus::One;
    if (any_out && !any_in) return Consensus::Zero;
    return Consensus::Mixed; // empty
}

std::vector<StateId> enabled_nonsilent(Protocol& p, const Configuration& config) {
    std::vector<StateId> out;
    for (const auto& [s, c] : config.entries()) {
        (void)c;
        if (!p.silent(s)) out.push_back(s);
    }
    return out;
}

bool quiescent(Protocol& p, const Configuration& config) {
    for (const auto& [s, c] : config.entries()) {
        (void)c;
        if (!p.silent(s)) return false;
    }
    return true;
}

Trace run_from(Protocol& p, const Configuration& start, Rng& rng, StopPolicy stop,
               std::uint64_t max_steps, const RunOptions& opts) {
    Trace tr;
    tr.initial = start;
    Configuration cur = start;
    Consensus last = opts.track_consensus ? consensus_of(p, cur) : Consensus::Mixed;

    bool stopped = false;
    while (true) {
        if (stop.kind == StopPolicy::Quiescence && quiescent(p, cur)) {
            stopped = true;
            break;
        }
        if (stop.kind == StopPolicy::ExactStable && decide_stable(p, cur, stop.stable_budget)) {
            stopped = true;
            break;
        }
        if (tr.step_count >= max_steps) break;
        auto [q, next] = sample_step(p, cur, rng);
        ++tr.step_count;
        cur = std::move(next);
        if (opts.retain_steps) tr.steps.push_back({q, cur});
        if (opts.track_consensus) {
            Consensus now = consensus_of(p, cur);
            if (now != last) {
                tr.consensus_changes.push_back(tr.step_count);
                last = now;
            }
        }
    }
    tr.elided = !opts.retain_steps;
    tr.truncated = !stopped && stop.kind != StopPolicy::FixedSteps;
    tr.final = std::move(cur);
    if (opts.track_consensus) tr.final_consensus = last;
    else tr.final_consensus = consensus_of(p, tr.final);
    return tr;
}

Trace run_execution(Protocol& p, const InputMap& input, Rng& rng, StopPolicy stop,
                    std::uint64_t max_steps, const RunOptions& opts) {
    return run_from(p, init_config(p, input), rng, stop, max_steps, opts);
}

} // namespace bcp
