#pragma once

#include <memory>
#include <optional>
#include <string>

#include "bcp/combinators.hpp"
#include "bcp/machines.hpp"
#include "bcp/protocol.hpp"
#include "bcp/simulate.hpp"

namespace bcp {

// One counter-machine step as a broadcast protocol. Locals 0,h,1,2,s; the
// shared global walks Cmd -> (high) -> Ret while agents renormalize their
// contributions. The counter value of a configuration is
//   [global == high] + sum over agents of their contribution.
ProtocolSpec step_bp();

// phi(j, x): x agents contributing 1, n-x contributing 0, global j.
Configuration step_config(const ProtocolSpec& spec, const std::string& global_label,
                          std::uint64_t ones, std::uint64_t n);
// Recognizes final configurations phi(done_b, y); returns (b, y).
std::optional<std::pair<bool, std::uint64_t>> step_final(const ProtocolSpec& spec,
                                                         const Configuration& config);
bool step_failing(const ProtocolSpec& spec, const Configuration& config);
// 2 * #noncanonical + [global == high]; strictly decreases on normalizer
// firings.
std::uint64_t step_potential(const ProtocolSpec& spec, const Configuration& config);
// twice the represented counter value (h counts one half)
std::uint64_t step_value_x2(const ProtocolSpec& spec, const Configuration& config);

// Epidemic clock: one leader infects; all agents reach the final state
// together after Theta(n log n) broadcasts.
struct ClockBp {
    ProtocolSpec spec;
    std::string initial_label;
    std::string final_label;
};

ClockBp clock_bp();

// 28k^2 copies of the clock run back to back, phase tracked in the global.
ClockBp chained_clock_bp(int k);

struct ClockRun {
    std::uint64_t time = 0;
    bool early_final = false; // an agent reached the final state before all did
    bool timeout = false;
};

ClockRun run_clock(const ClockBp& clock, std::uint64_t n, Rng& rng, std::uint64_t max_steps);

// Product of step_bp with a chained clock: the command runs under renamed
// globals, and when the clock fires the population either lands in the true
// completion global (all contributions canonical) or stragglers turn into
// the absorbing failure local.
ProtocolSpec hardened_step_bp(int k);
// global label that loads command `cmd` into a fresh hardened episode
std::string hardened_cmd_global(const std::string& cmd);

// ---- full counter-machine compilation ----

class CmBcp {
  public:
    CmBcp(CounterMachine cm, int k, std::uint32_t arity);

    Protocol& view() { return *proto_; }
    std::shared_ptr<Protocol> protocol() const { return proto_; }

    Configuration initial(const InputMap& input);
    // CM control state of the shared global (coherent configurations)
    std::optional<std::string> cm_state(const Configuration& config) const;
    // 0/1 once the machine component halted
    std::optional<bool> halted(const Configuration& config) const;
    bool has_failure(const Configuration& config) const;
    // value of counter i (0-based): marker occupancy across slots
    std::uint64_t counter_value(const Configuration& config, std::uint32_t i) const;
    // flips one random agent's random slot to the failure local
    Configuration inject_failure(const Configuration& config, Rng& rng) const;
    // canonical text of (slots, machine global), dropping coin bookkeeping
    std::string inner_fingerprint(const Configuration& config) const;

    // explicit protocol over the state-graph closure of the inputs
    ProtocolSpec materialize(std::size_t max_states) const;

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    std::shared_ptr<Protocol> proto_;
};

// Requires an n-bounded machine; arity 0 means one input symbol per counter.
CmBcp cm_to_bcp(const CounterMachine& cm, int k, std::uint32_t arity = 0);

// Deterministic 1-counter machine accepting powers of two.
CounterMachine power_of_two_cm();
// Immediately halting accepting machine.
CounterMachine trivial_accept_cm();

} // namespace bcp
