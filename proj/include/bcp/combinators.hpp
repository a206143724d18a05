#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>

#include "bcp/protocol.hpp"
#include "bcp/rng.hpp"
#include "bcp/simulate.hpp"

namespace bcp {

// A protocol with a second transition map; an agent picks delta0 or delta1
// uniformly at random whenever it broadcasts.
struct NondetSpec {
    ProtocolSpec spec;                         // spec.transitions is delta0
    std::vector<BroadcastTransition> delta1;   // indexed by state

    void validate() const;
};

// A protocol extended with pairwise rendezvous: each step is a fair coin
// between one broadcast and one rendezvous of two distinct agents.
struct RendezvousSpec {
    ProtocolSpec spec;
    // R(q,r) = (s,t); pairs left out map to themselves.
    std::map<std::pair<StateId, StateId>, std::pair<StateId, StateId>> rendezvous;

    std::pair<StateId, StateId> apply(StateId q, StateId r) const;
    void validate() const;
};

// Two-output boolean combiner as a truth table.
struct OutputCombiner {
    std::array<std::array<bool, 2>, 2> table{};
    std::string name;

    bool operator()(bool a, bool b) const { return table[a][b]; }

    static OutputCombiner And();
    static OutputCombiner Or();
    static OutputCombiner Xor();
};

// Product protocol: both coordinates advance on every broadcast; the
// accepting set is rebuilt from the combiner. Input alphabets are unified by
// adding inert padding states for missing symbols.
ProtocolSpec parallel_compose(const ProtocolSpec& p1, const ProtocolSpec& p2,
                              const OutputCombiner& combine);

ProtocolSpec complement_output(ProtocolSpec p);

// Synthetic-coin simulation of the two transition maps: agents pair up into
// equal-sized type classes, a typed agent flips the shared coin, and the next
// broadcast executes the selected map.
ProtocolSpec with_coin(const NondetSpec& nd);

// Rendezvous-to-broadcast reduction; the result pairs every original state
// with exactly two broadcast choices, ready for with_coin.
NondetSpec with_rendezvous(const RendezvousSpec& rs);

// ---- k-way choice (binary tree with rejection over the shared coin) ----

// Protocol whose states carry a constant number of alternative broadcasts.
class ChoiceProtocol {
  public:
    virtual ~ChoiceProtocol() = default;
    virtual std::size_t variant_count() const = 0;
    virtual std::size_t state_count() const = 0;
    virtual std::string state_label(StateId q) const = 0;
    virtual StateId successor(StateId q, std::size_t variant) = 0;
    virtual StateId respond(StateId q, std::size_t variant, StateId s) = 0;
    virtual bool silent(StateId q, std::size_t variant) = 0;
    virtual const std::vector<std::string>& input_symbols() const = 0;
    virtual StateId input_state(std::size_t symbol) = 0;
    virtual bool accepting(StateId q) const = 0;
    // Set when every state's label is "local@global".
    virtual const std::vector<std::string>* global_labels() const { return nullptr; }
};

std::shared_ptr<ChoiceProtocol> choice_view(const NondetSpec& nd);

// Lazy coin wrapper over any ChoiceProtocol; uniform over variants.
std::shared_ptr<Protocol> coin_wrap(std::shared_ptr<ChoiceProtocol> inner);

// Instrumentation hooks shared by tests and the acceptance suite.
struct CoinStateInfo {
    bool valid = false;
    int type = -1;       // 0..4 for ?,+,-,0,1
    bool at_exec = false; // coin points at a variant; next broadcast executes it
    std::size_t variant = 0;
};
CoinStateInfo coin_state_info(Protocol& wrapped, StateId q);

// For protocols built by coin_wrap: the inner state behind a wrapped id, and
// a wrapped id with the same coin bookkeeping but a different inner state.
StateId coin_inner_state(Protocol& wrapped, StateId q);
StateId coin_reintern(Protocol& wrapped, StateId like, StateId new_inner);

// One multiset-level step of the population protocol induced by R: ordered
// pick of two distinct agents. Reference chain for differential tests.
Configuration population_step(const RendezvousSpec& rs, const Configuration& c, Rng& rng);

} // namespace bcp
