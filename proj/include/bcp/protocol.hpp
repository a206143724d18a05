#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bcp/error.hpp"

namespace bcp {

// Dense per-protocol state handle.
using StateId = std::uint32_t;

// Multiset of agent states. Entries are sorted by state and zero-free, so
// equality and hashing are representation independent.
class Configuration {
  public:
    Configuration() = default;

    static Configuration single(StateId q, std::uint64_t count = 1);

    std::uint64_t count(StateId q) const;
    std::uint64_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    const std::vector<std::pair<StateId, std::uint64_t>>& entries() const { return entries_; }
    std::size_t support_size() const { return entries_.size(); }

    void add(StateId q, std::int64_t delta);

    bool operator==(const Configuration&) const = default;

    std::size_t hash() const;

  private:
    std::vector<std::pair<StateId, std::uint64_t>> entries_;
    std::uint64_t size_ = 0;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const { return c.hash(); }
};

// Total response map, stored sparsely: states not listed map to themselves.
struct Response {
    std::vector<std::pair<StateId, StateId>> moves; // sorted by source, no identity entries

    StateId apply(StateId s) const;
    void set(StateId from, StateId to);
    void normalize();
    bool identity() const { return moves.empty(); }
    bool operator==(const Response&) const = default;
};

struct BroadcastTransition {
    StateId successor = 0;
    Response response;
    bool operator==(const BroadcastTransition&) const = default;
};

// Executable protocol interface. Backends either hold explicit tables or
// intern states lazily while a construction is being explored/simulated.
class Protocol {
  public:
    virtual ~Protocol() = default;

    virtual std::size_t state_count() const = 0;
    virtual std::string state_label(StateId q) const = 0;

    // delta(q) = (successor, response)
    virtual StateId successor(StateId q) = 0;
    virtual StateId respond(StateId q, StateId s) = 0;
    virtual bool silent(StateId q) = 0;

    virtual const std::vector<std::string>& input_symbols() const;
    virtual StateId input_state(std::size_t symbol) = 0;
    virtual bool accepting(StateId q) const = 0;

    // Lazily interning backends mutate internal tables on access and must opt
    // out of concurrent trials.
    virtual bool thread_safe() const { return true; }

    std::optional<std::size_t> symbol_index(std::string_view name) const;
};

// Explicit, serializable protocol description.
struct ProtocolSpec {
    std::vector<std::string> states;
    std::vector<BroadcastTransition> transitions; // indexed by state
    std::vector<std::string> input_alphabet;
    std::vector<StateId> input_map; // indexed by symbol
    std::vector<bool> accepting;    // indexed by state
    std::optional<std::vector<std::string>> globals; // declared factorization: labels "local@global"

    std::size_t size() const { return states.size(); }
    StateId state_index(std::string_view label) const; // throws UnknownState
    std::optional<StateId> find_state(std::string_view label) const;

    bool transition_silent(StateId q) const;

    // Index of a state's global component within `globals`, by label suffix.
    std::size_t global_of(StateId q) const;
    std::string local_of(StateId q) const;

    // Checks declared-state closure, response totality by construction,
    // global coherence, and the input-map/accepting ranges.
    void validate() const;

    bool operator==(const ProtocolSpec&) const = default;
};

// Incremental construction helper; interns labels on first use.
class SpecBuilder {
  public:
    StateId state(const std::string& label);
    std::optional<StateId> find(const std::string& label) const;
    // delta(src) = (succ, moves); unspecified states stay silent
    void transition(StateId src, StateId succ, std::vector<std::pair<StateId, StateId>> moves = {});
    void input(const std::string& symbol, StateId q);
    void accept(StateId q);
    void declare_globals(std::vector<std::string> labels);

    ProtocolSpec finish();

  private:
    ProtocolSpec spec_;
    std::unordered_map<std::string, StateId> index_;
    std::vector<bool> has_transition_;
};

class ExplicitProtocol : public Protocol {
  public:
    explicit ExplicitProtocol(std::shared_ptr<const ProtocolSpec> spec);
    explicit ExplicitProtocol(ProtocolSpec spec)
        : ExplicitProtocol(std::make_shared<const ProtocolSpec>(std::move(spec))) {}

    std::size_t state_count() const override { return spec_->states.size(); }
    std::string state_label(StateId q) const override { return spec_->states.at(q); }
    StateId successor(StateId q) override { return spec_->transitions[q].successor; }
    StateId respond(StateId q, StateId s) override { return spec_->transitions[q].response.apply(s); }
    bool silent(StateId q) override { return silent_[q]; }
    const std::vector<std::string>& input_symbols() const override { return spec_->input_alphabet; }
    StateId input_state(std::size_t symbol) override { return spec_->input_map.at(symbol); }
    bool accepting(StateId q) const override { return spec_->accepting[q]; }

    const ProtocolSpec& spec() const { return *spec_; }
    std::shared_ptr<const ProtocolSpec> spec_ptr() const { return spec_; }

  private:
    std::shared_ptr<const ProtocolSpec> spec_;
    std::vector<bool> silent_;
};

std::shared_ptr<Protocol> make_view(ProtocolSpec spec);
std::shared_ptr<Protocol> make_view(std::shared_ptr<const ProtocolSpec> spec);

// Explicit tables for the part of `p` reachable in the state graph from the
// given seeds. Assumes labels follow the local@global convention and that
// responses keep states at other globals fixed (true for every construction
// in this library); throws BudgetExceeded past max_states.
ProtocolSpec materialize_protocol(Protocol& p, const std::vector<StateId>& seeds,
                                  std::size_t max_states);

} // namespace bcp
