#include "bcp/protocol.hpp"

#include <algorithm>
#include <deque>

namespace bcp {

Configuration Configuration::single(StateId q, std::uint64_t count) {
    Configuration c;
    if (count > 0) {
        c.entries_.emplace_back(q, count);
        c.size_ = count;
    }
    return c;
}

std::uint64_t Configuration::count(StateId q) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), q,
                               [](const auto& e, StateId v) { return e.first < v; });
    if (it != entries_.end() && it->first == q) return it->second;
    return 0;
}

void Configuration::add(StateId q, std::int64_t delta) {
    if (delta == 0) return;
    auto it = std::lower_bound(entries_.begin(), entries_.end(), q,
                               [](const auto& e, StateId v) { return e.first < v; });
    if (it != entries_.end() && it->first == q) {
        std::int64_t next = static_cast<std::int64_t>(it->second) + delta;
        if (next < 0) fail(Err::Validation, "negative multiplicity");
        size_ = size_ - it->second + static_cast<std::uint64_t>(next);
        if (next == 0)
            entries_.erase(it);
        else
            it->second = static_cast<std::uint64_t>(next);
    } else {
        if (delta < 0) fail(Err::Validation, "negative multiplicity");
        entries_.insert(it, {q, static_cast<std::uint64_t>(delta)});
        size_ += static_cast<std::uint64_t>(delta);
    }
}

std::size_t Configuration::hash() const {
    std::size_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (const auto& [q, c] : entries_) {
        mix(q);
        mix(c);
    }
    return h;
}

StateId Response::apply(StateId s) const {
    auto it = std::lower_bound(moves.begin(), moves.end(), s,
                               [](const auto& e, StateId v) { return e.first < v; });
    if (it != moves.end() && it->first == s) return it->second;
    return s;
}

void Response::set(StateId from, StateId to) {
    auto it = std::lower_bound(moves.begin(), moves.end(), from,
                               [](const auto& e, StateId v) { return e.first < v; });
    if (it != moves.end() && it->first == from) {
        if (from == to)
            moves.erase(it);
        else
            it->second = to;
    } else if (from != to) {
        moves.insert(it, {from, to});
    }
}

void Response::normalize() {
    std::sort(moves.begin(), moves.end());
    moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
    std::erase_if(moves, [](const auto& e) { return e.first == e.second; });
    for (std::size_t i = 1; i < moves.size(); ++i)
        if (moves[i - 1].first == moves[i].first)
            fail(Err::Validation, "response maps a state twice");
}

const std::vector<std::string>& Protocol::input_symbols() const {
    static const std::vector<std::string> none;
    return none;
}

std::optional<std::size_t> Protocol::symbol_index(std::string_view name) const {
    const auto& syms = input_symbols();
    for (std::size_t i = 0; i < syms.size(); ++i)
        if (syms[i] == name) return i;
    return std::nullopt;
}

StateId ProtocolSpec::state_index(std::string_view label) const {
    if (auto q = find_state(label)) return *q;
    fail(Err::UnknownState, "unknown state '" + std::string(label) + "'");
}

std::optional<StateId> ProtocolSpec::find_state(std::string_view label) const {
    for (StateId q = 0; q < states.size(); ++q)
        if (states[q] == label) return q;
    return std::nullopt;
}

bool ProtocolSpec::transition_silent(StateId q) const {
    const auto& t = transitions[q];
    return t.successor == q && t.response.identity();
}

namespace {

std::pair<std::string_view, std::string_view> split_label(const std::string& s) {
    auto pos = s.rfind('@');
    if (pos == std::string::npos) fail(Err::Validation, "state '" + s + "' lacks a global component");
    return {std::string_view(s).substr(0, pos), std::string_view(s).substr(pos + 1)};
}

} // namespace

std::size_t ProtocolSpec::global_of(StateId q) const {
    if (!globals) fail(Err::Validation, "protocol has no declared globals");
    auto [_, g] = split_label(states[q]);
    for (std::size_t i = 0; i < globals->size(); ++i)
        if ((*globals)[i] == g) return i;
    fail(Err::Validation, "state '" + states[q] + "' uses an undeclared global");
}

std::string ProtocolSpec::local_of(StateId q) const {
    auto [l, _] = split_label(states[q]);
    return std::string(l);
}

void ProtocolSpec::validate() const {
    if (states.empty()) fail(Err::Validation, "empty state set");
    if (transitions.size() != states.size()) fail(Err::Validation, "transition table not total");
    if (accepting.size() != states.size()) fail(Err::Validation, "accepting flags not total");
    if (input_map.size() != input_alphabet.size()) fail(Err::Validation, "input map not total");
    auto check_state = [&](StateId q, const char* what) {
        if (q >= states.size()) fail(Err::Validation, std::string("undeclared state in ") + what);
    };
    for (const auto& t : transitions) {
        check_state(t.successor, "transition successor");
        StateId prev = 0;
        bool first = true;
        for (auto [from, to] : t.response.moves) {
            check_state(from, "response");
            check_state(to, "response");
            if (!first && from <= prev) fail(Err::Validation, "response not normalized");
            prev = from;
            first = false;
        }
    }
    for (StateId q : input_map) check_state(q, "input map");

    if (globals) {
        // Receivers at the source's global must land at the successor's global,
        // and all input states must share one global.
        std::unordered_map<std::string_view, std::size_t> gindex;
        for (std::size_t i = 0; i < globals->size(); ++i) gindex.emplace((*globals)[i], i);
        std::vector<std::size_t> g(states.size());
        std::vector<std::size_t> per_global(globals->size(), 0);
        for (StateId q = 0; q < states.size(); ++q) {
            auto [_, gl] = split_label(states[q]);
            auto it = gindex.find(gl);
            if (it == gindex.end())
                fail(Err::Validation, "state '" + states[q] + "' uses an undeclared global");
            g[q] = it->second;
            ++per_global[g[q]];
        }
        for (StateId q = 0; q < states.size(); ++q) {
            const auto& t = transitions[q];
            if (transition_silent(q)) continue;
            std::size_t gsucc = g[t.successor];
            std::size_t mapped_here = 0;
            for (auto [from, to] : t.response.moves) {
                if (g[from] != g[q]) continue;
                ++mapped_here;
                if (g[to] != gsucc)
                    fail(Err::Validation, "transition from '" + states[q] +
                                              "' breaks global coherence at '" + states[from] + "'");
            }
            // States left to the identity default stay at g[q]; that is only
            // coherent when the transition does not change the global.
            if (g[q] != gsucc && mapped_here != per_global[g[q]])
                fail(Err::Validation, "transition from '" + states[q] +
                                          "' leaves same-global states behind");
        }
        if (!input_map.empty()) {
            std::size_t g0 = g[input_map[0]];
            for (StateId q : input_map)
                if (g[q] != g0) fail(Err::Validation, "input states do not share a global");
        }
    }
}

StateId SpecBuilder::state(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    if (label.empty() || label.find_first_of(" \t,;#") != std::string::npos ||
        label.find("->") != std::string::npos)
        fail(Err::Validation, "bad state label '" + label + "'");
    StateId q = static_cast<StateId>(spec_.states.size());
    spec_.states.push_back(label);
    spec_.transitions.push_back(BroadcastTransition{q, {}});
    spec_.accepting.push_back(false);
    has_transition_.push_back(false);
    index_.emplace(label, q);
    return q;
}

std::optional<StateId> SpecBuilder::find(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void SpecBuilder::transition(StateId src, StateId succ, std::vector<std::pair<StateId, StateId>> moves) {
    if (has_transition_.at(src)) fail(Err::Validation, "duplicate transition for '" + spec_.states[src] + "'");
    has_transition_[src] = true;
    Response r{std::move(moves)};
    r.normalize();
    spec_.transitions[src] = BroadcastTransition{succ, std::move(r)};
}

void SpecBuilder::input(const std::string& symbol, StateId q) {
    for (const auto& s : spec_.input_alphabet)
        if (s == symbol) fail(Err::Validation, "duplicate input symbol '" + symbol + "'");
    spec_.input_alphabet.push_back(symbol);
    spec_.input_map.push_back(q);
}

void SpecBuilder::accept(StateId q) { spec_.accepting[q] = true; }

void SpecBuilder::declare_globals(std::vector<std::string> labels) { spec_.globals = std::move(labels); }

ProtocolSpec SpecBuilder::finish() {
    spec_.validate();
    return std::move(spec_);
}

ExplicitProtocol::ExplicitProtocol(std::shared_ptr<const ProtocolSpec> spec) : spec_(std::move(spec)) {
    silent_.resize(spec_->states.size());
    for (StateId q = 0; q < spec_->states.size(); ++q) silent_[q] = spec_->transition_silent(q);
}

std::shared_ptr<Protocol> make_view(ProtocolSpec spec) {
    return std::make_shared<ExplicitProtocol>(std::move(spec));
}

std::shared_ptr<Protocol> make_view(std::shared_ptr<const ProtocolSpec> spec) {
    return std::make_shared<ExplicitProtocol>(std::move(spec));
}

ProtocolSpec materialize_protocol(Protocol& p, const std::vector<StateId>& seeds,
                                  std::size_t max_states) {
    // Interned set, grouped by the global component of the label. Responses
    // only act within a group, so totality needs every ordered same-group
    // pair visited once: pairs with the later-added member are handled when
    // that member joins its group.
    std::vector<StateId> order;
    std::unordered_map<StateId, std::uint32_t> pos;
    std::unordered_map<std::string, std::vector<StateId>> groups;
    std::vector<std::vector<std::pair<StateId, StateId>>> moves; // per source
    std::vector<StateId> succ;
    std::deque<StateId> fresh;

    auto global_of = [&p](StateId q) {
        std::string label = p.state_label(q);
        auto at = label.rfind('@');
        return at == std::string::npos ? std::string() : label.substr(at + 1);
    };
    auto intern = [&](StateId q) {
        if (pos.count(q)) return;
        if (order.size() >= max_states)
            fail(Err::BudgetExceeded,
                 "materialization exceeds " + std::to_string(max_states) + " states");
        pos.emplace(q, static_cast<std::uint32_t>(order.size()));
        order.push_back(q);
        moves.emplace_back();
        succ.push_back(q);
        fresh.push_back(q);
    };
    for (StateId s : seeds) intern(s);

    while (!fresh.empty()) {
        StateId s = fresh.front();
        fresh.pop_front();
        succ[pos[s]] = p.successor(s);
        intern(succ[pos[s]]);
        auto& group = groups[global_of(s)];
        group.push_back(s);
        // pairs (s, member) and (member, s) for everyone already present
        for (StateId t : group) {
            StateId r1 = p.respond(s, t);
            intern(r1);
            if (r1 != t) moves[pos[s]].emplace_back(t, r1);
            if (t != s) {
                StateId r2 = p.respond(t, s);
                intern(r2);
                if (r2 != s) moves[pos[t]].emplace_back(s, r2);
            }
        }
    }

    ProtocolSpec out;
    out.states.reserve(order.size());
    std::vector<std::string> globals;
    for (StateId q : order) {
        out.states.push_back(p.state_label(q));
        out.accepting.push_back(p.accepting(q));
        globals.push_back(global_of(q));
    }
    std::sort(globals.begin(), globals.end());
    globals.erase(std::unique(globals.begin(), globals.end()), globals.end());
    if (!globals.empty() && !globals.front().empty()) out.globals = std::move(globals);
    out.transitions.resize(order.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) {
        BroadcastTransition t;
        t.successor = pos.at(succ[i]);
        for (auto [from, to] : moves[i]) t.response.moves.emplace_back(pos.at(from), pos.at(to));
        t.response.normalize();
        out.transitions[i] = std::move(t);
    }
    for (std::size_t i = 0; i < p.input_symbols().size(); ++i) {
        out.input_alphabet.push_back(p.input_symbols()[i]);
        out.input_map.push_back(pos.at(p.input_state(i)));
    }
    out.validate();
    return out;
}

} // namespace bcp
