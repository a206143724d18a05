#include "bcp/combinators.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>

namespace bcp {

void NondetSpec::validate() const {
    spec.validate();
    if (delta1.size() != spec.states.size()) fail(Err::Validation, "transitions2 not total");
    for (const auto& t : delta1) {
        if (t.successor >= spec.states.size()) fail(Err::Validation, "bad successor in transitions2");
        for (auto [from, to] : t.response.moves)
            if (from >= spec.states.size() || to >= spec.states.size())
                fail(Err::Validation, "bad response in transitions2");
    }
}

std::pair<StateId, StateId> RendezvousSpec::apply(StateId q, StateId r) const {
    auto it = rendezvous.find({q, r});
    if (it == rendezvous.end()) return {q, r};
    return it->second;
}

void RendezvousSpec::validate() const {
    spec.validate();
    if (spec.globals) fail(Err::Validation, "rendezvous extension requires an unfactored base");
    for (const auto& [from, to] : rendezvous) {
        if (from.first >= spec.states.size() || from.second >= spec.states.size() ||
            to.first >= spec.states.size() || to.second >= spec.states.size())
            fail(Err::Validation, "rendezvous references undeclared states");
    }
}

OutputCombiner OutputCombiner::And() { return {{{{false, false}, {false, true}}}, "and"}; }
OutputCombiner OutputCombiner::Or() { return {{{{false, true}, {true, true}}}, "or"}; }
OutputCombiner OutputCombiner::Xor() { return {{{{false, true}, {true, false}}}, "xor"}; }

// ---- parallel composition ----

namespace {

struct FactorView {
    ProtocolSpec spec; // possibly extended with padding states
    bool factored = false;
    std::vector<std::string> locals_of_state;
    std::vector<std::size_t> global_of_state;
    std::vector<std::string> global_labels;

    std::string local(StateId q) const { return locals_of_state[q]; }
};

// Extends `p` to the unified alphabet: missing symbols map to an inert
// padding state that follows the global component and never broadcasts.
FactorView prepare_factor(const ProtocolSpec& p, const std::vector<std::string>& alphabet) {
    FactorView v;
    v.spec = p;
    std::vector<std::string> missing;
    for (const auto& sym : alphabet) {
        bool found = false;
        for (const auto& have : v.spec.input_alphabet) found |= have == sym;
        if (!found) missing.push_back(sym);
    }
    v.factored = v.spec.globals.has_value();
    if (!missing.empty()) {
        if (v.factored) {
            // Output must be determined by the global component alone.
            std::vector<int> flag(v.spec.globals->size(), -1);
            for (StateId q = 0; q < v.spec.states.size(); ++q) {
                std::size_t g = v.spec.global_of(q);
                int a = v.spec.accepting[q] ? 1 : 0;
                if (flag[g] == -1) flag[g] = a;
                else if (flag[g] != a)
                    fail(Err::Validation,
                         "cannot unify input alphabets: accepting set is not global-determined");
            }
            std::string pad = "~";
            while (v.spec.find_state(pad + "@" + (*v.spec.globals)[0])) pad += "~";
            StateId first_pad = static_cast<StateId>(v.spec.states.size());
            for (std::size_t g = 0; g < v.spec.globals->size(); ++g) {
                v.spec.states.push_back(pad + "@" + (*v.spec.globals)[g]);
                v.spec.transitions.push_back({static_cast<StateId>(v.spec.states.size() - 1), {}});
                v.spec.accepting.push_back(flag[g] == 1);
            }
            // Existing broadcasts must carry the padding along global changes.
            for (StateId q = 0; q < first_pad; ++q) {
                auto& t = v.spec.transitions[q];
                if (v.spec.transition_silent(q)) continue;
                std::size_t gsrc = v.spec.global_of(q);
                std::size_t gsucc = v.spec.global_of(t.successor);
                if (gsrc != gsucc)
                    t.response.set(first_pad + static_cast<StateId>(gsrc),
                                   first_pad + static_cast<StateId>(gsucc));
            }
            std::size_t g0 = v.spec.input_map.empty() ? 0 : v.spec.global_of(v.spec.input_map[0]);
            for (const auto& sym : missing) {
                v.spec.input_alphabet.push_back(sym);
                v.spec.input_map.push_back(first_pad + static_cast<StateId>(g0));
            }
        } else {
            bool all = true, none = true;
            for (bool a : v.spec.accepting) (a ? none : all) = false;
            if (!all && !none)
                fail(Err::Validation,
                     "cannot unify input alphabets: output depends on local states");
            std::string pad = "~";
            while (v.spec.find_state(pad)) pad += "~";
            StateId padq = static_cast<StateId>(v.spec.states.size());
            v.spec.states.push_back(pad);
            v.spec.transitions.push_back({padq, {}});
            v.spec.accepting.push_back(all);
            for (const auto& sym : missing) {
                v.spec.input_alphabet.push_back(sym);
                v.spec.input_map.push_back(padq);
            }
        }
    }
    for (StateId q = 0; q < v.spec.states.size(); ++q) {
        if (v.factored) {
            v.locals_of_state.push_back(v.spec.local_of(q));
            v.global_of_state.push_back(v.spec.global_of(q));
        } else {
            v.locals_of_state.push_back(v.spec.states[q]);
            v.global_of_state.push_back(0);
        }
    }
    v.global_labels = v.factored ? *v.spec.globals : std::vector<std::string>{};
    return v;
}

} // namespace

ProtocolSpec parallel_compose(const ProtocolSpec& p1, const ProtocolSpec& p2,
                              const OutputCombiner& combine) {
    std::vector<std::string> alphabet = p1.input_alphabet;
    for (const auto& sym : p2.input_alphabet) {
        bool found = false;
        for (const auto& have : alphabet) found |= have == sym;
        if (!found) alphabet.push_back(sym);
    }
    FactorView a = prepare_factor(p1, alphabet);
    FactorView b = prepare_factor(p2, alphabet);

    std::size_t n1 = a.spec.states.size(), n2 = b.spec.states.size();
    auto pair_id = [n2](StateId q1, StateId q2) {
        return static_cast<StateId>(q1 * n2 + q2);
    };

    ProtocolSpec out;
    bool factored = a.factored || b.factored;
    for (StateId q1 = 0; q1 < n1; ++q1)
        for (StateId q2 = 0; q2 < n2; ++q2) {
            std::string local = a.local(q1) + "|" + b.local(q2);
            if (factored) {
                std::string g1 = a.factored ? a.global_labels[a.global_of_state[q1]] : "";
                std::string g2 = b.factored ? b.global_labels[b.global_of_state[q2]] : "";
                std::string g = a.factored && b.factored ? g1 + "|" + g2 : (a.factored ? g1 : g2);
                out.states.push_back(local + "@" + g);
            } else {
                out.states.push_back(local);
            }
            out.accepting.push_back(combine(a.spec.accepting[q1], b.spec.accepting[q2]));
        }
    if (factored) {
        std::vector<std::string> globals;
        if (a.factored && b.factored) {
            for (const auto& g1 : a.global_labels)
                for (const auto& g2 : b.global_labels) globals.push_back(g1 + "|" + g2);
        } else {
            globals = a.factored ? a.global_labels : b.global_labels;
        }
        out.globals = std::move(globals);
    }

    out.transitions.resize(n1 * n2);
    for (StateId q1 = 0; q1 < n1; ++q1) {
        const auto& t1 = a.spec.transitions[q1];
        bool s1 = a.spec.transition_silent(q1);
        for (StateId q2 = 0; q2 < n2; ++q2) {
            const auto& t2 = b.spec.transitions[q2];
            bool s2 = b.spec.transition_silent(q2);
            StateId src = pair_id(q1, q2);
            if (s1 && s2) {
                out.transitions[src] = {src, {}};
                continue;
            }
            BroadcastTransition t;
            t.successor = pair_id(t1.successor, t2.successor);
            // support = supp(f1) x Q2  union  Q1 x supp(f2)
            for (auto [from1, to1] : t1.response.moves)
                for (StateId u2 = 0; u2 < n2; ++u2)
                    t.response.moves.emplace_back(pair_id(from1, u2),
                                                  pair_id(to1, t2.response.apply(u2)));
            for (auto [from2, to2] : t2.response.moves)
                for (StateId u1 = 0; u1 < n1; ++u1)
                    if (t1.response.apply(u1) == u1)
                        t.response.moves.emplace_back(pair_id(u1, from2), pair_id(u1, to2));
            t.response.normalize();
            out.transitions[src] = std::move(t);
        }
    }

    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        StateId i1 = 0, i2 = 0;
        for (std::size_t k = 0; k < a.spec.input_alphabet.size(); ++k)
            if (a.spec.input_alphabet[k] == alphabet[i]) i1 = a.spec.input_map[k];
        for (std::size_t k = 0; k < b.spec.input_alphabet.size(); ++k)
            if (b.spec.input_alphabet[k] == alphabet[i]) i2 = b.spec.input_map[k];
        out.input_alphabet.push_back(alphabet[i]);
        out.input_map.push_back(pair_id(i1, i2));
    }
    out.validate();
    return out;
}

ProtocolSpec complement_output(ProtocolSpec p) {
    for (auto&& flag : p.accepting) flag = !flag;
    return p;
}

// ---- synthetic coin ----

namespace {

constexpr const char* kTypeNames = "?+-01";
constexpr int kTypes = 5;
constexpr int kTypeZero = 3; // index into kTypeNames
constexpr int kTypeOne = 4;

struct CoinLayout {
    std::size_t variants;
    int depth;           // tree depth; leaves carry `depth` path bits
    std::uint32_t root = 1;

    explicit CoinLayout(std::size_t k) : variants(k) {
        depth = 1;
        while ((1u << depth) < k) ++depth;
    }
    std::uint32_t node_count() const { return (2u << depth); } // ids 1 .. 2^{d+1}-1
    bool is_leaf(std::uint32_t node) const { return node >= (1u << depth); }
    bool valid_leaf(std::uint32_t node) const {
        return is_leaf(node) && leaf_index(node) < variants;
    }
    std::size_t leaf_index(std::uint32_t node) const { return node - (1u << depth); }
    std::uint32_t child(std::uint32_t node, int bit) const { return 2 * node + bit; }
    std::string label(std::uint32_t node) const {
        if (node == root) return "*";
        std::string bits;
        for (std::uint32_t v = node; v > 1; v /= 2) bits.push_back(v & 1 ? '1' : '0');
        std::reverse(bits.begin(), bits.end());
        return bits;
    }
};

struct CoinTuple {
    StateId q;
    int type;
    std::uint32_t node;
    bool operator==(const CoinTuple&) const = default;
};

// delta of the wrapped protocol, shared by the explicit builder and the lazy
// view. respond() is only called for receivers at the actor's node.
struct CoinRules {
    ChoiceProtocol& inner;
    CoinLayout layout;

    CoinRules(ChoiceProtocol& p) : inner(p), layout(p.variant_count()) {}

    bool silent(const CoinTuple& s) {
        if (layout.is_leaf(s.node)) return false; // exec / reject always move the coin
        if (s.node == layout.root) return s.type == 1; // '+' waits
        return s.type < kTypeZero;                     // descent: only typed agents flip
    }

    CoinTuple succ(const CoinTuple& s) {
        if (layout.is_leaf(s.node)) {
            if (layout.valid_leaf(s.node))
                return {inner.successor(s.q, layout.leaf_index(s.node)), s.type, layout.root};
            return {s.q, s.type, layout.root};
        }
        if (s.node == layout.root) {
            switch (s.type) {
                case 0: return {s.q, 1, s.node};                             // seek: ? -> +
                case 2: return {s.q, kTypeOne, s.node};                      // find: - -> 1
                case kTypeZero: return {s.q, s.type, layout.child(s.node, 0)}; // flip 0
                case kTypeOne: return {s.q, s.type, layout.child(s.node, 1)};  // flip 1
                default: return s;                                           // '+': silent
            }
        }
        // internal non-root: typed agents keep flipping, others wait
        if (s.type == kTypeZero) return {s.q, s.type, layout.child(s.node, 0)};
        if (s.type == kTypeOne) return {s.q, s.type, layout.child(s.node, 1)};
        return s;
    }

    CoinTuple respond(const CoinTuple& actor, const CoinTuple& s) {
        if (s.node != actor.node) return s; // incoherent corner; keep identity
        if (layout.is_leaf(actor.node)) {
            if (layout.valid_leaf(actor.node))
                return {inner.respond(actor.q, layout.leaf_index(actor.node), s.q), s.type,
                        layout.root};
            return {s.q, s.type, layout.root};
        }
        if (actor.node == layout.root) {
            switch (actor.type) {
                case 0: // seek: other seekers become '-'
                    return {s.q, s.type == 0 ? 2 : s.type, s.node};
                case 2: // find: '-' revert to '?', the '+' partner becomes type 0
                    if (s.type == 2) return {s.q, 0, s.node};
                    if (s.type == 1) return {s.q, kTypeZero, s.node};
                    return s;
                case kTypeZero: return {s.q, s.type, layout.child(s.node, 0)};
                case kTypeOne: return {s.q, s.type, layout.child(s.node, 1)};
                default: return s;
            }
        }
        if (actor.type == kTypeZero) return {s.q, s.type, layout.child(s.node, 0)};
        if (actor.type == kTypeOne) return {s.q, s.type, layout.child(s.node, 1)};
        return s;
    }

    std::string label(const CoinTuple& s) const {
        std::string inner_label = inner.state_label(s.q);
        std::string type(1, kTypeNames[s.type]);
        std::string node = layout.label(s.node);
        const auto* globals = inner.global_labels();
        if (globals) {
            auto pos = inner_label.rfind('@');
            return inner_label.substr(0, pos) + "/" + type + "@" + inner_label.substr(pos + 1) +
                   "/" + node;
        }
        return inner_label + "/" + type + "@" + node;
    }
};

class ExplicitChoice : public ChoiceProtocol {
  public:
    explicit ExplicitChoice(NondetSpec nd) : nd_(std::move(nd)) {}

    std::size_t variant_count() const override { return 2; }
    std::size_t state_count() const override { return nd_.spec.states.size(); }
    std::string state_label(StateId q) const override { return nd_.spec.states[q]; }
    StateId successor(StateId q, std::size_t variant) override {
        return table(variant)[q].successor;
    }
    StateId respond(StateId q, std::size_t variant, StateId s) override {
        return table(variant)[q].response.apply(s);
    }
    bool silent(StateId q, std::size_t variant) override {
        const auto& t = table(variant)[q];
        return t.successor == q && t.response.identity();
    }
    const std::vector<std::string>& input_symbols() const override {
        return nd_.spec.input_alphabet;
    }
    StateId input_state(std::size_t symbol) override { return nd_.spec.input_map[symbol]; }
    bool accepting(StateId q) const override { return nd_.spec.accepting[q]; }
    const std::vector<std::string>* global_labels() const override {
        return nd_.spec.globals ? &*nd_.spec.globals : nullptr;
    }

  private:
    const std::vector<BroadcastTransition>& table(std::size_t variant) const {
        return variant == 0 ? nd_.spec.transitions : nd_.delta1;
    }
    NondetSpec nd_;
};

struct CoinTupleHash {
    std::size_t operator()(const CoinTuple& t) const {
        return (static_cast<std::size_t>(t.q) * 31 + t.type) * 0x9e3779b97f4a7c15ull + t.node;
    }
};

class CoinView : public Protocol {
  public:
    explicit CoinView(std::shared_ptr<ChoiceProtocol> inner)
        : inner_(std::move(inner)), rules_(*inner_) {
        input_states_.resize(inner_->input_symbols().size());
        for (std::size_t i = 0; i < input_states_.size(); ++i)
            input_states_[i] = intern({inner_->input_state(i), 0, rules_.layout.root});
    }

    std::size_t state_count() const override { return tuples_.size(); }
    std::string state_label(StateId q) const override { return rules_.label(tuples_[q]); }
    StateId successor(StateId q) override { return intern(rules_.succ(tuples_[q])); }
    StateId respond(StateId q, StateId s) override {
        CoinTuple actor = tuples_[q];
        CoinTuple target = tuples_[s];
        return intern(rules_.respond(actor, target));
    }
    bool silent(StateId q) override { return rules_.silent(tuples_[q]); }
    const std::vector<std::string>& input_symbols() const override {
        return inner_->input_symbols();
    }
    StateId input_state(std::size_t symbol) override { return input_states_.at(symbol); }
    bool accepting(StateId q) const override { return inner_->accepting(tuples_[q].q); }
    bool thread_safe() const override { return false; }

    const CoinTuple& tuple(StateId q) const { return tuples_[q]; }
    const CoinLayout& layout() const { return rules_.layout; }
    StateId reintern(StateId like, StateId new_inner) {
        CoinTuple t = tuples_[like];
        t.q = new_inner;
        return intern(t);
    }

  private:
    StateId intern(const CoinTuple& t) {
        auto it = index_.find(t);
        if (it != index_.end()) return it->second;
        StateId id = static_cast<StateId>(tuples_.size());
        tuples_.push_back(t);
        index_.emplace(t, id);
        return id;
    }

    std::shared_ptr<ChoiceProtocol> inner_;
    CoinRules rules_;
    std::vector<CoinTuple> tuples_;
    std::unordered_map<CoinTuple, StateId, CoinTupleHash> index_;
    std::vector<StateId> input_states_;
};

} // namespace

std::shared_ptr<ChoiceProtocol> choice_view(const NondetSpec& nd) {
    return std::make_shared<ExplicitChoice>(nd);
}

std::shared_ptr<Protocol> coin_wrap(std::shared_ptr<ChoiceProtocol> inner) {
    return std::make_shared<CoinView>(std::move(inner));
}

ProtocolSpec with_coin(const NondetSpec& nd) {
    nd.validate();
    ExplicitChoice inner(nd);
    CoinRules rules(inner);
    const CoinLayout& ly = rules.layout;

    std::size_t nq = inner.state_count();
    std::vector<std::uint32_t> nodes;
    for (std::uint32_t v = 1; v < ly.node_count(); ++v) nodes.push_back(v);
    auto id_of = [&](const CoinTuple& t) -> StateId {
        std::uint32_t node_pos = t.node - 1;
        return static_cast<StateId>((t.q * kTypes + t.type) * nodes.size() + node_pos);
    };

    ProtocolSpec out;
    out.states.resize(nq * kTypes * nodes.size());
    out.accepting.resize(out.states.size());
    out.transitions.resize(out.states.size());
    for (StateId q = 0; q < nq; ++q)
        for (int ty = 0; ty < kTypes; ++ty)
            for (std::uint32_t node : nodes) {
                CoinTuple t{q, ty, node};
                StateId id = id_of(t);
                out.states[id] = rules.label(t);
                out.accepting[id] = inner.accepting(q);
            }
    const auto* inner_globals = inner.global_labels();
    {
        std::vector<std::string> globals;
        for (std::uint32_t node : nodes) {
            if (inner_globals)
                for (const auto& g : *inner_globals) globals.push_back(g + "/" + ly.label(node));
            else
                globals.push_back(ly.label(node));
        }
        std::sort(globals.begin(), globals.end());
        globals.erase(std::unique(globals.begin(), globals.end()), globals.end());
        out.globals = std::move(globals);
    }
    for (StateId q = 0; q < nq; ++q)
        for (int ty = 0; ty < kTypes; ++ty)
            for (std::uint32_t node : nodes) {
                CoinTuple t{q, ty, node};
                StateId id = id_of(t);
                if (rules.silent(t)) {
                    out.transitions[id] = {id, {}};
                    continue;
                }
                BroadcastTransition bt;
                bt.successor = id_of(rules.succ(t));
                for (StateId s = 0; s < nq; ++s)
                    for (int sty = 0; sty < kTypes; ++sty) {
                        CoinTuple from{s, sty, node};
                        CoinTuple to = rules.respond(t, from);
                        if (!(to == from)) bt.response.moves.emplace_back(id_of(from), id_of(to));
                    }
                bt.response.normalize();
                out.transitions[id] = std::move(bt);
            }
    for (std::size_t i = 0; i < inner.input_symbols().size(); ++i) {
        out.input_alphabet.push_back(inner.input_symbols()[i]);
        out.input_map.push_back(id_of({inner.input_state(i), 0, ly.root}));
    }
    out.validate();
    return out;
}

StateId coin_inner_state(Protocol& wrapped, StateId q) {
    auto* view = dynamic_cast<CoinView*>(&wrapped);
    if (!view) fail(Err::Validation, "not a coin-wrapped protocol");
    return view->tuple(q).q;
}

StateId coin_reintern(Protocol& wrapped, StateId like, StateId new_inner) {
    auto* view = dynamic_cast<CoinView*>(&wrapped);
    if (!view) fail(Err::Validation, "not a coin-wrapped protocol");
    return view->reintern(like, new_inner);
}

CoinStateInfo coin_state_info(Protocol& wrapped, StateId q) {
    CoinStateInfo info;
    auto* view = dynamic_cast<CoinView*>(&wrapped);
    if (view) {
        const CoinTuple& t = view->tuple(q);
        info.valid = true;
        info.type = t.type;
        info.at_exec = view->layout().valid_leaf(t.node);
        info.variant = info.at_exec ? view->layout().leaf_index(t.node) : 0;
        return info;
    }
    // explicit with_coin output: decode from the label
    std::string label = wrapped.state_label(q);
    auto at = label.rfind('@');
    if (at == std::string::npos) return info;
    auto lsep = label.rfind('/', at);
    auto gsep = label.rfind('/');
    if (lsep == std::string::npos) return info;
    std::string type = label.substr(lsep + 1, at - lsep - 1);
    std::string node = gsep > at ? label.substr(gsep + 1) : label.substr(at + 1);
    if (type.size() != 1) return info;
    const char* pos = std::strchr(kTypeNames, type[0]);
    if (!pos) return info;
    info.valid = true;
    info.type = static_cast<int>(pos - kTypeNames);
    if (node != "*" && !node.empty() && node.find_first_not_of("01") == std::string::npos) {
        info.at_exec = true;
        info.variant = 0;
        for (char c : node) info.variant = info.variant * 2 + (c - '0');
    }
    return info;
}

// ---- rendezvous ----

NondetSpec with_rendezvous(const RendezvousSpec& rs) {
    rs.validate();
    const ProtocolSpec& base = rs.spec;
    std::size_t n = base.states.size();

    NondetSpec out;
    // originals keep their ids; then tilde states; then marks r.q at
    // n + n + r*n + q
    auto tilde = [&](StateId q) { return static_cast<StateId>(n + q); };
    auto mark = [&](StateId r, StateId q) { return static_cast<StateId>(2 * n + r * n + q); };

    for (StateId q = 0; q < n; ++q) out.spec.states.push_back(base.states[q]);
    for (StateId q = 0; q < n; ++q) out.spec.states.push_back("~" + base.states[q]);
    for (StateId r = 0; r < n; ++r)
        for (StateId q = 0; q < n; ++q)
            out.spec.states.push_back(base.states[r] + "." + base.states[q]);

    std::size_t total = out.spec.states.size();
    out.spec.accepting.assign(total, false);
    for (StateId q = 0; q < n; ++q) out.spec.accepting[q] = base.accepting[q];
    out.spec.input_alphabet = base.input_alphabet;
    out.spec.input_map = base.input_map;

    out.spec.transitions.resize(total);
    out.delta1.resize(total);
    for (StateId q = 0; q < total; ++q) {
        out.spec.transitions[q] = {q, {}};
        out.delta1[q] = {q, {}};
    }
    // delta0 on originals: the base broadcasts
    for (StateId q = 0; q < n; ++q) out.spec.transitions[q] = base.transitions[q];
    // delta1 on originals: activate a rendezvous
    for (StateId q = 0; q < n; ++q) {
        BroadcastTransition t;
        t.successor = tilde(q);
        for (StateId r = 0; r < n; ++r) t.response.moves.emplace_back(r, mark(r, q));
        t.response.normalize();
        out.delta1[q] = std::move(t);
    }
    // marks deactivate in both maps
    for (StateId r = 0; r < n; ++r)
        for (StateId q = 0; q < n; ++q) {
            auto [s, t2] = rs.apply(q, r);
            BroadcastTransition t;
            t.successor = s;
            t.response.moves.emplace_back(tilde(q), t2);
            for (StateId u = 0; u < n; ++u) t.response.moves.emplace_back(mark(u, q), u);
            t.response.normalize();
            out.spec.transitions[mark(r, q)] = t;
            out.delta1[mark(r, q)] = std::move(t);
        }
    out.validate();
    return out;
}

Configuration population_step(const RendezvousSpec& rs, const Configuration& c, Rng& rng) {
    if (c.size() < 2) fail(Err::EmptyPopulation, "rendezvous needs two agents");
    auto pick = [&rng](const Configuration& conf) {
        std::uint64_t target = rng.below(conf.size());
        for (const auto& [s, k] : conf.entries()) {
            if (target < k) return s;
            target -= k;
        }
        return conf.entries().back().first;
    };
    Configuration work = c;
    StateId q1 = pick(work);
    work.add(q1, -1);
    StateId q2 = pick(work);
    auto [r1, r2] = rs.apply(q1, q2);
    Configuration out = c;
    out.add(q1, -1);
    out.add(q2, -1);
    out.add(r1, 1);
    out.add(r2, 1);
    return out;
}

} // namespace bcp
