#include "bcp/cmsim.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace bcp {

namespace {

// Factored protocol as (local, global) tables; the explicit spec is the
// label grid local@global.
struct FactoredTables {
    std::vector<std::string> locals;
    std::vector<std::string> globals;
    struct T {
        bool silent = true;
        std::uint32_t succ_local = 0;
        std::uint32_t succ_global = 0;
        std::vector<std::uint32_t> map; // total local -> local
    };
    std::vector<T> at; // index g * L + l

    std::size_t L() const { return locals.size(); }
    std::size_t G() const { return globals.size(); }
    T& entry(std::size_t l, std::size_t g) { return at[g * L() + l]; }
    const T& entry(std::size_t l, std::size_t g) const { return at[g * L() + l]; }

    void init_silent() { at.assign(L() * G(), T{}); }

    std::uint32_t local_index(std::string_view name) const {
        for (std::uint32_t i = 0; i < locals.size(); ++i)
            if (locals[i] == name) return i;
        fail(Err::UnknownState, "no local '" + std::string(name) + "'");
    }
    std::uint32_t global_index(std::string_view name) const {
        for (std::uint32_t i = 0; i < globals.size(); ++i)
            if (globals[i] == name) return i;
        fail(Err::UnknownState, "no global '" + std::string(name) + "'");
    }
};

ProtocolSpec spec_from_tables(const FactoredTables& t) {
    ProtocolSpec out;
    std::size_t L = t.L(), G = t.G();
    auto id = [L](std::size_t l, std::size_t g) { return static_cast<StateId>(g * L + l); };
    out.states.resize(L * G);
    out.accepting.assign(L * G, false);
    out.transitions.resize(L * G);
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t l = 0; l < L; ++l) out.states[id(l, g)] = t.locals[l] + "@" + t.globals[g];
    out.globals = t.globals;
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t l = 0; l < L; ++l) {
            const auto& e = t.entry(l, g);
            StateId src = id(l, g);
            if (e.silent) {
                out.transitions[src] = {src, {}};
                continue;
            }
            BroadcastTransition bt;
            bt.successor = id(e.succ_local, e.succ_global);
            for (std::size_t tl = 0; tl < L; ++tl) {
                StateId from = id(tl, g);
                StateId to = id(e.map[tl], e.succ_global);
                if (from != to) bt.response.moves.emplace_back(from, to);
            }
            bt.response.normalize();
            out.transitions[src] = std::move(bt);
        }
    out.validate();
    return out;
}

std::vector<std::uint32_t> identity_map(std::size_t n) {
    std::vector<std::uint32_t> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = static_cast<std::uint32_t>(i);
    return m;
}

// ---- the one-step machine ----

constexpr const char* kStepLocals[] = {"0", "h", "1", "2", "s"};
constexpr const char* kStepGlobals[] = {"mul2", "inc", "divmod2", "iszero",
                                        "done0", "done1", "high"};
enum StepLocal { S0 = 0, SH, S1, S2, SS };
enum StepGlobal { GMul = 0, GInc, GDiv, GZero, GDone0, GDone1, GHigh };

FactoredTables step_tables() {
    FactoredTables t;
    t.locals.assign(std::begin(kStepLocals), std::end(kStepLocals));
    t.globals.assign(std::begin(kStepGlobals), std::end(kStepGlobals));
    t.init_silent();
    auto set = [&](StepLocal sl, StepGlobal sg, StepLocal tl, StepGlobal tg,
                   std::initializer_list<std::pair<StepLocal, StepLocal>> moves) {
        auto& e = t.entry(sl, sg);
        e.silent = false;
        e.succ_local = tl;
        e.succ_global = tg;
        e.map = identity_map(t.L());
        for (auto [a, b] : moves) e.map[a] = b;
    };
    // command openers, b in {0,1}
    set(S0, GMul, S0, GDone0, {{S1, S2}});
    set(S1, GMul, S2, GDone0, {{S1, S2}});
    set(S0, GDiv, S0, GDone0, {{S1, SH}});
    set(S1, GDiv, SH, GDone0, {{S1, SH}});
    set(S0, GInc, S0, GHigh, {});
    set(S1, GInc, S1, GHigh, {});
    set(S1, GZero, S1, GDone1, {});
    set(S0, GZero, S0, GDone0, {{S1, SS}});
    // normalizers
    set(S0, GHigh, S1, GDone0, {});
    set(S2, GDone0, S1, GHigh, {});
    set(SH, GDone0, S0, GDone1, {});
    set(SH, GDone1, S1, GDone0, {});
    set(SS, GDone0, S1, GDone1, {{SS, S1}});
    return t;
}

std::pair<std::string, std::string> split_state(const std::string& label) {
    auto pos = label.rfind('@');
    if (pos == std::string::npos) return {label, ""};
    return {label.substr(0, pos), label.substr(pos + 1)};
}

std::string local_head(const std::string& local) {
    auto pos = local.find(':');
    return pos == std::string::npos ? local : local.substr(0, pos);
}

} // namespace

ProtocolSpec step_bp() { return spec_from_tables(step_tables()); }

Configuration step_config(const ProtocolSpec& spec, const std::string& global_label,
                          std::uint64_t ones, std::uint64_t n) {
    if (ones > n) fail(Err::Validation, "contribution exceeds the population");
    Configuration c;
    if (ones > 0) c.add(spec.state_index("1@" + global_label), static_cast<std::int64_t>(ones));
    if (n - ones > 0)
        c.add(spec.state_index("0@" + global_label), static_cast<std::int64_t>(n - ones));
    return c;
}

std::optional<std::pair<bool, std::uint64_t>> step_final(const ProtocolSpec& spec,
                                                         const Configuration& config) {
    std::optional<bool> done;
    std::uint64_t ones = 0;
    for (const auto& [q, cnt] : config.entries()) {
        auto [local, global] = split_state(spec.states[q]);
        bool b;
        if (global == "done0")
            b = false;
        else if (global == "done1")
            b = true;
        else
            return std::nullopt;
        if (done && *done != b) return std::nullopt;
        done = b;
        if (local == "1")
            ones += cnt;
        else if (local != "0")
            return std::nullopt;
    }
    if (!done) return std::nullopt;
    return std::make_pair(*done, ones);
}

bool step_failing(const ProtocolSpec& spec, const Configuration& config) {
    for (const auto& [q, cnt] : config.entries()) {
        (void)cnt;
        if (local_head(split_state(spec.states[q]).first) == "bot") return true;
    }
    return false;
}

std::uint64_t step_potential(const ProtocolSpec& spec, const Configuration& config) {
    std::uint64_t phi = 0;
    bool high = false;
    for (const auto& [q, cnt] : config.entries()) {
        auto [local, global] = split_state(spec.states[q]);
        std::string head = local_head(local);
        if (head == "h" || head == "2" || head == "s") phi += 2 * cnt;
        if (global == "high" || global.rfind("high.", 0) == 0) high = true;
    }
    return phi + (high ? 1 : 0);
}

std::uint64_t step_value_x2(const ProtocolSpec& spec, const Configuration& config) {
    std::uint64_t v = 0;
    bool high = false;
    for (const auto& [q, cnt] : config.entries()) {
        auto [local, global] = split_state(spec.states[q]);
        std::string head = local_head(local);
        if (head == "1")
            v += 2 * cnt;
        else if (head == "h")
            v += cnt;
        else if (head == "2")
            v += 4 * cnt;
        if (global == "high" || global.rfind("high.", 0) == 0) high = true;
    }
    return v + (high ? 2 : 0);
}

// ---- clocks ----

namespace {

constexpr const char* kClockLocals[] = {"0", "1", "c1", "c2", "c3", "c1p", "c2p"};
enum ClockLocal { C0 = 0, C1, CC1, CC2, CC3, CC1P, CC2P };

FactoredTables clock_tables_single() {
    FactoredTables t;
    t.locals.assign(std::begin(kClockLocals), std::end(kClockLocals));
    t.globals = {"."};
    t.init_silent();
    auto set = [&](ClockLocal sl, ClockLocal tl,
                   std::initializer_list<std::pair<ClockLocal, ClockLocal>> moves) {
        auto& e = t.entry(sl, 0);
        e.silent = false;
        e.succ_local = tl;
        e.succ_global = 0;
        e.map = identity_map(t.L());
        for (auto [a, b] : moves) e.map[a] = b;
    };
    set(C0, CC1P, {{C0, CC2P}});                 // the leader activates everyone
    set(CC2P, CC3, {{CC2P, CC2}, {CC1P, CC1}});  // one activated agent gets infected
    set(CC3, CC3, {{CC2, CC2P}, {CC1, CC1P}});   // the infected reactivate the rest
    set(CC1P, C1, {{CC2P, C1}, {CC3, C1}});      // activated leader: time is up
    return t;
}

} // namespace

ClockBp clock_bp() {
    FactoredTables t = clock_tables_single();
    // single-phase clock: drop the artificial global
    SpecBuilder b;
    std::vector<StateId> ids;
    for (const auto& l : t.locals) ids.push_back(b.state(l));
    for (std::size_t l = 0; l < t.L(); ++l) {
        const auto& e = t.entry(l, 0);
        if (e.silent) continue;
        std::vector<std::pair<StateId, StateId>> moves;
        for (std::size_t a = 0; a < t.L(); ++a)
            if (e.map[a] != a) moves.emplace_back(ids[a], ids[e.map[a]]);
        b.transition(ids[l], ids[e.succ_local], std::move(moves));
    }
    return {b.finish(), "0", "1"};
}

namespace {

FactoredTables chained_tables(int k) {
    if (k < 1) fail(Err::Validation, "clock strength must be positive");
    std::size_t phases = 28u * static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
    FactoredTables base = clock_tables_single();
    FactoredTables t;
    t.locals = base.locals;
    for (std::size_t p = 1; p <= phases; ++p) t.globals.push_back("p" + std::to_string(p));
    t.init_silent();
    for (std::size_t p = 0; p < phases; ++p) {
        for (std::size_t l = 0; l < t.L(); ++l) {
            const auto& e = base.entry(l, 0);
            auto& out = t.entry(l, p);
            if (l == C1) {
                // phase advance: every finished agent restarts in the next phase
                if (p + 1 < phases) {
                    out.silent = false;
                    out.succ_local = C0;
                    out.succ_global = static_cast<std::uint32_t>(p + 1);
                    out.map = identity_map(t.L());
                    out.map[C1] = C0;
                }
                continue;
            }
            if (e.silent) continue;
            out.silent = false;
            out.succ_local = e.succ_local;
            out.succ_global = static_cast<std::uint32_t>(p);
            out.map = e.map;
        }
    }
    return t;
}

} // namespace

ClockBp chained_clock_bp(int k) {
    FactoredTables t = chained_tables(k);
    return {spec_from_tables(t), "0@p1", "1@" + t.globals.back()};
}

ClockRun run_clock(const ClockBp& clock, std::uint64_t n, Rng& rng, std::uint64_t max_steps) {
    ExplicitProtocol view(clock.spec);
    StateId init = clock.spec.state_index(clock.initial_label);
    StateId fin = clock.spec.state_index(clock.final_label);
    Configuration c = Configuration::single(init, n);
    ClockRun res;
    while (res.time < max_steps) {
        std::uint64_t finals = c.count(fin);
        if (finals == n) return res;
        if (finals > 0) res.early_final = true;
        auto [q, next] = sample_step(view, c, rng);
        (void)q;
        c = std::move(next);
        ++res.time;
    }
    res.timeout = true;
    return res;
}

// ---- hardened step ----

namespace {

struct HardenedLayout {
    FactoredTables t;
    std::size_t bot = 0;          // local index of the failure state
    std::size_t phases = 0;
    // composite local (sl, cl) -> index
    std::size_t loc(std::size_t sl, std::size_t cl) const { return sl * 7 + cl; }
    // running global (sg, p); true rets appended at the end
    std::size_t run_g(std::size_t sg, std::size_t p) const { return sg * phases + p; }
    std::size_t true_ret(bool b) const { return 7 * phases + (b ? 1 : 0); }
};

HardenedLayout hardened_tables(int k) {
    FactoredTables step = step_tables();
    FactoredTables chain = chained_tables(k);
    HardenedLayout h;
    h.phases = chain.G();
    FactoredTables& t = h.t;
    for (std::size_t sl = 0; sl < step.L(); ++sl)
        for (std::size_t cl = 0; cl < chain.L(); ++cl) {
            if (cl == C0 && sl == S0)
                t.locals.push_back("0");
            else if (cl == C0 && sl == S1)
                t.locals.push_back("1");
            else
                t.locals.push_back(step.locals[sl] + ":" + chain.locals[cl]);
        }
    h.bot = t.locals.size();
    t.locals.push_back("bot");
    for (std::size_t sg = 0; sg < step.G(); ++sg)
        for (std::size_t p = 0; p < h.phases; ++p)
            t.globals.push_back(std::string(kStepGlobals[sg]) + "." + chain.globals[p]);
    t.globals.push_back("done0");
    t.globals.push_back("done1");
    t.init_silent();

    std::size_t L = t.L();
    for (std::size_t sg = 0; sg < step.G(); ++sg)
        for (std::size_t p = 0; p < h.phases; ++p) {
            std::size_t g = h.run_g(sg, p);
            bool ret_g = sg == GDone0 || sg == GDone1;
            for (std::size_t sl = 0; sl < step.L(); ++sl)
                for (std::size_t cl = 0; cl < chain.L(); ++cl) {
                    std::size_t l = h.loc(sl, cl);
                    auto& out = t.entry(l, g);
                    if (ret_g && p + 1 == h.phases && cl == C1) {
                        // the clock fired under a completed command: move to
                        // the true completion global; stragglers fail
                        out.silent = false;
                        out.succ_local = sl == S0 || sl == S1
                                             ? static_cast<std::uint32_t>(h.loc(sl, C0))
                                             : static_cast<std::uint32_t>(h.bot);
                        out.succ_global = static_cast<std::uint32_t>(h.true_ret(sg == GDone1));
                        out.map.assign(L, 0);
                        for (std::size_t tl = 0; tl < step.L(); ++tl)
                            for (std::size_t tc = 0; tc < chain.L(); ++tc)
                                out.map[h.loc(tl, tc)] =
                                    (tl == S0 || tl == S1) && tc == C1
                                        ? static_cast<std::uint32_t>(h.loc(tl, C0))
                                        : static_cast<std::uint32_t>(h.bot);
                        out.map[h.bot] = static_cast<std::uint32_t>(h.bot);
                        continue;
                    }
                    const auto& se = step.entry(sl, sg);
                    const auto& ce = chain.entry(cl, p);
                    if (se.silent && ce.silent) continue;
                    std::size_t sg2 = se.silent ? sg : se.succ_global;
                    std::size_t p2 = ce.silent ? p : ce.succ_global;
                    std::size_t sl2 = se.silent ? sl : se.succ_local;
                    std::size_t cl2 = ce.silent ? cl : ce.succ_local;
                    out.silent = false;
                    out.succ_local = static_cast<std::uint32_t>(h.loc(sl2, cl2));
                    out.succ_global = static_cast<std::uint32_t>(h.run_g(sg2, p2));
                    out.map.assign(L, 0);
                    for (std::size_t tl = 0; tl < step.L(); ++tl)
                        for (std::size_t tc = 0; tc < chain.L(); ++tc) {
                            std::size_t tl2 = se.silent ? tl : se.map[tl];
                            std::size_t tc2 = ce.silent ? tc : ce.map[tc];
                            out.map[h.loc(tl, tc)] = static_cast<std::uint32_t>(h.loc(tl2, tc2));
                        }
                    out.map[h.bot] = static_cast<std::uint32_t>(h.bot);
                }
        }
    return h;
}

} // namespace

ProtocolSpec hardened_step_bp(int k) { return spec_from_tables(hardened_tables(k).t); }

std::string hardened_cmd_global(const std::string& cmd) { return cmd + ".p1"; }

// ---- full counter-machine compilation ----

namespace {

struct MachineGlobal {
    bool at_init = true;
    std::uint8_t branch = 0;     // table picked at the load, 0/1
    std::uint32_t cm_state = 0;
    std::uint32_t hg = 0;        // hardened global (when running)

    bool operator==(const MachineGlobal&) const = default;
};

struct MachineGlobalHash {
    std::size_t operator()(const MachineGlobal& g) const {
        return ((g.at_init ? 1u : 0u) + 2u * g.branch + 4u * g.cm_state) * 0x9e3779b9u + g.hg;
    }
};

// bundled machine states: (remembered input marker, l slots) x machine global
class BundledView : public ChoiceProtocol {
  public:
    BundledView(CounterMachine cm, int k, std::uint32_t arity)
        : cm_(std::move(cm)), arity_(arity), hard_(hardened_tables(k)) {
        l_ = cm_.counters;
        hl_base_ = l_;
        bot_slot_ = hl_base_ + static_cast<std::uint32_t>(hard_.bot);
        zero_slot_ = hl_base_ + static_cast<std::uint32_t>(hard_.loc(S0, C0));
        one_slot_ = hl_base_ + static_cast<std::uint32_t>(hard_.loc(S1, C0));
        for (std::uint32_t i = 0; i < arity_; ++i)
            input_symbols_.push_back("x" + std::to_string(i + 1));
        for (std::uint32_t i = 0; i < arity_; ++i) {
            std::vector<std::uint32_t> key = make_key(init_global(), i, initial_slots(i));
            input_states_.push_back(intern(key));
        }
    }

    // ---- ChoiceProtocol ----

    std::size_t variant_count() const override { return 2 * static_cast<std::size_t>(l_); }
    std::size_t state_count() const override { return keys_.size(); }

    std::string state_label(StateId q) const override {
        const auto& key = keys_[q];
        const MachineGlobal& g = globals_[key[0]];
        std::ostringstream os;
        os << "r" << (key[1] + 1);
        for (std::uint32_t s = 0; s < l_; ++s) os << "/" << slot_label(key[2 + s]);
        os << "@" << global_label(g);
        return os.str();
    }

    StateId successor(StateId q, std::size_t variant) override {
        auto [key, changed] = delta(keys_[q], variant);
        (void)changed;
        return intern(key);
    }

    StateId respond(StateId q, std::size_t variant, StateId s) override {
        const auto& actor = keys_[q];
        const auto& target = keys_[s];
        if (actor[0] != target[0]) return s; // different machine globals: stay
        std::vector<std::uint32_t> key = respond_key(actor, variant, target);
        return intern(key);
    }

    bool silent(StateId q, std::size_t variant) override {
        const auto& key = keys_[q];
        if (has_bot(key)) return false; // reset
        const MachineGlobal& g = globals_[key[0]];
        std::uint32_t slot = key[2 + variant / 2];
        if (g.at_init) {
            const CmTransition& t = table(variant % 2)[g.cm_state];
            return !(slot == t.counter || slot == zero_slot_);
        }
        if (is_true_ret(g.hg)) return !(slot == one_slot_ || slot == zero_slot_);
        if (slot < hl_base_) return true; // markers idle during a step
        const auto& e = hard_.t.entry(slot - hl_base_, g.hg);
        return e.silent;
    }

    const std::vector<std::string>& input_symbols() const override { return input_symbols_; }
    StateId input_state(std::size_t symbol) override { return input_states_.at(symbol); }
    bool accepting(StateId q) const override {
        return globals_[keys_[q][0]].cm_state == cm_.state1;
    }
    const std::vector<std::string>* global_labels() const override { return &global_label_list_; }

    // ---- introspection ----

    const CounterMachine& cm() const { return cm_; }
    std::uint32_t slots() const { return l_; }

    std::optional<std::string> cm_state_of(StateId q) const {
        return cm_.state_names[globals_[keys_[q][0]].cm_state];
    }
    bool has_failure_state(StateId q) const { return has_bot(keys_[q]); }
    std::uint32_t halt_value(StateId q) const {
        return globals_[keys_[q][0]].cm_state;
    }
    std::uint64_t marker_count(StateId q, std::uint32_t counter) const {
        const auto& key = keys_[q];
        std::uint64_t n = 0;
        for (std::uint32_t s = 0; s < l_; ++s)
            if (key[2 + s] == counter) ++n;
        return n;
    }
    StateId with_failed_slot(StateId q, std::uint32_t slot) {
        auto key = keys_[q];
        key[2 + slot] = bot_slot_;
        return intern(key);
    }
    std::string fingerprint(StateId q) const { return state_label(q); }
    std::uint32_t cm_state_index(StateId q) const { return globals_[keys_[q][0]].cm_state; }

  private:
    std::uint32_t init_global() {
        return intern_global(MachineGlobal{true, 0, cm_.init_state, 0});
    }
    std::vector<std::uint32_t> initial_slots(std::uint32_t marker) const {
        std::vector<std::uint32_t> slots(l_, zero_slot_);
        slots[0] = marker;
        return slots;
    }
    std::vector<std::uint32_t> make_key(std::uint32_t glob, std::uint32_t r0,
                                        const std::vector<std::uint32_t>& slots) const {
        std::vector<std::uint32_t> key;
        key.reserve(2 + slots.size());
        key.push_back(glob);
        key.push_back(r0);
        for (auto s : slots) key.push_back(s);
        return key;
    }

    const std::vector<CmTransition>& table(int branch) const {
        return branch ? cm_.t2 : cm_.t1;
    }

    bool has_bot(const std::vector<std::uint32_t>& key) const {
        for (std::uint32_t s = 0; s < l_; ++s)
            if (key[2 + s] == bot_slot_) return true;
        return false;
    }

    bool is_true_ret(std::uint32_t hg) const {
        return hg >= 7 * hard_.phases;
    }
    bool true_ret_value(std::uint32_t hg) const { return hg == hard_.true_ret(true); }

    std::string slot_label(std::uint32_t slot) const {
        if (slot < hl_base_) return "m" + std::to_string(slot + 1);
        return hard_.t.locals[slot - hl_base_];
    }
    std::string global_label(const MachineGlobal& g) const {
        if (g.at_init) return "init." + cm_.state_names[g.cm_state];
        return hard_.t.globals[g.hg] + "." + cm_.state_names[g.cm_state] + ".T" +
               std::to_string(g.branch + 1);
    }

    // the shared-global successor and the slot map of variant `variant`
    struct Action {
        bool reset = false;
        bool noop = false;
        std::uint32_t new_glob = 0;
        // slot mapping for receivers (and non-acting slots)
        std::function<std::uint32_t(std::uint32_t)> map;
        // explicit new value for the acting slot
        std::optional<std::uint32_t> actor_slot;
    };

    Action action_of(const std::vector<std::uint32_t>& actor, std::size_t variant) {
        Action a;
        const MachineGlobal& g = globals_[actor[0]];
        std::uint32_t slot = actor[2 + variant / 2];
        int branch = static_cast<int>(variant % 2);
        if (has_bot(actor)) {
            a.reset = true;
            a.new_glob = init_global();
            return a;
        }
        if (g.at_init) {
            const CmTransition& t = table(branch)[g.cm_state];
            if (!(slot == t.counter || slot == zero_slot_)) {
                a.noop = true;
                return a;
            }
            MachineGlobal g2;
            g2.at_init = false;
            g2.branch = static_cast<std::uint8_t>(branch);
            g2.cm_state = g.cm_state;
            g2.hg = static_cast<std::uint32_t>(hard_.run_g(static_cast<std::size_t>(t.cmd), 0));
            a.new_glob = intern_global(g2);
            std::uint32_t marker = t.counter;
            std::uint32_t one = one_slot_;
            a.map = [marker, one](std::uint32_t v) { return v == marker ? one : v; };
            a.actor_slot = slot == marker ? one : slot;
            return a;
        }
        if (is_true_ret(g.hg)) {
            const CmTransition& t = table(g.branch)[g.cm_state];
            if (!(slot == one_slot_ || slot == zero_slot_)) {
                a.noop = true;
                return a;
            }
            bool b = true_ret_value(g.hg);
            MachineGlobal g2;
            g2.at_init = true;
            g2.cm_state = b ? t.succ1 : t.succ0;
            a.new_glob = intern_global(g2);
            std::uint32_t marker = t.counter;
            std::uint32_t one = one_slot_;
            a.map = [marker, one](std::uint32_t v) { return v == one ? marker : v; };
            a.actor_slot = slot == one_slot_ ? marker : slot;
            return a;
        }
        // a running hardened episode
        if (slot < hl_base_) {
            a.noop = true;
            return a;
        }
        const auto& e = hard_.t.entry(slot - hl_base_, g.hg);
        if (e.silent) {
            a.noop = true;
            return a;
        }
        MachineGlobal g2 = g;
        g2.hg = e.succ_global;
        a.new_glob = intern_global(g2);
        std::uint32_t base = hl_base_;
        const std::vector<std::uint32_t>* map = &e.map;
        a.map = [base, map](std::uint32_t v) {
            if (v < base) return v; // markers ride along
            return base + (*map)[v - base];
        };
        a.actor_slot = hl_base_ + e.succ_local;
        return a;
    }

    std::pair<std::vector<std::uint32_t>, bool> delta(const std::vector<std::uint32_t>& actor,
                                                      std::size_t variant) {
        Action a = action_of(actor, variant);
        if (a.noop) return {actor, false};
        std::vector<std::uint32_t> key = actor;
        if (a.reset) {
            key[0] = a.new_glob;
            auto slots = initial_slots(key[1]);
            for (std::uint32_t s = 0; s < l_; ++s) key[2 + s] = slots[s];
            return {key, true};
        }
        key[0] = a.new_glob;
        for (std::uint32_t s = 0; s < l_; ++s) key[2 + s] = a.map(key[2 + s]);
        key[2 + variant / 2] = *a.actor_slot;
        return {key, true};
    }

    std::vector<std::uint32_t> respond_key(const std::vector<std::uint32_t>& actor,
                                           std::size_t variant,
                                           const std::vector<std::uint32_t>& target) {
        Action a = action_of(actor, variant);
        if (a.noop) return target;
        std::vector<std::uint32_t> key = target;
        if (a.reset) {
            key[0] = a.new_glob;
            auto slots = initial_slots(key[1]);
            for (std::uint32_t s = 0; s < l_; ++s) key[2 + s] = slots[s];
            return key;
        }
        key[0] = a.new_glob;
        for (std::uint32_t s = 0; s < l_; ++s) key[2 + s] = a.map(key[2 + s]);
        return key;
    }

    StateId intern(const std::vector<std::uint32_t>& key) {
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        StateId id = static_cast<StateId>(keys_.size());
        keys_.push_back(key);
        index_.emplace(key, id);
        return id;
    }
    std::uint32_t intern_global(const MachineGlobal& g) {
        auto it = glob_index_.find(g);
        if (it != glob_index_.end()) return it->second;
        std::uint32_t id = static_cast<std::uint32_t>(globals_.size());
        globals_.push_back(g);
        glob_index_.emplace(g, id);
        global_label_list_.push_back(global_label(g));
        return id;
    }

    struct KeyHash {
        std::size_t operator()(const std::vector<std::uint32_t>& k) const {
            std::size_t h = 0xcbf29ce484222325ull;
            for (auto v : k) h = (h ^ v) * 0x100000001b3ull;
            return h;
        }
    };

    CounterMachine cm_;
    std::uint32_t arity_;
    HardenedLayout hard_;
    std::uint32_t l_ = 1;
    std::uint32_t hl_base_ = 0, bot_slot_ = 0, zero_slot_ = 0, one_slot_ = 0;

    std::vector<MachineGlobal> globals_;
    std::unordered_map<MachineGlobal, std::uint32_t, MachineGlobalHash> glob_index_;
    std::vector<std::string> global_label_list_;
    std::vector<std::vector<std::uint32_t>> keys_;
    std::unordered_map<std::vector<std::uint32_t>, StateId, KeyHash> index_;
    std::vector<std::string> input_symbols_;
    std::vector<StateId> input_states_;
};

} // namespace

struct CmBcp::Impl {
    std::shared_ptr<BundledView> bundled;
};

CmBcp::CmBcp(CounterMachine cm, int k, std::uint32_t arity) {
    cm.validate();
    if (!cm.n_bounded) fail(Err::Validation, "compilation requires an n-bounded machine");
    if (arity == 0) arity = cm.counters;
    if (arity > cm.counters) fail(Err::ArityMismatch, "predicate arity exceeds counter count");
    impl_ = std::make_shared<Impl>();
    impl_->bundled = std::make_shared<BundledView>(std::move(cm), k, arity);
    proto_ = coin_wrap(impl_->bundled);
}

Configuration CmBcp::initial(const InputMap& input) { return init_config(*proto_, input); }

std::optional<std::string> CmBcp::cm_state(const Configuration& config) const {
    std::optional<std::string> state;
    for (const auto& [q, cnt] : config.entries()) {
        (void)cnt;
        StateId inner = coin_inner_state(*proto_, q);
        auto s = impl_->bundled->cm_state_of(inner);
        if (!s) return std::nullopt;
        if (state && *state != *s) return std::nullopt;
        state = s;
    }
    return state;
}

std::optional<bool> CmBcp::halted(const Configuration& config) const {
    auto s = cm_state(config);
    if (!s) return std::nullopt;
    if (*s == "0") return false;
    if (*s == "1") return true;
    return std::nullopt;
}

bool CmBcp::has_failure(const Configuration& config) const {
    for (const auto& [q, cnt] : config.entries()) {
        (void)cnt;
        if (impl_->bundled->has_failure_state(coin_inner_state(*proto_, q))) return true;
    }
    return false;
}

std::uint64_t CmBcp::counter_value(const Configuration& config, std::uint32_t i) const {
    std::uint64_t v = 0;
    for (const auto& [q, cnt] : config.entries())
        v += cnt * impl_->bundled->marker_count(coin_inner_state(*proto_, q), i);
    return v;
}

Configuration CmBcp::inject_failure(const Configuration& config, Rng& rng) const {
    std::uint64_t target = rng.below(config.size());
    StateId victim = config.entries().front().first;
    for (const auto& [q, cnt] : config.entries()) {
        if (target < cnt) {
            victim = q;
            break;
        }
        target -= cnt;
    }
    std::uint32_t slot = static_cast<std::uint32_t>(rng.below(impl_->bundled->slots()));
    StateId inner = coin_inner_state(*proto_, victim);
    StateId failed_inner = impl_->bundled->with_failed_slot(inner, slot);
    StateId failed = coin_reintern(*proto_, victim, failed_inner);
    Configuration out = config;
    out.add(victim, -1);
    out.add(failed, 1);
    return out;
}

std::string CmBcp::inner_fingerprint(const Configuration& config) const {
    std::vector<std::string> parts;
    for (const auto& [q, cnt] : config.entries()) {
        StateId inner = coin_inner_state(*proto_, q);
        parts.push_back(impl_->bundled->fingerprint(inner) + "x" + std::to_string(cnt));
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (const auto& p : parts) out += p + ";";
    return out;
}

ProtocolSpec CmBcp::materialize(std::size_t max_states) const {
    std::vector<StateId> seeds;
    for (std::size_t i = 0; i < proto_->input_symbols().size(); ++i)
        seeds.push_back(proto_->input_state(i));
    return materialize_protocol(*proto_, seeds, max_states);
}

CmBcp cm_to_bcp(const CounterMachine& cm, int k, std::uint32_t arity) {
    return CmBcp(cm, k, arity);
}

CounterMachine power_of_two_cm() {
    CounterMachine cm;
    cm.counters = 1;
    cm.state_names = {"0", "1", "start", "halve", "check"};
    cm.state0 = 0;
    cm.state1 = 1;
    cm.init_state = 2;
    cm.t1.resize(5);
    cm.t1[0] = {0, CmCmd::IsZero, 0, 0};
    cm.t1[1] = {0, CmCmd::IsZero, 1, 1};
    cm.t1[2] = {0, CmCmd::IsZero, 0, 3};   // empty input rejects
    cm.t1[3] = {0, CmCmd::Divmod2, 3, 4};  // strip factors of two
    cm.t1[4] = {0, CmCmd::IsZero, 1, 0};   // odd part must have been exactly 1
    cm.t2 = cm.t1;
    cm.n_bounded = true;
    cm.validate();
    return cm;
}

CounterMachine trivial_accept_cm() {
    CounterMachine cm;
    cm.counters = 1;
    cm.state_names = {"0", "1", "start"};
    cm.state0 = 0;
    cm.state1 = 1;
    cm.init_state = 2;
    cm.t1.resize(3);
    cm.t1[0] = {0, CmCmd::IsZero, 0, 0};
    cm.t1[1] = {0, CmCmd::IsZero, 1, 1};
    cm.t1[2] = {0, CmCmd::IsZero, 1, 1};
    cm.t2 = cm.t1;
    cm.n_bounded = true;
    cm.validate();
    return cm;
}

} // namespace bcp
