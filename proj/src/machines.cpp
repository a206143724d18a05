#include "bcp/machines.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_map>

namespace bcp {

const char* cm_cmd_name(CmCmd cmd) {
    switch (cmd) {
        case CmCmd::Mul2: return "mul2";
        case CmCmd::Inc: return "inc";
        case CmCmd::Divmod2: return "divmod2";
        case CmCmd::IsZero: return "iszero";
    }
    return "?";
}

std::optional<CmCmd> cm_cmd_from_name(std::string_view name) {
    if (name == "mul2") return CmCmd::Mul2;
    if (name == "inc") return CmCmd::Inc;
    if (name == "divmod2") return CmCmd::Divmod2;
    if (name == "iszero") return CmCmd::IsZero;
    return std::nullopt;
}

void CounterMachine::validate() const {
    if (counters == 0) fail(Err::Validation, "machine needs at least one counter");
    if (state_names.empty()) fail(Err::Validation, "empty state set");
    if (t1.size() != state_names.size() || t2.size() != state_names.size())
        fail(Err::Validation, "transition tables not total");
    auto check = [&](const CmTransition& t) {
        if (t.counter >= counters) fail(Err::Validation, "transition uses an undeclared counter");
        if (t.succ0 >= state_names.size() || t.succ1 >= state_names.size())
            fail(Err::Validation, "transition uses an undeclared state");
    };
    for (const auto& t : t1) check(t);
    for (const auto& t : t2) check(t);
    for (std::uint32_t q : {state0, state1}) {
        for (const auto* table : {&t1, &t2}) {
            const CmTransition& t = (*table)[q];
            if (t.cmd != CmCmd::IsZero || t.counter != 0 || t.succ0 != q || t.succ1 != q)
                fail(Err::Validation, "halting states must idle with iszero on counter 1");
        }
    }
    if (state_names[state0] != "0" || state_names[state1] != "1")
        fail(Err::Validation, "halting states must be named 0 and 1");
}

CmStepResult cm_step(CmCmd cmd, std::uint64_t x) {
    switch (cmd) {
        case CmCmd::Mul2: return {false, 2 * x};
        case CmCmd::Inc: return {false, x + 1};
        case CmCmd::Divmod2: return {(x & 1) != 0, x >> 1};
        case CmCmd::IsZero: return {x > 0, x};
    }
    return {false, x};
}

CmRunResult run_cm(const CounterMachine& cm, std::span<const std::uint64_t> input, Rng& rng,
                   std::uint64_t max_steps) {
    if (input.size() > cm.counters) fail(Err::ArityMismatch, "more input values than counters");
    std::vector<std::uint64_t> x(cm.counters, 0);
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        x[i] = input[i];
        n += input[i];
    }
    CmRunResult res;
    res.max_counter = *std::max_element(x.begin(), x.end());
    std::uint32_t q = cm.init_state;
    while (res.steps < max_steps) {
        if (q == cm.state0 || q == cm.state1) {
            res.outcome = q == cm.state1 ? Outcome::Accept : Outcome::Reject;
            res.final_counters = x;
            return res;
        }
        const CmTransition& t = rng.coin() ? cm.t2[q] : cm.t1[q];
        std::uint64_t v = x[t.counter];
        if (t.cmd == CmCmd::Mul2 && v > (~0ull >> 1))
            fail(Err::CounterOverflow, "counter exceeds 64 bits");
        CmStepResult s = cm_step(t.cmd, v);
        x[t.counter] = s.value;
        res.max_counter = std::max(res.max_counter, s.value);
        if (cm.n_bounded && s.value > n)
            fail(Err::CounterOverflow, "declared n-bound violated");
        q = s.done1 ? t.succ1 : t.succ0;
        ++res.steps;
    }
    res.final_counters = x;
    return res;
}

void StackMachine::validate() const {
    if (stacks == 0) fail(Err::Validation, "machine needs at least one stack");
    if (d1.size() != state_names.size() || d2.size() != state_names.size())
        fail(Err::Validation, "transition tables not total");
    auto check = [&](const SmOp& op) {
        if (op.stack >= stacks) fail(Err::Validation, "op uses an undeclared stack");
        if (op.is_push) {
            if (op.succ >= state_names.size()) fail(Err::Validation, "bad push successor");
            if (op.bit > 1) fail(Err::Validation, "push bit must be 0 or 1");
        } else if (op.on0 >= state_names.size() || op.on1 >= state_names.size() ||
                   op.on_empty >= state_names.size()) {
            fail(Err::Validation, "bad pop successor");
        }
    };
    for (const auto& op : d1) check(op);
    for (const auto& op : d2) check(op);
    for (std::uint32_t q : {accept_state, reject_state}) {
        for (const auto* table : {&d1, &d2}) {
            const SmOp& op = (*table)[q];
            if (op.is_push || op.stack != 0 || op.on0 != q || op.on1 != q || op.on_empty != q)
                fail(Err::Validation, "halting states must idle with a self pop");
        }
    }
}

namespace {

std::vector<std::uint8_t> stack_from_string(const std::string& s) {
    std::vector<std::uint8_t> out; // back() is the top
    for (auto it = s.rbegin(); it != s.rend(); ++it) {
        if (*it != '0' && *it != '1') fail(Err::Validation, "stacks are binary strings");
        out.push_back(static_cast<std::uint8_t>(*it - '0'));
    }
    return out;
}

std::string stack_to_string(const std::vector<std::uint8_t>& s) {
    std::string out;
    for (auto it = s.rbegin(); it != s.rend(); ++it) out.push_back(char('0' + *it));
    return out;
}

} // namespace

SmRunResult run_stack_machine(const StackMachine& sm, std::vector<std::string> stacks, Rng& rng,
                              std::uint64_t max_steps) {
    if (stacks.size() != sm.stacks) fail(Err::Validation, "wrong number of initial stacks");
    std::vector<std::vector<std::uint8_t>> s;
    for (const auto& str : stacks) s.push_back(stack_from_string(str));
    SmRunResult res;
    res.max_depths.resize(sm.stacks);
    for (std::size_t i = 0; i < s.size(); ++i) res.max_depths[i] = s[i].size();
    std::uint32_t q = sm.init_state;
    while (res.steps < max_steps) {
        if (q == sm.accept_state || q == sm.reject_state) {
            res.outcome = q == sm.accept_state ? Outcome::Accept : Outcome::Reject;
            for (const auto& st : s) res.final_stacks.push_back(stack_to_string(st));
            return res;
        }
        const SmOp& op = rng.coin() ? sm.d2[q] : sm.d1[q];
        if (op.is_push) {
            s[op.stack].push_back(op.bit);
            res.max_depths[op.stack] = std::max(res.max_depths[op.stack], s[op.stack].size());
            q = op.succ;
        } else {
            auto& st = s[op.stack];
            if (st.empty()) {
                q = op.on_empty;
            } else {
                std::uint8_t bit = st.back();
                st.pop_back();
                q = bit ? op.on1 : op.on0;
            }
        }
        ++res.steps;
    }
    for (const auto& st : s) res.final_stacks.push_back(stack_to_string(st));
    return res;
}

void Rtm::validate() const {
    if (symbols.empty() || symbols[0] != "_") fail(Err::Validation, "symbol 0 must be the blank _");
    std::size_t ns = symbols.size();
    std::size_t want = two_tape ? state_names.size() * ns * ns : state_names.size() * ns;
    if (two_tape) {
        if (d1w.size() != want || d2w.size() != want)
            fail(Err::Validation, "transition tables not total");
    } else {
        if (d1.size() != want || d2.size() != want)
            fail(Err::Validation, "transition tables not total");
    }
    for (std::uint32_t q : {q_accept, q_reject}) {
        for (std::size_t r = 0; r < ns; ++r) {
            if (two_tape) {
                for (std::size_t w = 0; w < ns; ++w) {
                    for (const auto* t : {&d1w, &d2w}) {
                        const Move2& mv = (*t)[(q * ns + r) * ns + w];
                        if (mv.succ != q || mv.work_write != w || mv.read_move != 0 ||
                            mv.work_move != 0)
                            fail(Err::Validation, "halting states must be absorbing");
                    }
                }
            } else {
                for (const auto* t : {&d1, &d2}) {
                    const Move1& mv = (*t)[q * ns + r];
                    if (mv.succ != q || mv.write != r || mv.move != 0)
                        fail(Err::Validation, "halting states must be absorbing");
                }
            }
        }
    }
}

std::vector<Sym> encode_tape(const Rtm& m, std::span<const std::uint64_t> input, TapeEncoding enc) {
    Sym blank = 0;
    Sym zero = 0, one = 0;
    for (std::size_t i = 0; i < m.symbols.size(); ++i) {
        if (m.symbols[i] == "0") zero = static_cast<Sym>(i);
        if (m.symbols[i] == "1") one = static_cast<Sym>(i);
    }
    if (!zero || !one) fail(Err::Validation, "machine lacks 0/1 symbols");
    std::vector<Sym> tape; // tape[i] = cell i; cell 0 is blank
    tape.push_back(blank);
    tape.push_back(blank);
    for (std::uint64_t v : input) {
        if (enc == TapeEncoding::Unary) {
            for (std::uint64_t i = 0; i < v; ++i) tape.push_back(one);
        } else {
            std::string bits;
            do {
                bits.push_back(char('0' + (v & 1)));
                v >>= 1;
            } while (v);
            for (auto it = bits.rbegin(); it != bits.rend(); ++it)
                tape.push_back(*it == '1' ? one : zero);
        }
        tape.push_back(blank);
    }
    return tape;
}

namespace {

// Sparse bi-infinite tape.
class Tape {
  public:
    explicit Tape(std::vector<Sym> init = {}) : pos_(std::move(init)) {}
    Sym read(std::int64_t i) const {
        if (i >= 0)
            return i < static_cast<std::int64_t>(pos_.size()) ? pos_[i] : 0;
        std::size_t k = static_cast<std::size_t>(-i - 1);
        return k < neg_.size() ? neg_[k] : 0;
    }
    void write(std::int64_t i, Sym v) {
        if (i >= 0) {
            if (i >= static_cast<std::int64_t>(pos_.size())) pos_.resize(i + 1, 0);
            pos_[i] = v;
        } else {
            std::size_t k = static_cast<std::size_t>(-i - 1);
            if (k >= neg_.size()) neg_.resize(k + 1, 0);
            neg_[k] = v;
        }
    }

  private:
    std::vector<Sym> pos_;
    std::vector<Sym> neg_;
};

} // namespace

RtmRunResult rtm_run(const Rtm& m, std::span<const std::uint64_t> input, TapeEncoding enc,
                     Rng& rng, std::uint64_t max_steps) {
    std::vector<Sym> init = encode_tape(m, input, enc);
    RtmRunResult res;
    std::size_t ns = m.nsym();
    std::uint32_t q = m.q0;
    if (m.two_tape) {
        const std::vector<Sym>& read_tape = init;
        Tape work;
        std::int64_t ri = 0, wi = 0;
        while (res.steps < max_steps) {
            if (q == m.q_accept || q == m.q_reject) {
                res.outcome = q == m.q_accept ? Outcome::Accept : Outcome::Reject;
                return res;
            }
            Sym rs = (ri >= 0 && ri < static_cast<std::int64_t>(read_tape.size()))
                         ? read_tape[ri]
                         : 0;
            Sym ws = work.read(wi);
            const Rtm::Move2& mv =
                (rng.coin() ? m.d2w : m.d1w)[(q * ns + rs) * ns + ws];
            work.write(wi, mv.work_write);
            ri += mv.read_move;
            wi += mv.work_move;
            res.min_cell = std::min(res.min_cell, wi);
            res.max_cell = std::max(res.max_cell, wi);
            q = mv.succ;
            ++res.steps;
        }
        return res;
    }
    Tape tape(init);
    std::int64_t i = 0;
    while (res.steps < max_steps) {
        if (q == m.q_accept || q == m.q_reject) {
            res.outcome = q == m.q_accept ? Outcome::Accept : Outcome::Reject;
            return res;
        }
        Sym s = tape.read(i);
        const Rtm::Move1& mv = (rng.coin() ? m.d2 : m.d1)[q * ns + s];
        tape.write(i, mv.write);
        i += mv.move;
        res.min_cell = std::min(res.min_cell, i);
        res.max_cell = std::max(res.max_cell, i);
        q = mv.succ;
        ++res.steps;
    }
    return res;
}

// ---- encodings ----

namespace {

const char* cell_code(char tape_sym) {
    switch (tape_sym) {
        case '0': return "01";
        case '1': return "10";
        default: return "11"; // blank
    }
}

std::string binary_tape_string(std::span<const std::uint64_t> input) {
    // cells 0..n as characters: _ _ v1 _ v2 _ ... _ vk _
    std::string cells = "__";
    for (std::uint64_t v : input) {
        std::string bits;
        std::uint64_t x = v;
        do {
            bits.push_back(char('0' + (x & 1)));
            x >>= 1;
        } while (x);
        std::reverse(bits.begin(), bits.end());
        cells += bits;
        cells += '_';
    }
    return cells;
}

} // namespace

std::string two_symbol_encode(std::span<const std::uint64_t> input) {
    std::string out;
    for (char c : binary_tape_string(input)) out += cell_code(c);
    return out;
}

std::vector<std::string> multi_stack_encode(std::span<const std::uint64_t> input,
                                            std::size_t groups) {
    std::string s1 = two_symbol_encode(input);
    std::vector<std::string> out(groups);
    for (std::size_t j = 0; j < s1.size(); ++j) out[j % groups].push_back(s1[j]);
    return out;
}

std::vector<std::string> initial_stacks(const StackMachine& sm, const StackInputPlan& plan,
                                        std::span<const std::uint64_t> input) {
    std::vector<std::string> stacks(sm.stacks);
    auto split = multi_stack_encode(input, plan.input_stacks.size());
    for (std::size_t j = 0; j < plan.input_stacks.size(); ++j)
        stacks.at(plan.input_stacks[j]) = split[j];
    return stacks;
}

// ---- tm -> 2 stacks ----

namespace {

class SmBuilder {
  public:
    std::uint32_t state(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return it->second;
        std::uint32_t q = static_cast<std::uint32_t>(sm_.state_names.size());
        sm_.state_names.push_back(name);
        sm_.d1.push_back({});
        sm_.d2.push_back({});
        defined_.push_back(false);
        index_.emplace(name, q);
        return q;
    }

    void op(std::uint32_t q, const SmOp& both) { op(q, both, both); }
    void op(std::uint32_t q, const SmOp& o1, const SmOp& o2) {
        if (defined_.at(q)) fail(Err::Validation, "duplicate stack op for state");
        defined_[q] = true;
        sm_.d1[q] = o1;
        sm_.d2[q] = o2;
    }

    static SmOp push(std::uint32_t stack, int bit, std::uint32_t succ) {
        SmOp o;
        o.is_push = true;
        o.stack = stack;
        o.bit = static_cast<std::uint8_t>(bit);
        o.succ = succ;
        return o;
    }
    static SmOp pop(std::uint32_t stack, std::uint32_t on0, std::uint32_t on1,
                    std::uint32_t on_empty) {
        SmOp o;
        o.is_push = false;
        o.stack = stack;
        o.on0 = on0;
        o.on1 = on1;
        o.on_empty = on_empty;
        return o;
    }

    StackMachine finish(std::uint32_t stacks, std::uint32_t init, std::uint32_t acc,
                        std::uint32_t rej) {
        sm_.stacks = stacks;
        sm_.init_state = init;
        sm_.accept_state = acc;
        sm_.reject_state = rej;
        for (std::size_t q = 0; q < defined_.size(); ++q)
            if (!defined_[q]) fail(Err::Validation, "state without an op: " + sm_.state_names[q]);
        sm_.validate();
        return std::move(sm_);
    }

  private:
    StackMachine sm_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<bool> defined_;
};

// Pushes the two-bit cell code so that its first bit ends on top.
std::uint32_t emit_push_cell(SmBuilder& b, const std::string& prefix, std::uint32_t stack,
                             char tape_sym, std::uint32_t succ) {
    const char* code = cell_code(tape_sym);
    std::uint32_t mid = b.state(prefix + ":b");
    std::uint32_t first = b.state(prefix + ":a");
    b.op(first, SmBuilder::push(stack, code[1] - '0', mid));
    b.op(mid, SmBuilder::push(stack, code[0] - '0', succ));
    return first;
}

} // namespace

StackPipeline tm_to_two_stack(const Rtm& m) {
    m.validate();
    if (m.two_tape) fail(Err::Validation, "pass expects a single-tape machine");
    if (m.nsym() != 3 || m.symbols[1] != "0" || m.symbols[2] != "1")
        fail(Err::Validation, "pass expects tape alphabet {_,0,1}");

    constexpr std::uint32_t kLeft = 0, kRight = 1;
    const char kSymChar[3] = {'_', '0', '1'};
    SmBuilder b;
    auto qname = [&](std::uint32_t q) { return m.state_names[q]; };

    std::uint32_t acc = b.state("accept");
    std::uint32_t rej = b.state("reject");
    b.op(acc, SmBuilder::pop(0, acc, acc, acc));
    b.op(rej, SmBuilder::pop(0, rej, rej, rej));

    auto halting = [&](std::uint32_t q) { return q == m.q_accept || q == m.q_reject; };

    // dispatch(q): the coin decides which delta drives this simulated step
    std::vector<std::uint32_t> dispatch(m.state_names.size());
    for (std::uint32_t q = 0; q < m.state_names.size(); ++q)
        dispatch[q] = halting(q) ? (q == m.q_accept ? acc : rej) : b.state("d:" + qname(q));

    // apply(q, sym, v): run delta_v(q, sym): write + move via stack ops
    auto apply_chain = [&](std::uint32_t q, Sym sym, int v) -> std::uint32_t {
        const Rtm::Move1& mv = (v == 0 ? m.d1 : m.d2)[q * m.nsym() + sym];
        std::string pre = "x:" + qname(q) + ":" + kSymChar[sym] + ":" + std::to_string(v);
        std::uint32_t next = halting(mv.succ) ? (mv.succ == m.q_accept ? acc : rej)
                                              : dispatch[mv.succ];
        char written = kSymChar[mv.write];
        if (mv.move == 0) {
            // rewrite in place: the cell returns to the right stack
            return emit_push_cell(b, pre + ":w", kRight, written, next);
        }
        if (mv.move > 0) {
            // written cell crosses to the left stack
            return emit_push_cell(b, pre + ":w", kLeft, written, next);
        }
        // move left: written cell returns to the right stack, then the left
        // neighbour is transferred on top of it (empty left reads as blank)
        std::uint32_t c_one = b.state(pre + ":c1");   // first bit was 1
        std::uint32_t c_zero = b.state(pre + ":c0");  // first bit was 0
        std::uint32_t from_blank = emit_push_cell(b, pre + ":nb", kRight, '_', next);
        // second bit known: push pair (b1, b2) so that b1 tops
        auto pair_push = [&](const char* tag, int b1, int b2) {
            std::uint32_t mid = b.state(pre + tag + ":m");
            std::uint32_t head = b.state(pre + tag + ":h");
            b.op(head, SmBuilder::push(kRight, b2, mid));
            b.op(mid, SmBuilder::push(kRight, b1, next));
            return head;
        };
        std::uint32_t n10 = pair_push(":n10", 1, 0); // cell 1
        std::uint32_t n01 = pair_push(":n01", 0, 1); // cell 0
        std::uint32_t n11 = pair_push(":n11", 1, 1); // cell _
        // after reading first bit: read second bit
        b.op(c_zero, SmBuilder::pop(kLeft, rej, n01, rej));       // 0? -> second must be 1
        b.op(c_one, SmBuilder::pop(kLeft, n10, n11, rej));        // 1,0 -> "10"; 1,1 -> "11"
        std::uint32_t grab = b.state(pre + ":g");
        b.op(grab, SmBuilder::pop(kLeft, c_zero, c_one, from_blank));
        return emit_push_cell(b, pre + ":w", kRight, written, grab);
    };

    // read(q, v): pop the current cell from the right stack, branch on symbol
    for (std::uint32_t q = 0; q < m.state_names.size(); ++q) {
        if (halting(q)) continue; // dispatch never reached
        std::array<std::array<std::uint32_t, 3>, 2> apply{};
        for (int v = 0; v < 2; ++v)
            for (Sym s = 0; s < 3; ++s) apply[v][s] = apply_chain(q, s, v);
        std::array<std::uint32_t, 2> rd2_0{}, rd2_1{};
        for (int v = 0; v < 2; ++v) {
            std::string pre = "r:" + qname(q) + ":" + std::to_string(v);
            rd2_0[v] = b.state(pre + ":0"); // first bit 0: cell is "01" = 0
            rd2_1[v] = b.state(pre + ":1"); // first bit 1: "10" = 1 or "11" = _
            b.op(rd2_0[v], SmBuilder::pop(kRight, rej, apply[v][1], rej));
            b.op(rd2_1[v], SmBuilder::pop(kRight, apply[v][2], apply[v][0], rej));
        }
        // empty right stack reads as a blank cell without popping
        b.op(dispatch[q], SmBuilder::pop(kRight, rd2_0[0], rd2_1[0], apply[0][0]),
             SmBuilder::pop(kRight, rd2_0[1], rd2_1[1], apply[1][0]));
    }

    StackPipeline out;
    std::uint32_t init = halting(m.q0) ? (m.q0 == m.q_accept ? acc : rej) : dispatch[m.q0];
    out.sm = b.finish(2, init, acc, rej);
    out.plan.input_stacks = {kRight};
    return out;
}

// ---- round-robin split ----

StackPipeline bound_stacks(const StackPipeline& p, std::uint32_t c, std::uint32_t input_aux) {
    p.sm.validate();
    if (c == 0 || input_aux == 0) fail(Err::Validation, "group sizes must be positive");
    if (p.plan.input_stacks.size() != 1)
        fail(Err::Validation, "split expects a single input stack");
    std::uint32_t input_stack = p.plan.input_stacks[0];
    const StackMachine& sm = p.sm;

    std::vector<std::uint32_t> group_size(sm.stacks, c);
    group_size[input_stack] = input_aux;
    std::vector<std::uint32_t> group_base(sm.stacks, 0);
    std::uint32_t total = 0;
    for (std::uint32_t s = 0; s < sm.stacks; ++s) {
        group_base[s] = total;
        total += group_size[s];
    }

    // control = (state, round counter per original stack); counters point at
    // the aux stack currently holding the top
    std::vector<std::uint32_t> radix(sm.stacks);
    std::uint64_t combos = 1;
    for (std::uint32_t s = 0; s < sm.stacks; ++s) {
        radix[s] = group_size[s];
        combos *= group_size[s];
    }
    auto pack = [&](std::uint32_t q, const std::vector<std::uint32_t>& ctr) {
        std::uint64_t idx = 0;
        for (std::uint32_t s = 0; s < sm.stacks; ++s) idx = idx * radix[s] + ctr[s];
        return static_cast<std::uint32_t>(q * combos + idx);
    };

    StackMachine out;
    out.stacks = total;
    std::size_t nstates = sm.state_names.size() * combos;
    out.state_names.resize(nstates);
    out.d1.resize(nstates);
    out.d2.resize(nstates);

    std::vector<std::uint32_t> ctr(sm.stacks, 0);
    std::uint32_t canon_acc = pack(sm.accept_state, ctr);
    std::uint32_t canon_rej = pack(sm.reject_state, ctr);
    for (std::uint32_t q = 0; q < sm.state_names.size(); ++q) {
        std::fill(ctr.begin(), ctr.end(), 0);
        for (std::uint64_t combo = 0;; ++combo) {
            std::uint32_t id = pack(q, ctr);
            std::string suffix;
            for (std::uint32_t s = 0; s < sm.stacks; ++s)
                suffix += ":" + std::to_string(ctr[s]);
            out.state_names[id] = sm.state_names[q] + suffix;
            for (int v = 0; v < 2; ++v) {
                const SmOp& op = (v ? sm.d2 : sm.d1)[q];
                SmOp& slot = (v ? out.d2 : out.d1)[id];
                if (q == sm.accept_state || q == sm.reject_state) {
                    // stray counter combinations fold into the canonical halt
                    std::uint32_t canon = q == sm.accept_state ? canon_acc : canon_rej;
                    slot = id == canon ? SmBuilder::pop(0, id, id, id)
                                       : SmBuilder::pop(0, canon, canon, canon);
                    continue;
                }
                std::uint32_t s = op.stack;
                if (op.is_push) {
                    auto next = ctr;
                    next[s] = (ctr[s] + group_size[s] - 1) % group_size[s];
                    slot = SmBuilder::push(group_base[s] + next[s], op.bit,
                                           pack(op.succ, next));
                } else {
                    auto next = ctr;
                    next[s] = (ctr[s] + 1) % group_size[s];
                    slot = SmBuilder::pop(group_base[s] + ctr[s], pack(op.on0, next),
                                          pack(op.on1, next), pack(op.on_empty, ctr));
                }
            }
            // next counter combination
            std::uint32_t s = 0;
            for (; s < sm.stacks; ++s) {
                if (++ctr[s] < radix[s]) break;
                ctr[s] = 0;
            }
            if (s == sm.stacks) break;
        }
    }

    std::fill(ctr.begin(), ctr.end(), 0);
    out.init_state = pack(sm.init_state, ctr);
    out.accept_state = pack(sm.accept_state, ctr);
    out.reject_state = pack(sm.reject_state, ctr);
    // Halting states must idle regardless of counters; normalize the zero
    // combo as the canonical halt and route others into it.
    out.validate();

    StackPipeline res;
    res.sm = std::move(out);
    res.plan.input_stacks.clear();
    for (std::uint32_t j = 0; j < input_aux; ++j)
        res.plan.input_stacks.push_back(group_base[input_stack] + j);
    return res;
}

StackPipeline tm_to_stack(const Rtm& m, std::uint32_t c, std::uint32_t input_aux) {
    return bound_stacks(tm_to_two_stack(m), c, input_aux);
}

// ---- stacks -> counters ----

namespace {

class CmBuilder {
  public:
    std::uint32_t state(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return it->second;
        std::uint32_t q = static_cast<std::uint32_t>(cm_.state_names.size());
        cm_.state_names.push_back(name);
        cm_.t1.push_back({});
        cm_.t2.push_back({});
        defined_.push_back(false);
        index_.emplace(name, q);
        return q;
    }

    void op(std::uint32_t q, const CmTransition& both) { op(q, both, both); }
    void op(std::uint32_t q, const CmTransition& o1, const CmTransition& o2) {
        if (defined_.at(q)) fail(Err::Validation, "duplicate transition for state");
        defined_[q] = true;
        cm_.t1[q] = o1;
        cm_.t2[q] = o2;
    }

    static CmTransition cmd(std::uint32_t counter, CmCmd c, std::uint32_t succ0,
                            std::uint32_t succ1) {
        return CmTransition{counter, c, succ0, succ1};
    }

    CounterMachine finish(std::uint32_t counters, std::uint32_t init, std::uint32_t s0,
                          std::uint32_t s1) {
        cm_.counters = counters;
        cm_.init_state = init;
        cm_.state0 = s0;
        cm_.state1 = s1;
        for (std::size_t q = 0; q < defined_.size(); ++q)
            if (!defined_[q])
                fail(Err::Validation, "state without a transition: " + cm_.state_names[q]);
        cm_.validate();
        return std::move(cm_);
    }

  private:
    CounterMachine cm_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<bool> defined_;
};

} // namespace

CounterMachine stack_to_cm(const StackPipeline& p, std::uint32_t arity) {
    p.sm.validate();
    const StackMachine& sm = p.sm;
    std::uint32_t g = static_cast<std::uint32_t>(p.plan.input_stacks.size());
    if (g == 0) fail(Err::Validation, "input plan is empty");

    // counters: arity inputs, then (contents, occupancy) per stack, then one
    // sentinel scratch for the input conversion
    auto xs = [&](std::uint32_t stack) { return arity + 2 * stack; };
    auto xo = [&](std::uint32_t stack) { return arity + 2 * stack + 1; };
    std::uint32_t scratch = arity + 2 * sm.stacks;
    std::uint32_t total_counters = scratch + 1;
    std::uint32_t after_all = 0;

    CmBuilder b;
    std::uint32_t s0 = b.state("0");
    std::uint32_t s1 = b.state("1");
    b.op(s0, CmBuilder::cmd(0, CmCmd::IsZero, s0, s0));
    b.op(s1, CmBuilder::cmd(0, CmCmd::IsZero, s1, s1));

    // push bit b onto stack pair (s,o): mul2 s, mul2 o, inc o, [inc s]
    auto emit_push = [&](const std::string& pre, std::uint32_t cs, std::uint32_t co, int bit,
                         std::uint32_t succ) {
        std::uint32_t a = b.state(pre + ":p0");
        std::uint32_t c2 = b.state(pre + ":p1");
        std::uint32_t c3 = b.state(pre + ":p2");
        std::uint32_t tail = succ;
        if (bit) {
            std::uint32_t c4 = b.state(pre + ":p3");
            b.op(c4, CmBuilder::cmd(cs, CmCmd::Inc, succ, succ));
            tail = c4;
        }
        b.op(a, CmBuilder::cmd(cs, CmCmd::Mul2, c2, c2));
        b.op(c2, CmBuilder::cmd(co, CmCmd::Mul2, c3, c3));
        b.op(c3, CmBuilder::cmd(co, CmCmd::Inc, tail, tail));
        return a;
    };
    // pop from (s,o): iszero o -> empty; else divmod s gives the bit, then
    // divmod o discards the occupancy bit
    auto emit_pop = [&](const std::string& pre, std::uint32_t cs, std::uint32_t co,
                        std::uint32_t on0, std::uint32_t on1, std::uint32_t on_empty) {
        std::uint32_t a = b.state(pre + ":q0");
        std::uint32_t c2 = b.state(pre + ":q1");
        std::uint32_t f0 = b.state(pre + ":q2");
        std::uint32_t f1 = b.state(pre + ":q3");
        b.op(a, CmBuilder::cmd(co, CmCmd::IsZero, on_empty, c2));
        b.op(c2, CmBuilder::cmd(cs, CmCmd::Divmod2, f0, f1));
        b.op(f0, CmBuilder::cmd(co, CmCmd::Divmod2, on0, on0));
        b.op(f1, CmBuilder::cmd(co, CmCmd::Divmod2, on1, on1));
        return a;
    };

    // ---- main simulation ----
    std::vector<std::uint32_t> dispatch(sm.state_names.size());
    for (std::uint32_t q = 0; q < sm.state_names.size(); ++q) {
        if (q == sm.accept_state)
            dispatch[q] = s1;
        else if (q == sm.reject_state)
            dispatch[q] = s0;
        else
            dispatch[q] = b.state("d:" + std::to_string(q));
    }
    auto same_op = [](const SmOp& a, const SmOp& o) {
        if (a.is_push != o.is_push || a.stack != o.stack) return false;
        if (a.is_push) return a.bit == o.bit && a.succ == o.succ;
        return a.on0 == o.on0 && a.on1 == o.on1 && a.on_empty == o.on_empty;
    };
    for (std::uint32_t q = 0; q < sm.state_names.size(); ++q) {
        if (q == sm.accept_state || q == sm.reject_state) continue;
        bool deterministic = same_op(sm.d1[q], sm.d2[q]);
        std::uint32_t entry[2];
        for (int v = 0; v < (deterministic ? 1 : 2); ++v) {
            const SmOp& op = (v ? sm.d2 : sm.d1)[q];
            std::string pre = "m:" + std::to_string(q) + ":" + std::to_string(v);
            if (op.is_push)
                entry[v] = emit_push(pre, xs(op.stack), xo(op.stack), op.bit,
                                     dispatch[op.succ]);
            else
                entry[v] = emit_pop(pre, xs(op.stack), xo(op.stack), dispatch[op.on0],
                                    dispatch[op.on1], dispatch[op.on_empty]);
        }
        // the only randomised decision: which table drives this step
        std::uint32_t e0 = entry[0];
        std::uint32_t e1 = deterministic ? e0 : entry[1];
        b.op(dispatch[q], CmBuilder::cmd(0, CmCmd::IsZero, e0, e0),
             CmBuilder::cmd(0, CmCmd::IsZero, e1, e1));
    }

    // ---- input conversion prologue ----
    // Pass A sizes the encoded tape string modulo g without losing the
    // inputs: each counter's bits move into a sentinel scratch (bounded by
    // four times the value) and back.  Pass B then regenerates the string in
    // reverse order, pushing each symbol directly onto its round-robin
    // target.  Control states carry the current target index theta.
    std::uint32_t sim_start = dispatch[sm.init_state];

    auto push_sym = [&](const std::string& pre, std::uint32_t theta, int bit,
                        std::uint32_t succ) {
        std::uint32_t stack = p.plan.input_stacks[theta];
        return emit_push(pre, xs(stack), xo(stack), bit, succ);
    };
    // push a two-symbol cell code starting at theta, continue at theta-2
    auto back1 = [&](std::uint32_t t) { return (t + g - 1) % g; };
    auto back2 = [&](std::uint32_t t) { return (t + g - 2) % g; };
    auto push_cell = [&](const std::string& pre, std::uint32_t theta, int bit_first,
                         int bit_second, std::uint32_t succ) {
        std::uint32_t second = push_sym(pre + ":s", back1(theta), bit_second, succ);
        return push_sym(pre + ":f", theta, bit_first, second);
    };

    // ---- pass B: emit "11" revC_k "11" revC_{k-1} ... revC_1 "11" "11" ----
    std::vector<std::uint32_t> b_entry(g);
    {
        // the leading blank of the tape closes the generation
        std::vector<std::uint32_t> tail(g);
        for (std::uint32_t t = 0; t < g; ++t)
            tail[t] = push_cell("iB:t:" + std::to_string(t), t, 1, 1, sim_start);
        std::vector<std::uint32_t> cont = tail;
        for (std::uint32_t i = 0; i < arity; ++i) {
            std::vector<std::uint32_t> next(g);
            for (std::uint32_t t = 0; t < g; ++t)
                next[t] = b.state("iB:c" + std::to_string(i) + ":" + std::to_string(t) + ":loop");
            for (std::uint32_t t = 0; t < g; ++t) {
                std::string pre = "iB:c" + std::to_string(i) + ":" + std::to_string(t);
                std::uint32_t nt = back2(t);
                // the separator blank is emitted at theta-2, after the last bit
                std::uint32_t sep = push_cell(pre + ":sep", nt, 1, 1, cont[back2(nt)]);
                std::uint32_t chk = b.state(pre + ":k");
                // rev(f(0)) = "10", rev(f(1)) = "01"
                std::uint32_t pz = push_cell(pre + ":z", t, 1, 0, chk);
                std::uint32_t po = push_cell(pre + ":o", t, 0, 1, chk);
                b.op(next[t], CmBuilder::cmd(i, CmCmd::Divmod2, pz, po));
                b.op(chk, CmBuilder::cmd(i, CmCmd::IsZero, sep, next[nt]));
            }
            cont = next;
        }
        // entry: the trailing blank, then the outermost block
        for (std::uint32_t t = 0; t < g; ++t)
            b_entry[t] = push_cell("iB:h:" + std::to_string(t), t, 1, 1, cont[back2(t)]);
    }

    // ---- pass A: theta accumulates 2*bits(x_i) mod g ----
    // The string length is M = 2*arity + 4 + 2*sum bits, and the first
    // emitted symbol (index M) belongs on target (M-1) mod g.
    {
        std::vector<std::uint32_t> a_done(g);
        for (std::uint32_t t = 0; t < g; ++t) {
            std::uint32_t m_mod = (t + 2 * arity + 4) % g;
            a_done[t] = b_entry[(m_mod + g - 1) % g];
        }
        std::vector<std::uint32_t> cont = a_done;
        for (std::int32_t ii = static_cast<std::int32_t>(arity) - 1; ii >= 0; --ii) {
            std::uint32_t i = static_cast<std::uint32_t>(ii);
            std::vector<std::uint32_t> entry(g);
            std::vector<std::uint32_t> ext(g), rest(g);
            for (std::uint32_t t = 0; t < g; ++t) {
                std::string pre = "iA:c" + std::to_string(i) + ":" + std::to_string(t);
                entry[t] = b.state(pre + ":x");
                ext[t] = b.state(pre + ":e");
                rest[t] = b.state(pre + ":r");
            }
            for (std::uint32_t t = 0; t < g; ++t) {
                std::string pre = "iA:c" + std::to_string(i) + ":" + std::to_string(t);
                std::uint32_t nt = (t + 2) % g;
                // restore: pop the scratch until the sentinel surfaces
                std::uint32_t r_chk1 = b.state(pre + ":rc1");
                std::uint32_t r_put0 = b.state(pre + ":rp0");
                std::uint32_t r_put1a = b.state(pre + ":rp1a");
                std::uint32_t r_put1b = b.state(pre + ":rp1b");
                b.op(rest[t], CmBuilder::cmd(scratch, CmCmd::Divmod2, r_put0, r_chk1));
                b.op(r_put0, CmBuilder::cmd(i, CmCmd::Mul2, rest[t], rest[t]));
                b.op(r_chk1, CmBuilder::cmd(scratch, CmCmd::IsZero, cont[t], r_put1a));
                b.op(r_put1a, CmBuilder::cmd(i, CmCmd::Mul2, r_put1b, r_put1b));
                b.op(r_put1b, CmBuilder::cmd(i, CmCmd::Inc, rest[t], rest[t]));
                // extract one bit at theta t, then continue at theta t+2
                std::uint32_t e_put0 = b.state(pre + ":e0");
                std::uint32_t e_put1a = b.state(pre + ":e1a");
                std::uint32_t e_put1b = b.state(pre + ":e1b");
                std::uint32_t e_chk = b.state(pre + ":ek");
                b.op(ext[t], CmBuilder::cmd(i, CmCmd::Divmod2, e_put0, e_put1a));
                b.op(e_put0, CmBuilder::cmd(scratch, CmCmd::Mul2, e_chk, e_chk));
                b.op(e_put1a, CmBuilder::cmd(scratch, CmCmd::Mul2, e_put1b, e_put1b));
                b.op(e_put1b, CmBuilder::cmd(scratch, CmCmd::Inc, e_chk, e_chk));
                // the just-extracted bit counts, so both exits advance theta
                b.op(e_chk, CmBuilder::cmd(i, CmCmd::IsZero, rest[nt], ext[nt]));
                // counter entry: seed the sentinel, then extract
                std::uint32_t seed = b.state(pre + ":seed");
                b.op(seed, CmBuilder::cmd(scratch, CmCmd::Inc, ext[t], ext[t]));
                b.op(entry[t], CmBuilder::cmd(scratch, CmCmd::IsZero, seed, seed));
            }
            cont = entry;
        }
        after_all = cont[0];
    }

    return b.finish(total_counters, after_all, s0, s1);
}

CounterMachine compile_tm_to_cm(const Rtm& m, const TmCompileOptions& opts) {
    Rtm single = m.two_tape ? unary_to_binary_tm(m, opts.unary) : m;
    std::uint32_t input_aux = opts.input_aux ? opts.input_aux : opts.c;
    StackPipeline p = tm_to_stack(single, opts.c, input_aux);
    std::uint32_t arity = 1;
    return stack_to_cm(p, arity);
}

Rtm parity_rtm() {
    Rtm m;
    m.two_tape = true;
    m.symbols = {"_", "0", "1"};
    m.state_names = {"b0", "b1", "even", "odd", "acc", "rej"};
    m.q0 = 0;
    m.q_accept = 4;
    m.q_reject = 5;
    std::size_t ns = 3;
    m.d1w.resize(m.state_names.size() * ns * ns);
    auto set = [&](std::uint32_t q, Sym r, Sym w, std::uint32_t succ, Sym ww, int rm, int wm) {
        m.d1w[(q * ns + r) * ns + w] = {succ, ww, static_cast<std::int8_t>(rm),
                                        static_cast<std::int8_t>(wm)};
    };
    // default: absorb in place
    for (std::uint32_t q = 0; q < m.state_names.size(); ++q)
        for (Sym r = 0; r < 3; ++r)
            for (Sym w = 0; w < 3; ++w) set(q, r, w, q, w, 0, 0);
    for (Sym w = 0; w < 3; ++w) {
        set(0, 0, w, 1, w, +1, 0);  // skip cell 0
        set(1, 0, w, 2, w, +1, 0);  // skip the leading blank
        set(2, 2, w, 3, w, +1, 0);  // a one: flip parity
        set(3, 2, w, 2, w, +1, 0);
        set(2, 0, w, 5, w, 0, 0);   // block ended: even count rejects
        set(3, 0, w, 4, w, 0, 0);   // odd count accepts
    }
    m.d2w = m.d1w;
    m.validate();
    return m;
}

} // namespace bcp
