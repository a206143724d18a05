#include <array>
#include <cassert>
#include <functional>
#include <unordered_map>

#include "bcp/machines.hpp"

// unary_to_binary_tm: simulate a two-tape log-space machine on a single
// {_,0,1} tape with binary input.
//
// Tape layout after initialisation (physical cells):
//   [input: _ _ w1 _ w2 _ ... wk _] [gap] [region]
// The region is a blank-free run of logical cells, three physical bits each:
//   # IN # P # R # W #
//   IN: input values, value k first and each bit-reversed (LSB leftmost),
//       blocks separated by B
//   P:  sign cell plus the magnitude of the simulated read-head position,
//       LSB first, width |IN|+8
//   R:  scratch magnitude of the same width
//   W:  the simulated work tape, one logical cell per work cell; the work
//       head rides along as a marked code
// Logical codes: 0,1,B, marked variants M0,M1,MB, and the separator #.
//
// Per simulated step: read the marked work cell, flip the shared coin to pick
// delta_1/delta_2 (the only divergence of the two tables), apply write/move
// on W, update P on read-head moves, and recompute the cached read symbol by
// subtracting block values from a copy of P. The cached symbol is left alone
// whenever the read head did not move.

namespace bcp {

namespace {

enum Phys : Sym { PB = 0, P0 = 1, P1 = 2 };

enum L : int { L0 = 0, L1, LB, LM0, LM1, LMB, LH, LCOUNT };

constexpr std::array<std::array<Sym, 3>, LCOUNT> kCode = {{
    {P0, P0, P0}, // L0
    {P0, P0, P1}, // L1
    {P0, P1, P0}, // LB
    {P0, P1, P1}, // LM0
    {P1, P0, P0}, // LM1
    {P1, P0, P1}, // LMB
    {P1, P1, P0}, // LH
}};

L marked(L v) {
    switch (v) {
        case L0: return LM0;
        case L1: return LM1;
        case LB: return LMB;
        default: return v;
    }
}
L plain(L v) {
    switch (v) {
        case LM0: return L0;
        case LM1: return L1;
        case LMB: return LB;
        default: return v;
    }
}
bool is_marked(L v) { return v == LM0 || v == LM1 || v == LMB; }

L cell_of_sym(Sym s) { return s == 0 ? LB : (s == 1 ? L0 : L1); }
Sym sym_of_cell(L v) {
    switch (plain(v)) {
        case LB: return 0;
        case L0: return 1;
        default: return 2;
    }
}

class Gen {
  public:
    Gen() {
        wedge_ = state("!wedge");
        for (Sym s = 0; s < 3; ++s) set(wedge_, s, s, 0, wedge_);
    }

    std::uint32_t state(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return it->second;
        std::uint32_t q = static_cast<std::uint32_t>(names_.size());
        names_.push_back(name);
        index_.emplace(name, q);
        rows_.emplace_back();
        rows2_.emplace_back();
        return q;
    }

    void set(std::uint32_t q, Sym read, Sym write, int move, std::uint32_t succ) {
        put(rows_, q, read, write, move, succ);
        put(rows2_, q, read, write, move, succ);
    }
    void set_coin(std::uint32_t q, std::uint32_t succ1, std::uint32_t succ2) {
        for (Sym s = 0; s < 3; ++s) {
            put(rows_, q, s, s, 0, succ1);
            put(rows2_, q, s, s, 0, succ2);
        }
    }

    std::uint32_t wedge() const { return wedge_; }

    std::uint32_t hop(const std::string& pre, int dist, std::uint32_t to) {
        std::uint32_t cur = to;
        int step = dist < 0 ? -1 : 1;
        for (int i = 0; i < std::abs(dist); ++i) {
            std::uint32_t q = state(pre + ":h" + std::to_string(i));
            for (Sym s = 0; s < 3; ++s) set(q, s, s, step, cur);
            cur = q;
        }
        return cur;
    }

    // read one logical cell; head ends at the next cell's start
    std::uint32_t read_cell(const std::string& pre, const std::function<std::uint32_t(L)>& cont) {
        std::uint32_t entry = state(pre + ":r");
        std::array<std::uint32_t, 2> mid1{};
        std::array<std::array<std::uint32_t, 2>, 2> mid2{};
        for (int b1 = 0; b1 < 2; ++b1) {
            mid1[b1] = state(pre + ":r" + std::to_string(b1));
            for (int b2 = 0; b2 < 2; ++b2)
                mid2[b1][b2] = state(pre + ":r" + std::to_string(b1) + std::to_string(b2));
        }
        set(entry, P0, P0, +1, mid1[0]);
        set(entry, P1, P1, +1, mid1[1]);
        set(entry, PB, PB, 0, wedge_);
        for (int b1 = 0; b1 < 2; ++b1) {
            set(mid1[b1], P0, P0, +1, mid2[b1][0]);
            set(mid1[b1], P1, P1, +1, mid2[b1][1]);
            set(mid1[b1], PB, PB, 0, wedge_);
        }
        for (int b1 = 0; b1 < 2; ++b1)
            for (int b2 = 0; b2 < 2; ++b2) {
                for (int b3 = 0; b3 < 2; ++b3) {
                    int idx = b1 * 4 + b2 * 2 + b3;
                    std::uint32_t target = idx < LCOUNT ? cont(static_cast<L>(idx)) : wedge_;
                    set(mid2[b1][b2], b3 ? P1 : P0, b3 ? P1 : P0, +1, target);
                }
                set(mid2[b1][b2], PB, PB, 0, wedge_);
            }
        return entry;
    }

    // write one logical cell; head ends at the next cell's start
    std::uint32_t write_cell(const std::string& pre, L v, std::uint32_t to) {
        std::uint32_t c2 = state(pre + ":w2");
        std::uint32_t c1 = state(pre + ":w1");
        std::uint32_t c0 = state(pre + ":w0");
        for (Sym s = 0; s < 3; ++s) {
            set(c0, s, kCode[v][0], +1, c1);
            set(c1, s, kCode[v][1], +1, c2);
            set(c2, s, kCode[v][2], +1, to);
        }
        return c0;
    }

    // rewrite the logical cell behind the head; ends where it started
    std::uint32_t rewrite_prev(const std::string& pre, L v, std::uint32_t to) {
        return hop(pre + ":b", -3, write_cell(pre, v, to));
    }

    Rtm finish(std::uint32_t q0, std::uint32_t qa, std::uint32_t qr) {
        Rtm m;
        m.two_tape = false;
        m.symbols = {"_", "0", "1"};
        m.state_names = names_;
        m.q0 = q0;
        m.q_accept = qa;
        m.q_reject = qr;
        std::size_t ns = 3;
        m.d1.resize(names_.size() * ns);
        m.d2.resize(names_.size() * ns);
        for (std::uint32_t q = 0; q < names_.size(); ++q)
            for (Sym s = 0; s < 3; ++s) {
                auto fill = [&](std::vector<Rtm::Move1>& d,
                                const std::vector<Row>& rows) {
                    const Entry& e = rows[q][s];
                    if (e.used)
                        d[q * ns + s] = {e.succ, e.write, e.move};
                    else
                        d[q * ns + s] = {wedge_, s, 0};
                };
                fill(m.d1, rows_);
                fill(m.d2, rows2_);
            }
        for (std::uint32_t q : {qa, qr})
            for (Sym s = 0; s < 3; ++s) {
                m.d1[q * ns + s] = {q, s, 0};
                m.d2[q * ns + s] = {q, s, 0};
            }
        m.validate();
        return m;
    }

  private:
    struct Entry {
        bool used = false;
        Sym write = 0;
        std::int8_t move = 0;
        std::uint32_t succ = 0;
    };
    struct Row : std::array<Entry, 3> {
        Row() { fill(Entry{}); }
    };

    void put(std::vector<Row>& rows, std::uint32_t q, Sym read, Sym write, int move,
             std::uint32_t succ) {
        Entry& e = rows[q][read];
        if (e.used) fail(Err::Validation, "duplicate microcode entry at " + names_[q]);
        e = {true, write, static_cast<std::int8_t>(move), succ};
    }

    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<Row> rows_, rows2_;
    std::uint32_t wedge_ = 0;
};

struct Builder {
    const Rtm& m;
    std::uint32_t arity;
    std::uint32_t extra_work;
    Gen g;
    std::uint32_t acc, rej;

    std::unordered_map<std::uint64_t, std::uint32_t> steps_;
    std::vector<std::pair<std::uint32_t, Sym>> step_worklist_;
    std::unordered_map<std::uint64_t, std::uint32_t> pu_cache_;
    std::unordered_map<std::uint32_t, std::uint32_t> sp_cache_;

    Builder(const Rtm& machine, std::uint32_t k, std::uint32_t extra)
        : m(machine), arity(k), extra_work(extra) {
        acc = g.state("!accept");
        rej = g.state("!reject");
    }

    std::uint32_t jmp(const std::string& pre, std::uint32_t to) {
        std::uint32_t q = g.state(pre + ":j");
        for (Sym s = 0; s < 3; ++s) g.set(q, s, s, 0, to);
        return q;
    }
    void wire(std::uint32_t from, std::uint32_t to) {
        for (Sym s = 0; s < 3; ++s) g.set(from, s, s, 0, to);
    }

    // scan logical cells; handler returns 0 to keep going
    std::uint32_t scan(const std::string& pre, const std::function<std::uint32_t(L)>& h) {
        std::uint32_t loop = g.state(pre + ":loop");
        std::uint32_t entry = g.read_cell(pre, [&](L v) -> std::uint32_t {
            std::uint32_t t = h(v);
            return t ? t : loop;
        });
        wire(loop, entry);
        return entry;
    }

    // head inside the region or on the blank right after it -> the blank
    // immediately left of the region
    std::uint32_t to_park(const std::string& pre, std::uint32_t to) {
        std::uint32_t walk = g.state(pre + ":pw");
        g.set(walk, PB, PB, 0, to);
        g.set(walk, P0, P0, -1, walk);
        g.set(walk, P1, P1, -1, walk);
        std::uint32_t first = g.state(pre + ":p0");
        for (Sym s = 0; s < 3; ++s) g.set(first, s, s, -1, walk);
        return first;
    }

    // from park to the first logical cell after the f-th '#'
    std::uint32_t enter_field(const std::string& pre, int field, std::uint32_t to) {
        std::uint32_t cur = to;
        for (int seen = field; seen >= 1; --seen) {
            std::string p = pre + ":f" + std::to_string(seen);
            std::uint32_t next = cur;
            cur = scan(p, [&](L v) -> std::uint32_t { return v == LH ? next : 0; });
        }
        return g.hop(pre + ":in", +1, cur);
    }

    std::uint32_t goto_field(const std::string& pre, int field, std::uint32_t to) {
        return to_park(pre + ":tp", enter_field(pre, field, to));
    }

    // head inside the region -> the first blank after the region content
    std::uint32_t to_end(const std::string& pre, std::uint32_t to) {
        std::uint32_t walk = g.state(pre + ":e");
        g.set(walk, PB, PB, 0, to);
        g.set(walk, P0, P0, +1, walk);
        g.set(walk, P1, P1, +1, walk);
        return walk;
    }

    std::uint32_t find_mark(const std::string& pre, const std::function<std::uint32_t(L)>& cont) {
        return scan(pre, [&](L v) -> std::uint32_t {
            if (is_marked(v)) return cont(v);
            if (v == LH) return g.wedge();
            return 0;
        });
    }

    // bit-walks over a counter field; the entry expects the head at bit 0
    std::uint32_t inc_walk(const std::string& pre, std::uint32_t to) {
        std::uint32_t loop = g.state(pre + ":loop");
        std::uint32_t entry = g.read_cell(pre, [&](L b) -> std::uint32_t {
            if (b == L0) return g.rewrite_prev(pre + ":f", L1, to);
            if (b == L1) return g.rewrite_prev(pre + ":c", L0, loop);
            return g.wedge();
        });
        wire(loop, entry);
        return entry;
    }
    std::uint32_t dec_walk(const std::string& pre, std::uint32_t to) {
        std::uint32_t loop = g.state(pre + ":loop");
        std::uint32_t entry = g.read_cell(pre, [&](L b) -> std::uint32_t {
            if (b == L1) return g.rewrite_prev(pre + ":f", L0, to);
            if (b == L0) return g.rewrite_prev(pre + ":c", L1, loop);
            return g.wedge();
        });
        wire(loop, entry);
        return entry;
    }
    std::uint32_t zero_scan(const std::string& pre, std::uint32_t to_zero,
                            std::uint32_t to_nonzero) {
        return scan(pre, [&](L b) -> std::uint32_t {
            if (b == LH) return to_zero;
            if (b == L1) return to_nonzero;
            if (b == L0) return 0;
            return g.wedge();
        });
    }

    // ---- initialisation ----

    std::uint32_t build_init(std::uint32_t start_sim) {
        std::uint32_t close_in = g.state("i:close");
        std::vector<std::uint32_t> consume(arity);
        for (std::uint32_t b = 0; b < arity; ++b)
            consume[b] = g.state("i:c" + std::to_string(b));

        for (std::uint32_t b = 0; b < arity; ++b) {
            std::string pre = "i:c" + std::to_string(b);
            // walk left out of the region, across blanks, onto the rightmost
            // unconsumed input bit
            std::uint32_t sk2 = g.state(pre + ":k2");
            std::uint32_t sk1 = g.state(pre + ":k1");
            g.set(sk1, P0, P0, -1, sk1);
            g.set(sk1, P1, P1, -1, sk1);
            g.set(sk1, PB, PB, -1, sk2);
            std::uint32_t bit0 = g.state(pre + ":n0");
            std::uint32_t bit1 = g.state(pre + ":n1");
            g.set(sk2, PB, PB, -1, sk2);
            g.set(sk2, P0, PB, -1, bit0); // consume the bit, check the left neighbour
            g.set(sk2, P1, PB, -1, bit1);
            std::uint32_t entry = g.state(pre + ":k0");
            for (Sym s = 0; s < 3; ++s) g.set(entry, s, s, -1, sk1);
            wire(consume[b], entry);
            for (int bit = 0; bit < 2; ++bit) {
                std::string bp = pre + ":" + std::to_string(bit);
                // append target states; "mid" keeps consuming this block,
                // "end" closes it (separator or the whole IN field)
                std::uint32_t after_mid = g.write_cell(bp + ":am", bit ? L1 : L0, consume[b]);
                std::uint32_t tail = b + 1 < arity
                                         ? g.write_cell(bp + ":sep", LB, consume[b + 1])
                                         : close_in;
                std::uint32_t after_end = g.write_cell(bp + ":ae", bit ? L1 : L0, tail);
                auto walker = [&](const char* tag, std::uint32_t target) {
                    // right through blanks, then through the region content
                    std::uint32_t inb = g.state(bp + tag + ":i");
                    std::uint32_t inr = g.state(bp + tag + ":r");
                    g.set(inb, PB, PB, +1, inb);
                    g.set(inb, P0, P0, +1, inr);
                    g.set(inb, P1, P1, +1, inr);
                    g.set(inr, P0, P0, +1, inr);
                    g.set(inr, P1, P1, +1, inr);
                    g.set(inr, PB, PB, 0, target);
                    return inb;
                };
                std::uint32_t go_mid = walker(":wm", after_mid);
                std::uint32_t go_end = walker(":we", after_end);
                std::uint32_t at = bit ? bit1 : bit0;
                g.set(at, PB, PB, +1, go_end); // block finished after this bit
                g.set(at, P0, P0, +1, go_mid);
                g.set(at, P1, P1, +1, go_mid);
            }
        }

        // find the end of the input (first double blank right of cell 1),
        // then write the opening '#'
        std::uint32_t hash0 = g.write_cell("i:hash0", LH, arity > 0 ? consume[0] : close_in);
        std::uint32_t scanA = g.state("i:a");
        std::uint32_t scanB = g.state("i:b");
        g.set(scanA, P0, P0, +1, scanA);
        g.set(scanA, P1, P1, +1, scanA);
        g.set(scanA, PB, PB, +1, scanB);
        g.set(scanB, P0, P0, +1, scanA);
        g.set(scanB, P1, P1, +1, scanA);
        g.set(scanB, PB, PB, +1, hash0);
        std::uint32_t i_entry = g.hop("i:skip", +2, scanA);

        // P field: '#', sign, one zero per IN cell, 8 extra zeros, '#'
        std::uint32_t p_done = g.state("i:pdone");
        {
            std::uint32_t ploop = g.state("i:ploop");
            std::uint32_t body = enter_field("i:p:nav", 1, scan("i:p:scan", [&](L v) -> std::uint32_t {
                if (v == LH) return p_done;
                if (is_marked(v)) return 0;
                return g.rewrite_prev("i:p:mk" + std::to_string(v), marked(v),
                                      to_end("i:p:go" + std::to_string(v),
                                             g.write_cell("i:p:app" + std::to_string(v), L0, ploop)));
            }));
            std::uint32_t from_park = to_park("i:p:park", body);
            wire(ploop, from_park);
            std::uint32_t sign = g.write_cell("i:p:sign", L0, from_park);
            std::uint32_t hash = g.write_cell("i:p:hash", LH, sign);
            wire(close_in, hash);
        }
        // unmark IN, pad P with 8 zeros, close it
        std::uint32_t r_begin = g.state("i:rbegin");
        {
            std::uint32_t uloop = g.state("i:uloop");
            std::uint32_t pad_tail = g.write_cell("i:u:hash", LH, r_begin);
            for (int i = 7; i >= 0; --i)
                pad_tail = g.write_cell("i:u:pad" + std::to_string(i), L0, pad_tail);
            std::uint32_t pad_go = to_end("i:u:go", pad_tail);
            std::uint32_t body = enter_field("i:u:nav", 1, scan("i:u:scan", [&](L v) -> std::uint32_t {
                if (v == LH) return pad_go;
                if (is_marked(v))
                    return g.rewrite_prev("i:u:um" + std::to_string(v), plain(v), uloop);
                return 0;
            }));
            std::uint32_t from_park = to_park("i:u:park", body);
            wire(uloop, from_park);
            wire(p_done, from_park);
        }
        // R field: one zero per P bit cell (mark walk across P)
        std::uint32_t r_done = g.state("i:rdone");
        {
            std::uint32_t rloop = g.state("i:rloop");
            std::uint32_t body = enter_field(
                "i:r:nav", 2, g.hop("i:r:sk", +3, scan("i:r:scan", [&](L v) -> std::uint32_t {
                    if (v == LH) return r_done;
                    if (is_marked(v)) return 0;
                    return g.rewrite_prev("i:r:mk" + std::to_string(v), marked(v),
                                          to_end("i:r:go" + std::to_string(v),
                                                 g.write_cell("i:r:app" + std::to_string(v), L0,
                                                              rloop)));
                })));
            std::uint32_t from_park = to_park("i:r:park", body);
            wire(rloop, from_park);
            wire(r_begin, from_park);
        }
        // unmark P, close R
        std::uint32_t w_begin = g.state("i:wbegin");
        {
            std::uint32_t uloop = g.state("i:u2loop");
            std::uint32_t close = to_end("i:u2:go", g.write_cell("i:u2:hash", LH, w_begin));
            std::uint32_t body = enter_field("i:u2:nav", 2, scan("i:u2:scan", [&](L v) -> std::uint32_t {
                if (v == LH) return close;
                if (is_marked(v))
                    return g.rewrite_prev("i:u2:um" + std::to_string(v), plain(v), uloop);
                return 0;
            }));
            std::uint32_t from_park = to_park("i:u2:park", body);
            wire(uloop, from_park);
            wire(r_done, from_park);
        }
        // W field: B B MB, one B per IN cell, 2+extra B's, final '#'
        {
            std::uint32_t wloop = g.state("i:wloop");
            std::uint32_t w_done = g.state("i:wdone");
            std::uint32_t body = enter_field("i:w:nav", 1, scan("i:w:scan", [&](L v) -> std::uint32_t {
                if (v == LH) return w_done;
                if (is_marked(v)) return 0;
                return g.rewrite_prev("i:w:mk" + std::to_string(v), marked(v),
                                      to_end("i:w:go" + std::to_string(v),
                                             g.write_cell("i:w:app" + std::to_string(v), LB,
                                                          wloop)));
            }));
            std::uint32_t from_park = to_park("i:w:park", body);
            wire(wloop, from_park);
            std::uint32_t boot = g.write_cell(
                "i:w:b0", LB, g.write_cell("i:w:b1", LB, g.write_cell("i:w:b2", LMB, from_park)));
            wire(w_begin, boot);
            // unmark IN, pad, close, park, start
            std::uint32_t final_hash =
                g.write_cell("i:w:hash", LH, to_park("i:w:park2", start_sim));
            std::uint32_t pad = final_hash;
            for (std::uint32_t i = 0; i < 2 + extra_work; ++i)
                pad = g.write_cell("i:w:pad" + std::to_string(i), LB, pad);
            std::uint32_t pad_go = to_end("i:u3:go", pad);
            std::uint32_t u3loop = g.state("i:u3loop");
            std::uint32_t body3 = enter_field("i:u3:nav", 1, scan("i:u3:scan", [&](L v) -> std::uint32_t {
                if (v == LH) return pad_go;
                if (is_marked(v))
                    return g.rewrite_prev("i:u3:um" + std::to_string(v), plain(v), u3loop);
                return 0;
            }));
            std::uint32_t from_park3 = to_park("i:u3:park", body3);
            wire(u3loop, from_park3);
            wire(w_done, from_park3);
        }
        return i_entry;
    }

    // ---- simulated steps ----

    std::uint32_t step_state(std::uint32_t q, Sym sr) {
        std::uint64_t key = static_cast<std::uint64_t>(q) * 4 + sr;
        auto it = steps_.find(key);
        if (it != steps_.end()) return it->second;
        std::uint32_t s = g.state("s:" + std::to_string(q) + ":" + std::to_string(int(sr)));
        steps_.emplace(key, s);
        step_worklist_.emplace_back(q, sr);
        return s;
    }

    void build_step(std::uint32_t q, Sym sr) {
        std::uint32_t self = step_state(q, sr);
        if (q == m.q_accept) {
            wire(self, acc);
            return;
        }
        if (q == m.q_reject) {
            wire(self, rej);
            return;
        }
        std::string pre = "s:" + std::to_string(q) + ":" + std::to_string(int(sr));
        std::uint32_t read_w = enter_field(
            pre + ":nav", 4, find_mark(pre + ":fm", [&](L v) -> std::uint32_t {
                Sym sw = sym_of_cell(v);
                std::uint32_t c1 = apply_entry(q, sr, sw, 0);
                std::uint32_t c2 = apply_entry(q, sr, sw, 1);
                if (c1 == c2) return c1;
                std::uint32_t choose = g.state(pre + ":coin:" + std::to_string(int(sw)));
                g.set_coin(choose, c1, c2);
                return choose;
            }));
        wire(self, read_w);
    }

    std::unordered_map<std::string, std::uint32_t> apply_cache_;

    std::uint32_t apply_entry(std::uint32_t q, Sym sr, Sym sw, int v) {
        std::size_t ns = m.nsym();
        const Rtm::Move2& mv = (v ? m.d2w : m.d1w)[(q * ns + sr) * ns + sw];
        // identical actions collapse (most machines are nearly deterministic)
        std::string key = std::to_string(mv.succ) + ":" + std::to_string(int(mv.work_write)) +
                          ":" + std::to_string(int(mv.read_move)) + ":" +
                          std::to_string(int(mv.work_move)) + ":" + std::to_string(int(sr)) +
                          ":" + std::to_string(int(sw));
        auto it = apply_cache_.find(key);
        if (it != apply_cache_.end()) return it->second;
        std::string pre = "x:" + key;

        std::uint32_t after_work;
        if (mv.succ == m.q_accept) {
            after_work = acc;
        } else if (mv.succ == m.q_reject) {
            after_work = rej;
        } else if (mv.read_move == 0) {
            after_work = to_park(pre + ":pk", step_state(mv.succ, sr));
        } else {
            after_work = p_update(mv.succ, mv.read_move);
        }
        L ww = cell_of_sym(mv.work_write);
        std::uint32_t entry;
        if (mv.work_move == 0) {
            entry = g.rewrite_prev(pre + ":w", marked(ww), after_work);
        } else if (mv.work_move > 0) {
            std::uint32_t markr = g.read_cell(pre + ":mr", [&](L nv) -> std::uint32_t {
                if (nv == LH) return g.wedge(); // work area exhausted
                return g.rewrite_prev(pre + ":mm" + std::to_string(nv), marked(nv), after_work);
            });
            entry = g.rewrite_prev(pre + ":w", ww, markr);
        } else {
            std::uint32_t markl =
                g.hop(pre + ":bk", -6, g.read_cell(pre + ":ml", [&](L nv) -> std::uint32_t {
                    if (nv == LH) return g.wedge();
                    return g.rewrite_prev(pre + ":mm" + std::to_string(nv), marked(nv),
                                          after_work);
                }));
            entry = g.rewrite_prev(pre + ":w", ww, markl);
        }
        apply_cache_.emplace(key, entry);
        return entry;
    }

    // ---- position counter update ----

    std::uint32_t p_update(std::uint32_t succ, int dir) {
        std::uint64_t key = static_cast<std::uint64_t>(succ) * 2 + (dir > 0 ? 1 : 0);
        auto it = pu_cache_.find(key);
        if (it != pu_cache_.end()) return it->second;
        std::string pre = "pu:" + std::to_string(succ) + ":" + (dir > 0 ? "i" : "d");
        std::uint32_t cont = symbol_p(succ);

        std::uint32_t entry;
        if (dir > 0) {
            // negative sign: magnitude shrinks; normalize -0 to +0
            std::uint32_t normalize = goto_field(
                pre + ":nn", 2,
                g.hop(pre + ":nsk", +3,
                      zero_scan(pre + ":nz",
                                goto_field(pre + ":ns", 2, g.write_cell(pre + ":sw", L0, cont)),
                                cont)));
            entry = goto_field(pre, 2, g.read_cell(pre + ":sg", [&](L sgn) -> std::uint32_t {
                if (sgn == L0) return inc_walk(pre + ":im", cont);
                if (sgn == L1) return dec_walk(pre + ":dm", normalize);
                return g.wedge();
            }));
        } else {
            std::uint32_t become_neg = goto_field(
                pre + ":bn", 2,
                g.write_cell(pre + ":bs", L1, g.write_cell(pre + ":bb", L1, cont)));
            std::uint32_t dec_pos = goto_field(
                pre + ":rd", 2, g.hop(pre + ":rsk", +3, dec_walk(pre + ":dm", cont)));
            entry = goto_field(pre, 2, g.read_cell(pre + ":sg", [&](L sgn) -> std::uint32_t {
                if (sgn == L1) return inc_walk(pre + ":im", cont);
                if (sgn == L0) return zero_scan(pre + ":zs", become_neg, dec_pos);
                return g.wedge();
            }));
        }
        pu_cache_.emplace(key, entry);
        return entry;
    }

    // ---- cached read symbol recomputation ----

    std::uint32_t symbol_p(std::uint32_t succ) {
        auto it = sp_cache_.find(succ);
        if (it != sp_cache_.end()) return it->second;
        std::string pre = "sp:" + std::to_string(succ);

        std::uint32_t fin_blank = to_park(pre + ":fb", step_state(succ, 0));
        std::uint32_t fin_one = to_park(pre + ":fo", step_state(succ, 2));

        auto dec_r = [&](const std::string& p2, std::uint32_t to) {
            return goto_field(p2 + ":nav", 3, dec_walk(p2, to));
        };
        auto zero_r = [&](const std::string& p2, std::uint32_t to_zero,
                          std::uint32_t to_nonzero) {
            return goto_field(p2 + ":nav", 3, zero_scan(p2, to_zero, to_nonzero));
        };

        // ---- per-block subtraction, built from the last block backwards ----
        std::uint32_t next_block_entry = fin_blank; // after all blocks: blank
        for (std::int32_t i = static_cast<std::int32_t>(arity) - 1; i >= 0; --i) {
            std::string bp = pre + ":b" + std::to_string(i);
            std::uint32_t continue_after = next_block_entry;

            std::uint32_t loop_b0 = g.state(bp + ":l0");
            std::uint32_t loop_b1 = g.state(bp + ":l1");

            // r' survives the block: test it and subtract the separator
            std::uint32_t settle =
                zero_r(bp + ":zz", fin_blank, dec_r(bp + ":dd", continue_after));
            // x spent, borrow clear: unmark R, then settle
            std::uint32_t drain0 = goto_field(
                bp + ":d0nav", 3, find_mark(bp + ":d0", [&](L mv) -> std::uint32_t {
                    return g.rewrite_prev(bp + ":d0u" + std::to_string(mv), plain(mv), settle);
                }));
            // x spent, borrow pending: propagate through R's high bits
            std::uint32_t drain1 = g.state(bp + ":d1");
            {
                std::uint32_t body = goto_field(
                    bp + ":d1nav", 3, find_mark(bp + ":d1f", [&](L mv) -> std::uint32_t {
                        if (mv == LMB) return g.wedge();
                        if (mv == LM1) return g.rewrite_prev(bp + ":d1a", L0, settle);
                        return g.rewrite_prev(
                            bp + ":d1b", L1,
                            g.read_cell(bp + ":d1n", [&](L nv) -> std::uint32_t {
                                if (nv == LH) return fin_one; // borrowed past the top: r < x_i
                                return g.rewrite_prev(bp + ":d1m" + std::to_string(nv),
                                                      marked(nv), drain1);
                            }));
                    }));
                wire(drain1, body);
            }

            // apply one subtraction bit at R's mark and advance it
            auto r_apply = [&](int xb, int borrow, bool x_done) -> std::uint32_t {
                std::string rp = bp + ":ra" + std::to_string(xb) + std::to_string(borrow) +
                                 (x_done ? "x" : "");
                return goto_field(
                    rp + ":nav", 3, find_mark(rp + ":f", [&](L mv) -> std::uint32_t {
                        if (mv == LMB) return g.wedge();
                        int rb = mv == LM1 ? 1 : 0;
                        std::string rv = rp + ":" + std::to_string(rb);
                        int d = rb - xb - borrow;
                        int out = (d % 2 + 2) % 2;
                        int nb = d < 0 ? 1 : 0;
                        if (x_done && nb == 0) {
                            // keep the mark in place for drain0's unmark
                            return g.rewrite_prev(rv + ":wk", marked(out ? L1 : L0), drain0);
                        }
                        std::uint32_t next_loop =
                            x_done ? drain1 : (nb ? loop_b1 : loop_b0);
                        return g.rewrite_prev(
                            rv + ":w", out ? L1 : L0,
                            g.read_cell(rv + ":n", [&](L nv) -> std::uint32_t {
                                if (nv == LH) return nb ? fin_one : g.wedge();
                                return g.rewrite_prev(rv + ":m" + std::to_string(nv),
                                                      marked(nv), next_loop);
                            }));
                    }));
            };

            // one iteration: consume the IN mark, then apply the bit
            auto iterate = [&](int borrow) -> std::uint32_t {
                std::string ip = bp + ":it" + std::to_string(borrow);
                return goto_field(
                    ip + ":nav", 1, find_mark(ip + ":f", [&](L mv) -> std::uint32_t {
                        if (mv == LMB) return g.wedge();
                        int xb = mv == LM1 ? 1 : 0;
                        std::string xp = ip + ":" + std::to_string(xb);
                        std::uint32_t apply_more = r_apply(xb, borrow, false);
                        std::uint32_t apply_last = r_apply(xb, borrow, true);
                        return g.rewrite_prev(
                            xp + ":u", plain(mv),
                            g.read_cell(xp + ":n", [&](L nv) -> std::uint32_t {
                                if (nv == LB || nv == LH) return apply_last;
                                return g.rewrite_prev(xp + ":m" + std::to_string(nv),
                                                      marked(nv), apply_more);
                            }));
                    }));
            };
            wire(loop_b0, iterate(0));
            wire(loop_b1, iterate(1));

            // entry: mark R bit 0, then the block's LSB, then start
            std::uint32_t start_loop = jmp(bp + ":go", loop_b0);
            std::uint32_t mark_block;
            {
                int skip = static_cast<int>(arity) - 1 - i;
                std::uint32_t cur = g.read_cell(bp + ":mb", [&](L v) -> std::uint32_t {
                    if (v != L0 && v != L1) return g.wedge();
                    return g.rewrite_prev(bp + ":mbw" + std::to_string(v), marked(v),
                                          start_loop);
                });
                for (int s = 0; s < skip; ++s) {
                    std::uint32_t inner = cur;
                    cur = scan(bp + ":sk" + std::to_string(s), [&, inner](L v) -> std::uint32_t {
                        if (v == LB) return inner;
                        if (v == LH) return g.wedge();
                        return 0;
                    });
                }
                mark_block = goto_field(bp + ":mbn", 1, cur);
            }
            std::uint32_t mark_r = goto_field(
                bp + ":mrn", 3, g.read_cell(bp + ":mr", [&](L v) -> std::uint32_t {
                    if (v != L0 && v != L1) return g.wedge();
                    return g.rewrite_prev(bp + ":mrw" + std::to_string(v), marked(v),
                                          mark_block);
                }));
            next_block_entry = mark_r;
        }
        std::uint32_t blocks_entry = next_block_entry;

        // ---- copy P -> R, then r := p-1, test, r := r-1 ----
        std::uint32_t post_copy = g.state(pre + ":pc");
        {
            std::uint32_t after =
                dec_r(pre + ":d1", zero_r(pre + ":z1", fin_blank,
                                          dec_r(pre + ":d2", blocks_entry)));
            wire(post_copy, after);
        }
        std::uint32_t copy_loop = g.state(pre + ":cp");
        {
            auto write_r = [&](int b, bool last) {
                std::string cp = pre + ":cw" + std::to_string(b) + (last ? "l" : "");
                std::uint32_t done_t = last ? post_copy : copy_loop;
                return goto_field(cp + ":nav", 3, find_mark(cp, [&](L mv) -> std::uint32_t {
                    (void)mv;
                    if (last) return g.rewrite_prev(cp + ":w", b ? L1 : L0, done_t);
                    return g.rewrite_prev(
                        cp + ":w", b ? L1 : L0,
                        g.read_cell(cp + ":n", [&](L nv) -> std::uint32_t {
                            if (nv == LH) return g.wedge();
                            return g.rewrite_prev(cp + ":m" + std::to_string(nv), marked(nv),
                                                  done_t);
                        }));
                }));
            };
            std::array<std::array<std::uint32_t, 2>, 2> writers{};
            for (int b = 0; b < 2; ++b)
                for (int last = 0; last < 2; ++last) writers[b][last] = write_r(b, last == 1);
            std::uint32_t body = goto_field(
                pre + ":cpnav", 2, find_mark(pre + ":cpf", [&](L mv) -> std::uint32_t {
                    if (mv == LMB) return g.wedge();
                    int b = mv == LM1 ? 1 : 0;
                    std::string cb = pre + ":cp" + std::to_string(b);
                    return g.rewrite_prev(
                        cb + ":u", plain(mv),
                        g.read_cell(cb + ":n", [&](L nv) -> std::uint32_t {
                            if (nv == LH) return writers[b][1];
                            return g.rewrite_prev(cb + ":m" + std::to_string(nv), marked(nv),
                                                  writers[b][0]);
                        }));
                }));
            wire(copy_loop, body);
        }
        std::uint32_t start_copy;
        {
            std::uint32_t mark_r0 = goto_field(
                pre + ":m0r", 3, g.read_cell(pre + ":m0rr", [&](L v) -> std::uint32_t {
                    if (v != L0 && v != L1) return g.wedge();
                    return g.rewrite_prev(pre + ":m0rw" + std::to_string(v), marked(v),
                                          copy_loop);
                }));
            start_copy = goto_field(
                pre + ":m0p", 2,
                g.hop(pre + ":m0sk", +3, g.read_cell(pre + ":m0pr", [&](L v) -> std::uint32_t {
                    if (v != L0 && v != L1) return g.wedge();
                    return g.rewrite_prev(pre + ":m0pw" + std::to_string(v), marked(v), mark_r0);
                })));
        }

        // sign and zero tests up front
        std::uint32_t entry = goto_field(
            pre + ":p0", 2, g.read_cell(pre + ":sg", [&](L sgn) -> std::uint32_t {
                if (sgn == L1) return fin_blank;
                if (sgn != L0) return g.wedge();
                return zero_scan(pre + ":z0", fin_blank, start_copy);
            }));
        sp_cache_.emplace(succ, entry);
        return entry;
    }

    Rtm build() {
        std::uint32_t start = step_state(m.q0, 0);
        std::uint32_t init = build_init(start);
        while (!step_worklist_.empty()) {
            auto [q, sr] = step_worklist_.back();
            step_worklist_.pop_back();
            build_step(q, sr);
        }
        Rtm out = g.finish(init, acc, rej);
        return out;
    }
};

} // namespace

Rtm unary_to_binary_tm(const Rtm& m, const UnaryToBinaryOptions& opts) {
    m.validate();
    if (!m.two_tape) fail(Err::Validation, "pass expects a two-tape machine");
    if (m.nsym() != 3 || m.symbols[1] != "0" || m.symbols[2] != "1")
        fail(Err::Validation, "pass expects tape alphabet {_,0,1}");
    Builder b(m, 1, opts.work_cells);
    Rtm out = b.build();
    out.space_linear = 13;
    out.space_const = 110 + 3 * opts.work_cells;
    return out;
}

} // namespace bcp
