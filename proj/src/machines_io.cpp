#include "bcp/machines_io.hpp"

#include <sstream>
#include <unordered_map>

#include "bcp/protocol_io.hpp"

namespace bcp {

namespace {

struct MTok {
    std::string text;
    int line, col;
};

std::vector<std::vector<MTok>> tokenize_lines(std::string_view text) {
    std::vector<std::vector<MTok>> lines;
    int lineno = 1;
    std::size_t i = 0;
    while (i <= text.size()) {
        std::size_t end = text.find('\n', i);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(i, end - i);
        std::vector<MTok> toks;
        std::size_t j = 0;
        while (j < line.size()) {
            char c = line[j];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++j;
                continue;
            }
            if (c == '#') break;
            int col = static_cast<int>(j) + 1;
            if (c == ',') {
                toks.push_back({",", lineno, col});
                ++j;
                continue;
            }
            if (c == '-' && j + 1 < line.size() && line[j + 1] == '>') {
                toks.push_back({"->", lineno, col});
                j += 2;
                continue;
            }
            std::size_t k = j;
            while (k < line.size()) {
                char d = line[k];
                if (d == ' ' || d == '\t' || d == '\r' || d == ',' || d == '#') break;
                if (d == '-' && k + 1 < line.size() && line[k + 1] == '>') break;
                ++k;
            }
            if (k == j) ++k;
            toks.push_back({std::string(line.substr(j, k - j)), lineno, col});
            j = k;
        }
        if (!toks.empty()) lines.push_back(std::move(toks));
        if (end == text.size()) break;
        i = end + 1;
        ++lineno;
    }
    return lines;
}

[[noreturn]] void bad(const MTok& t, const std::string& msg) {
    throw ParseError(msg + " near '" + t.text + "'", t.line, t.col);
}

struct Rows {
    std::unordered_map<std::string, std::vector<MTok>> scalars; // "counters:" etc
    std::unordered_map<std::string, std::vector<std::vector<MTok>>> tables; // t1/t2/d1/d2
    std::string tag;
};

Rows split_rows(std::string_view text, std::initializer_list<const char*> scalar_keys,
                std::initializer_list<const char*> table_keys) {
    Rows rows;
    auto lines = tokenize_lines(text);
    if (lines.empty()) throw ParseError("empty machine description", 1, 1);
    rows.tag = lines[0][0].text;
    std::string table;
    for (std::size_t li = (lines[0].size() == 1 ? 1 : 0); li < lines.size(); ++li) {
        auto& toks = lines[li];
        if (li == 0) continue;
        std::string head = toks[0].text;
        bool is_scalar = false, is_table = false;
        for (const char* k : scalar_keys) is_scalar |= head == std::string(k) + ":";
        for (const char* k : table_keys) is_table |= head == std::string(k) + ":";
        if (is_table) {
            table = head.substr(0, head.size() - 1);
            rows.tables[table];
            if (toks.size() > 1) bad(toks[1], "table header takes no arguments");
            continue;
        }
        if (is_scalar) {
            table.clear();
            std::string key = head.substr(0, head.size() - 1);
            if (rows.scalars.count(key)) bad(toks[0], "duplicate key");
            rows.scalars[key] = std::vector<MTok>(toks.begin() + 1, toks.end());
            continue;
        }
        if (table.empty()) bad(toks[0], "row outside any table");
        rows.tables[table].push_back(toks);
    }
    return rows;
}

std::uint64_t parse_uint(const MTok& t) {
    for (char c : t.text)
        if (!std::isdigit(static_cast<unsigned char>(c))) bad(t, "expected a number");
    return std::stoull(t.text);
}

class NameIndex {
  public:
    explicit NameIndex(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i)
            index_.emplace(names[i], static_cast<std::uint32_t>(i));
    }
    std::uint32_t resolve(const MTok& t) const {
        auto it = index_.find(t.text);
        if (it == index_.end()) bad(t, "undeclared state");
        return it->second;
    }

  private:
    std::unordered_map<std::string, std::uint32_t> index_;
};

std::vector<std::string> name_list(const Rows& rows, const char* key) {
    auto it = rows.scalars.find(key);
    if (it == rows.scalars.end()) throw ParseError(std::string("missing ") + key + ":", 1, 1);
    std::vector<std::string> out;
    for (const auto& t : it->second) out.push_back(t.text);
    return out;
}

const MTok& single(const Rows& rows, const char* key) {
    auto it = rows.scalars.find(key);
    if (it == rows.scalars.end() || it->second.size() != 1)
        throw ParseError(std::string("expected one value for ") + key + ":", 1, 1);
    return it->second[0];
}

} // namespace

// ---- counter machines ----

std::string print_cm(const CounterMachine& cm) {
    std::ostringstream os;
    os << "cm\n";
    os << "counters: " << cm.counters << "\n";
    os << "states:";
    for (const auto& s : cm.state_names) os << ' ' << s;
    os << "\n";
    os << "initial: " << cm.state_names[cm.init_state] << "\n";
    if (cm.n_bounded) os << "bounded: n\n";
    bool same = true;
    for (std::size_t q = 0; q < cm.t1.size(); ++q) {
        const auto& a = cm.t1[q];
        const auto& b = cm.t2[q];
        if (a.counter != b.counter || a.cmd != b.cmd || a.succ0 != b.succ0 ||
            a.succ1 != b.succ1) {
            same = false;
            break;
        }
    }
    auto print_table = [&](const std::vector<CmTransition>& t, const char* name) {
        os << name << ":\n";
        for (std::size_t q = 0; q < t.size(); ++q) {
            if (q == cm.state0 || q == cm.state1) continue;
            os << cm.state_names[q] << " -> c" << (t[q].counter + 1) << ' '
               << cm_cmd_name(t[q].cmd) << ' ' << cm.state_names[t[q].succ0] << ' '
               << cm.state_names[t[q].succ1] << "\n";
        }
    };
    print_table(cm.t1, "t1");
    if (!same) print_table(cm.t2, "t2");
    return os.str();
}

CounterMachine parse_cm(std::string_view text) {
    Rows rows = split_rows(text, {"counters", "states", "initial", "bounded"}, {"t1", "t2"});
    if (rows.tag != "cm") throw ParseError("expected a cm description", 1, 1);
    CounterMachine cm;
    cm.counters = static_cast<std::uint32_t>(parse_uint(single(rows, "counters")));
    cm.state_names = name_list(rows, "states");
    NameIndex names(cm.state_names);
    cm.init_state = names.resolve(single(rows, "initial"));
    if (auto it = rows.scalars.find("bounded"); it != rows.scalars.end()) cm.n_bounded = true;
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < cm.state_names.size(); ++i) {
        if (cm.state_names[i] == "0") {
            cm.state0 = static_cast<std::uint32_t>(i);
            has0 = true;
        }
        if (cm.state_names[i] == "1") {
            cm.state1 = static_cast<std::uint32_t>(i);
            has1 = true;
        }
    }
    if (!has0 || !has1) throw ParseError("states 0 and 1 are required", 1, 1);

    auto parse_table = [&](const char* key, std::vector<CmTransition>& out) {
        out.assign(cm.state_names.size(), CmTransition{});
        for (std::uint32_t q : {cm.state0, cm.state1}) out[q] = {0, CmCmd::IsZero, q, q};
        std::vector<bool> seen(cm.state_names.size(), false);
        auto it = rows.tables.find(key);
        if (it == rows.tables.end()) return false;
        for (const auto& toks : it->second) {
            std::size_t i = 0;
            auto next = [&]() -> const MTok& {
                if (i >= toks.size()) bad(toks.back(), "truncated row");
                return toks[i++];
            };
            std::uint32_t q = names.resolve(next());
            if (next().text != "->") bad(toks[i - 1], "expected ->");
            const MTok& ctr = next();
            if (ctr.text.size() < 2 || ctr.text[0] != 'c') bad(ctr, "expected a counter cN");
            std::uint64_t cidx = std::stoull(ctr.text.substr(1));
            if (cidx == 0 || cidx > cm.counters) bad(ctr, "counter out of range");
            const MTok& cmd_tok = next();
            auto cmd = cm_cmd_from_name(cmd_tok.text);
            if (!cmd) bad(cmd_tok, "unknown command");
            std::uint32_t s0 = names.resolve(next());
            std::uint32_t s1 = names.resolve(next());
            if (i != toks.size()) bad(toks[i], "trailing tokens");
            if (seen[q]) bad(toks[0], "duplicate row");
            if (q == cm.state0 || q == cm.state1) bad(toks[0], "halting states are implicit");
            seen[q] = true;
            out[q] = {static_cast<std::uint32_t>(cidx - 1), *cmd, s0, s1};
        }
        for (std::size_t q = 0; q < seen.size(); ++q)
            if (!seen[q] && q != cm.state0 && q != cm.state1)
                throw ParseError("state '" + cm.state_names[q] + "' lacks a " + key + " row", 1, 1);
        return true;
    };
    parse_table("t1", cm.t1);
    if (!parse_table("t2", cm.t2)) cm.t2 = cm.t1;
    cm.validate();
    return cm;
}

// ---- stack machines ----

std::string print_sm(const StackMachine& sm, const StackInputPlan& plan) {
    std::ostringstream os;
    os << "sm\n";
    os << "stacks: " << sm.stacks << "\n";
    os << "states:";
    for (const auto& s : sm.state_names) os << ' ' << s;
    os << "\n";
    os << "initial: " << sm.state_names[sm.init_state] << "\n";
    os << "accept: " << sm.state_names[sm.accept_state] << "\n";
    os << "reject: " << sm.state_names[sm.reject_state] << "\n";
    if (!plan.input_stacks.empty()) {
        os << "input:";
        for (auto s : plan.input_stacks) os << " s" << (s + 1);
        os << "\n";
    }
    bool same = sm.d1.size() == sm.d2.size();
    for (std::size_t q = 0; same && q < sm.d1.size(); ++q) {
        const auto& a = sm.d1[q];
        const auto& b = sm.d2[q];
        same = a.is_push == b.is_push && a.stack == b.stack && a.bit == b.bit &&
               a.succ == b.succ && a.on0 == b.on0 && a.on1 == b.on1 && a.on_empty == b.on_empty;
    }
    auto print_table = [&](const std::vector<SmOp>& t, const char* name) {
        os << name << ":\n";
        for (std::size_t q = 0; q < t.size(); ++q) {
            if (q == sm.accept_state || q == sm.reject_state) continue;
            const SmOp& op = t[q];
            os << sm.state_names[q] << " -> ";
            if (op.is_push)
                os << "push s" << (op.stack + 1) << ' ' << int(op.bit) << ' '
                   << sm.state_names[op.succ];
            else
                os << "pop s" << (op.stack + 1) << ' ' << sm.state_names[op.on0] << ' '
                   << sm.state_names[op.on1] << ' ' << sm.state_names[op.on_empty];
            os << "\n";
        }
    };
    print_table(sm.d1, "d1");
    if (!same) print_table(sm.d2, "d2");
    return os.str();
}

StackPipeline parse_sm(std::string_view text) {
    Rows rows = split_rows(text, {"stacks", "states", "initial", "accept", "reject", "input"},
                           {"d1", "d2"});
    if (rows.tag != "sm") throw ParseError("expected an sm description", 1, 1);
    StackPipeline out;
    StackMachine& sm = out.sm;
    sm.stacks = static_cast<std::uint32_t>(parse_uint(single(rows, "stacks")));
    sm.state_names = name_list(rows, "states");
    NameIndex names(sm.state_names);
    sm.init_state = names.resolve(single(rows, "initial"));
    sm.accept_state = names.resolve(single(rows, "accept"));
    sm.reject_state = names.resolve(single(rows, "reject"));
    auto parse_stack = [&](const MTok& t) {
        if (t.text.size() < 2 || t.text[0] != 's') bad(t, "expected a stack sN");
        std::uint64_t idx = std::stoull(t.text.substr(1));
        if (idx == 0 || idx > sm.stacks) bad(t, "stack out of range");
        return static_cast<std::uint32_t>(idx - 1);
    };
    if (auto it = rows.scalars.find("input"); it != rows.scalars.end())
        for (const auto& t : it->second) out.plan.input_stacks.push_back(parse_stack(t));

    auto parse_table = [&](const char* key, std::vector<SmOp>& tab) {
        tab.assign(sm.state_names.size(), SmOp{});
        for (std::uint32_t q : {sm.accept_state, sm.reject_state}) {
            SmOp idle;
            idle.is_push = false;
            idle.stack = 0;
            idle.on0 = idle.on1 = idle.on_empty = q;
            tab[q] = idle;
        }
        std::vector<bool> seen(sm.state_names.size(), false);
        auto it = rows.tables.find(key);
        if (it == rows.tables.end()) return false;
        for (const auto& toks : it->second) {
            std::size_t i = 0;
            auto next = [&]() -> const MTok& {
                if (i >= toks.size()) bad(toks.back(), "truncated row");
                return toks[i++];
            };
            std::uint32_t q = names.resolve(next());
            if (next().text != "->") bad(toks[i - 1], "expected ->");
            const MTok& kind = next();
            SmOp op;
            if (kind.text == "push") {
                op.is_push = true;
                op.stack = parse_stack(next());
                std::uint64_t bit = parse_uint(next());
                if (bit > 1) bad(toks[i - 1], "bit must be 0 or 1");
                op.bit = static_cast<std::uint8_t>(bit);
                op.succ = names.resolve(next());
            } else if (kind.text == "pop") {
                op.is_push = false;
                op.stack = parse_stack(next());
                op.on0 = names.resolve(next());
                op.on1 = names.resolve(next());
                op.on_empty = names.resolve(next());
            } else {
                bad(kind, "expected push or pop");
            }
            if (i != toks.size()) bad(toks[i], "trailing tokens");
            if (seen[q]) bad(toks[0], "duplicate row");
            if (q == sm.accept_state || q == sm.reject_state)
                bad(toks[0], "halting states are implicit");
            seen[q] = true;
            tab[q] = op;
        }
        for (std::size_t q = 0; q < seen.size(); ++q)
            if (!seen[q] && q != sm.accept_state && q != sm.reject_state)
                throw ParseError("state '" + sm.state_names[q] + "' lacks a " + key + " row", 1,
                                 1);
        return true;
    };
    parse_table("d1", sm.d1);
    if (!parse_table("d2", sm.d2)) sm.d2 = sm.d1;
    sm.validate();
    return out;
}

// ---- turing machines ----

namespace {

char move_char(std::int8_t m) { return m < 0 ? 'L' : (m > 0 ? 'R' : 'S'); }

std::int8_t parse_move(const MTok& t) {
    if (t.text == "L") return -1;
    if (t.text == "R") return 1;
    if (t.text == "S") return 0;
    bad(t, "expected L, R or S");
}

} // namespace

std::string print_rtm(const Rtm& m) {
    std::ostringstream os;
    os << "rtm\n";
    os << "tapes: " << (m.two_tape ? 2 : 1) << "\n";
    os << "symbols:";
    for (const auto& s : m.symbols) os << ' ' << s;
    os << "\n";
    os << "states:";
    for (const auto& s : m.state_names) os << ' ' << s;
    os << "\n";
    os << "initial: " << m.state_names[m.q0] << "\n";
    os << "accept: " << m.state_names[m.q_accept] << "\n";
    os << "reject: " << m.state_names[m.q_reject] << "\n";
    if (m.space_linear || m.space_const)
        os << "space: " << m.space_linear << ' ' << m.space_const << "\n";
    std::size_t ns = m.nsym();
    bool same = m.two_tape ? m.d1w.size() == m.d2w.size() : m.d1.size() == m.d2.size();
    if (m.two_tape) {
        for (std::size_t i = 0; same && i < m.d1w.size(); ++i)
            same = m.d1w[i].succ == m.d2w[i].succ && m.d1w[i].work_write == m.d2w[i].work_write &&
                   m.d1w[i].read_move == m.d2w[i].read_move &&
                   m.d1w[i].work_move == m.d2w[i].work_move;
    } else {
        for (std::size_t i = 0; same && i < m.d1.size(); ++i)
            same = m.d1[i].succ == m.d2[i].succ && m.d1[i].write == m.d2[i].write &&
                   m.d1[i].move == m.d2[i].move;
    }
    auto print1 = [&](const std::vector<Rtm::Move1>& t, const char* name) {
        os << name << ":\n";
        for (std::uint32_t q = 0; q < m.state_names.size(); ++q)
            for (Sym s = 0; s < ns; ++s) {
                const auto& mv = t[q * ns + s];
                if (mv.succ == q && mv.write == s && mv.move == 0) continue;
                os << m.state_names[q] << " , " << m.symbols[s] << " -> "
                   << m.state_names[mv.succ] << " , " << m.symbols[mv.write] << " , "
                   << move_char(mv.move) << "\n";
            }
    };
    auto print2 = [&](const std::vector<Rtm::Move2>& t, const char* name) {
        os << name << ":\n";
        for (std::uint32_t q = 0; q < m.state_names.size(); ++q)
            for (Sym r = 0; r < ns; ++r)
                for (Sym w = 0; w < ns; ++w) {
                    const auto& mv = t[(q * ns + r) * ns + w];
                    if (mv.succ == q && mv.work_write == w && mv.read_move == 0 &&
                        mv.work_move == 0)
                        continue;
                    os << m.state_names[q] << " , " << m.symbols[r] << " , " << m.symbols[w]
                       << " -> " << m.state_names[mv.succ] << " , " << m.symbols[mv.work_write]
                       << " , " << move_char(mv.read_move) << " , " << move_char(mv.work_move)
                       << "\n";
                }
    };
    if (m.two_tape) {
        print2(m.d1w, "d1");
        if (!same) print2(m.d2w, "d2");
    } else {
        print1(m.d1, "d1");
        if (!same) print1(m.d2, "d2");
    }
    return os.str();
}

Rtm parse_rtm(std::string_view text) {
    Rows rows = split_rows(
        text, {"tapes", "symbols", "states", "initial", "accept", "reject", "space"},
        {"d1", "d2"});
    if (rows.tag != "rtm") throw ParseError("expected an rtm description", 1, 1);
    Rtm m;
    std::uint64_t tapes = parse_uint(single(rows, "tapes"));
    if (tapes != 1 && tapes != 2) throw ParseError("tapes must be 1 or 2", 1, 1);
    m.two_tape = tapes == 2;
    m.symbols = name_list(rows, "symbols");
    m.state_names = name_list(rows, "states");
    NameIndex states(m.state_names);
    NameIndex syms(m.symbols);
    m.q0 = states.resolve(single(rows, "initial"));
    m.q_accept = states.resolve(single(rows, "accept"));
    m.q_reject = states.resolve(single(rows, "reject"));
    if (auto it = rows.scalars.find("space"); it != rows.scalars.end()) {
        if (it->second.size() != 2) throw ParseError("space: takes two numbers", 1, 1);
        m.space_linear = parse_uint(it->second[0]);
        m.space_const = parse_uint(it->second[1]);
    }
    std::size_t ns = m.nsym();

    auto fill_default1 = [&](std::vector<Rtm::Move1>& t) {
        t.resize(m.state_names.size() * ns);
        for (std::uint32_t q = 0; q < m.state_names.size(); ++q)
            for (Sym s = 0; s < ns; ++s) t[q * ns + s] = {q, s, 0};
    };
    auto fill_default2 = [&](std::vector<Rtm::Move2>& t) {
        t.resize(m.state_names.size() * ns * ns);
        for (std::uint32_t q = 0; q < m.state_names.size(); ++q)
            for (Sym r = 0; r < ns; ++r)
                for (Sym w = 0; w < ns; ++w) t[(q * ns + r) * ns + w] = {q, w, 0, 0};
    };
    auto parse_table = [&](const char* key, std::vector<Rtm::Move1>& t1,
                           std::vector<Rtm::Move2>& t2) {
        if (m.two_tape)
            fill_default2(t2);
        else
            fill_default1(t1);
        auto it = rows.tables.find(key);
        if (it == rows.tables.end()) return false;
        for (const auto& toks : it->second) {
            std::size_t i = 0;
            auto next = [&]() -> const MTok& {
                if (i >= toks.size()) bad(toks.back(), "truncated row");
                return toks[i++];
            };
            auto comma = [&]() {
                if (next().text != ",") bad(toks[i - 1], "expected ','");
            };
            auto arrow = [&]() {
                if (next().text != "->") bad(toks[i - 1], "expected ->");
            };
            std::uint32_t q = states.resolve(next());
            comma();
            Sym r = static_cast<Sym>(syms.resolve(next()));
            if (m.two_tape) {
                comma();
                Sym w = static_cast<Sym>(syms.resolve(next()));
                arrow();
                std::uint32_t q2 = states.resolve(next());
                comma();
                Sym w2 = static_cast<Sym>(syms.resolve(next()));
                comma();
                std::int8_t rm = parse_move(next());
                comma();
                std::int8_t wm = parse_move(next());
                if (i != toks.size()) bad(toks[i], "trailing tokens");
                t2[(q * ns + r) * ns + w] = {q2, w2, rm, wm};
            } else {
                arrow();
                std::uint32_t q2 = states.resolve(next());
                comma();
                Sym w = static_cast<Sym>(syms.resolve(next()));
                comma();
                std::int8_t mv = parse_move(next());
                if (i != toks.size()) bad(toks[i], "trailing tokens");
                t1[q * ns + r] = {q2, w, mv};
            }
        }
        return true;
    };
    parse_table("d1", m.d1, m.d1w);
    if (!parse_table("d2", m.d2, m.d2w)) {
        m.d2 = m.d1;
        m.d2w = m.d1w;
    }
    m.validate();
    return m;
}

CounterMachine load_cm(const std::string& path) { return parse_cm(load_text(path)); }
StackPipeline load_sm(const std::string& path) { return parse_sm(load_text(path)); }
Rtm load_rtm(const std::string& path) { return parse_rtm(load_text(path)); }

} // namespace bcp
