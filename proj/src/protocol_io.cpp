#include "bcp/protocol_io.hpp"

#include <fstream>
#include <sstream>

namespace bcp {

namespace {

struct Token {
    std::string text;
    int line;
    int col;
};

struct Line {
    std::vector<Token> tokens;
    int number;
};

bool is_reserved(char c) { return c == ',' || c == ';' || c == '#'; }

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    int lineno = 1;
    std::size_t i = 0;
    while (i <= text.size()) {
        std::size_t end = text.find('\n', i);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(i, end - i);
        Line out{{}, lineno};
        std::size_t j = 0;
        while (j < line.size()) {
            char c = line[j];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++j;
                continue;
            }
            if (c == '#') break;
            int col = static_cast<int>(j) + 1;
            if (c == ',' || c == ';') {
                out.tokens.push_back({std::string(1, c), lineno, col});
                ++j;
                continue;
            }
            if (c == '-' && j + 1 < line.size() && line[j + 1] == '>') {
                out.tokens.push_back({"->", lineno, col});
                j += 2;
                continue;
            }
            std::size_t k = j;
            while (k < line.size()) {
                char d = line[k];
                if (d == ' ' || d == '\t' || d == '\r' || is_reserved(d)) break;
                if (d == '-' && k + 1 < line.size() && line[k + 1] == '>') break;
                ++k;
            }
            if (k == j) ++k;
            out.tokens.push_back({std::string(line.substr(j, k - j)), lineno, col});
            j = k;
        }
        if (!out.tokens.empty()) lines.push_back(std::move(out));
        if (end == text.size()) break;
        i = end + 1;
        ++lineno;
    }
    return lines;
}

const char* kSections[] = {"states:", "globals:", "inputs:", "accepting:",
                           "transitions:", "transitions2:", "rendezvous:"};

bool is_section(const std::string& tok) {
    for (const char* s : kSections)
        if (tok == s) return true;
    return false;
}

struct RawFile {
    // section name (without ':') -> lines of tokens
    std::map<std::string, std::vector<std::vector<Token>>> sections;
};

RawFile split_sections(std::string_view text) {
    RawFile raw;
    std::string current;
    for (auto& line : tokenize(text)) {
        if (is_section(line.tokens[0].text)) {
            current = line.tokens[0].text;
            current.pop_back();
            if (raw.sections.count(current))
                throw ParseError("duplicate section '" + current + "'", line.tokens[0].line,
                                 line.tokens[0].col);
            raw.sections[current];
            line.tokens.erase(line.tokens.begin());
            if (line.tokens.empty()) continue;
        }
        if (current.empty())
            throw ParseError("content before any section", line.tokens[0].line, line.tokens[0].col);
        raw.sections[current].push_back(std::move(line.tokens));
    }
    return raw;
}

[[noreturn]] void bad(const Token& t, const std::string& msg) {
    throw ParseError(msg + " near '" + t.text + "'", t.line, t.col);
}

class SectionReader {
  public:
    explicit SectionReader(const std::vector<Token>& toks) : toks_(toks) {}
    bool done() const { return i_ >= toks_.size(); }
    const Token& peek() const {
        if (done()) throw ParseError("unexpected end of line", last().line, last().col + 1);
        return toks_[i_];
    }
    const Token& take() {
        const Token& t = peek();
        ++i_;
        return t;
    }
    const Token& expect(const std::string& text) {
        const Token& t = take();
        if (t.text != text) bad(t, "expected '" + text + "'");
        return t;
    }
    const Token& last() const { return toks_.empty() ? dummy_ : toks_[std::min(i_, toks_.size() - 1)]; }

  private:
    const std::vector<Token>& toks_;
    std::size_t i_ = 0;
    inline static const Token dummy_{"", 1, 1};
};

struct ParsedCore {
    ProtocolSpec spec;
    std::unordered_map<std::string, StateId> index;
    const RawFile* raw = nullptr;

    StateId resolve(const Token& t) const {
        auto it = index.find(t.text);
        if (it == index.end()) bad(t, "undeclared state");
        return it->second;
    }
};

std::vector<BroadcastTransition> parse_transition_section(const ParsedCore& core,
                                                          const std::vector<std::vector<Token>>& lines) {
    std::vector<BroadcastTransition> table(core.spec.states.size());
    for (StateId q = 0; q < table.size(); ++q) table[q] = {q, {}};
    std::vector<bool> seen(table.size(), false);
    for (const auto& lt : lines) {
        SectionReader r(lt);
        const Token& src_tok = r.peek();
        StateId src = core.resolve(r.take());
        r.expect("->");
        StateId succ = core.resolve(r.take());
        Response resp;
        if (!r.done()) {
            r.expect(";");
            while (true) {
                StateId from = core.resolve(r.take());
                r.expect("->");
                StateId to = core.resolve(r.take());
                resp.moves.emplace_back(from, to);
                if (r.done()) break;
                r.expect(",");
            }
        }
        if (seen[src]) bad(src_tok, "duplicate transition");
        seen[src] = true;
        resp.normalize();
        table[src] = BroadcastTransition{succ, std::move(resp)};
    }
    return table;
}

ParsedCore parse_core(const RawFile& raw) {
    ParsedCore core;
    core.raw = &raw;
    auto states_it = raw.sections.find("states");
    if (states_it == raw.sections.end()) throw ParseError("missing states section", 1, 1);
    for (const auto& lt : states_it->second)
        for (const auto& t : lt) {
            if (core.index.count(t.text)) bad(t, "duplicate state");
            core.index.emplace(t.text, static_cast<StateId>(core.spec.states.size()));
            core.spec.states.push_back(t.text);
        }
    if (core.spec.states.empty()) throw ParseError("empty states section", 1, 1);

    if (auto it = raw.sections.find("globals"); it != raw.sections.end()) {
        std::vector<std::string> labels;
        for (const auto& lt : it->second)
            for (const auto& t : lt) labels.push_back(t.text);
        core.spec.globals = std::move(labels);
    }
    if (auto it = raw.sections.find("inputs"); it != raw.sections.end()) {
        for (const auto& lt : it->second) {
            SectionReader r(lt);
            while (!r.done()) {
                const Token& sym = r.take();
                r.expect("->");
                StateId q = core.resolve(r.take());
                for (const auto& s : core.spec.input_alphabet)
                    if (s == sym.text) bad(sym, "duplicate input symbol");
                core.spec.input_alphabet.push_back(sym.text);
                core.spec.input_map.push_back(q);
                if (!r.done()) r.expect(",");
            }
        }
    }
    core.spec.accepting.assign(core.spec.states.size(), false);
    if (auto it = raw.sections.find("accepting"); it != raw.sections.end()) {
        for (const auto& lt : it->second)
            for (const auto& t : lt) core.spec.accepting[core.resolve(t)] = true;
    }
    auto tr = raw.sections.find("transitions");
    core.spec.transitions = tr == raw.sections.end()
                                ? parse_transition_section(core, {})
                                : parse_transition_section(core, tr->second);
    return core;
}

void forbid(const RawFile& raw, std::initializer_list<const char*> sections, const char* what) {
    for (const char* s : sections)
        if (raw.sections.count(s))
            throw ParseError(std::string("section '") + s + "' not allowed in " + what, 1, 1);
}

void print_states(std::ostringstream& os, const char* name, const std::vector<std::string>& labels) {
    os << name << ":";
    std::size_t width = 0;
    for (const auto& s : labels) {
        if (width > 100) {
            os << "\n ";
            width = 0;
        }
        os << ' ' << s;
        width += s.size() + 1;
    }
    os << "\n";
}

void print_transition_section(std::ostringstream& os, const ProtocolSpec& spec,
                              const std::vector<BroadcastTransition>& table, const char* name) {
    os << name << ":\n";
    for (StateId q = 0; q < table.size(); ++q) {
        const auto& t = table[q];
        if (t.successor == q && t.response.identity()) continue;
        os << spec.states[q] << " -> " << spec.states[t.successor];
        bool first = true;
        for (auto [from, to] : t.response.moves) {
            os << (first ? " ; " : ", ") << spec.states[from] << " -> " << spec.states[to];
            first = false;
        }
        os << "\n";
    }
}

void print_core(std::ostringstream& os, const ProtocolSpec& spec) {
    print_states(os, "states", spec.states);
    if (spec.globals) print_states(os, "globals", *spec.globals);
    if (!spec.input_alphabet.empty()) {
        os << "inputs:";
        for (std::size_t i = 0; i < spec.input_alphabet.size(); ++i)
            os << (i ? ", " : " ") << spec.input_alphabet[i] << " -> "
               << spec.states[spec.input_map[i]];
        os << "\n";
    }
    bool any_accepting = false;
    for (bool a : spec.accepting) any_accepting |= a;
    if (any_accepting) {
        std::vector<std::string> acc;
        for (StateId q = 0; q < spec.states.size(); ++q)
            if (spec.accepting[q]) acc.push_back(spec.states[q]);
        print_states(os, "accepting", acc);
    }
    print_transition_section(os, spec, spec.transitions, "transitions");
}

} // namespace

std::string print_protocol(const ProtocolSpec& spec) {
    std::ostringstream os;
    print_core(os, spec);
    return os.str();
}

ProtocolSpec parse_protocol(std::string_view text) {
    RawFile raw = split_sections(text);
    forbid(raw, {"transitions2", "rendezvous"}, "a protocol file");
    ParsedCore core = parse_core(raw);
    core.spec.validate();
    return std::move(core.spec);
}

std::string print_nondet(const NondetSpec& nd) {
    std::ostringstream os;
    print_core(os, nd.spec);
    print_transition_section(os, nd.spec, nd.delta1, "transitions2");
    return os.str();
}

NondetSpec parse_nondet(std::string_view text) {
    RawFile raw = split_sections(text);
    forbid(raw, {"rendezvous"}, "a nondet protocol file");
    ParsedCore core = parse_core(raw);
    NondetSpec nd;
    auto it = raw.sections.find("transitions2");
    nd.delta1 = parse_transition_section(core, it == raw.sections.end()
                                                   ? std::vector<std::vector<Token>>{}
                                                   : it->second);
    nd.spec = std::move(core.spec);
    nd.validate();
    return nd;
}

std::string print_rendezvous(const RendezvousSpec& rs) {
    std::ostringstream os;
    print_core(os, rs.spec);
    os << "rendezvous:\n";
    for (const auto& [from, to] : rs.rendezvous) {
        os << rs.spec.states[from.first] << " , " << rs.spec.states[from.second] << " -> "
           << rs.spec.states[to.first] << " , " << rs.spec.states[to.second] << "\n";
    }
    return os.str();
}

RendezvousSpec parse_rendezvous(std::string_view text) {
    RawFile raw = split_sections(text);
    forbid(raw, {"transitions2"}, "a rendezvous protocol file");
    ParsedCore core = parse_core(raw);
    RendezvousSpec rs;
    if (auto it = raw.sections.find("rendezvous"); it != raw.sections.end()) {
        for (const auto& lt : it->second) {
            SectionReader r(lt);
            StateId q = core.resolve(r.take());
            r.expect(",");
            StateId s = core.resolve(r.take());
            r.expect("->");
            StateId q2 = core.resolve(r.take());
            r.expect(",");
            StateId s2 = core.resolve(r.take());
            if (!(q2 == q && s2 == s)) rs.rendezvous[{q, s}] = {q2, s2};
        }
    }
    rs.spec = std::move(core.spec);
    rs.validate();
    return rs;
}

ProtocolSpec load_protocol(const std::string& path) { return parse_protocol(load_text(path)); }
NondetSpec load_nondet(const std::string& path) { return parse_nondet(load_text(path)); }
RendezvousSpec load_rendezvous(const std::string& path) { return parse_rendezvous(load_text(path)); }

void save_text(const std::string& path, std::string_view text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Err::Io, "cannot write '" + path + "'");
    os << text;
}

std::string load_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Err::Io, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace bcp
