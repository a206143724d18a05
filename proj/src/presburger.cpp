#include "bcp/presburger.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "bcp/combinators.hpp"

namespace bcp {

namespace {

std::vector<std::pair<std::string, long long>> merge_terms(
    const std::vector<std::pair<std::string, long long>>& terms,
    std::vector<std::string>& inert) {
    std::map<std::string, long long> sums;
    for (const auto& [sym, coeff] : terms) sums[sym] += coeff;
    std::vector<std::pair<std::string, long long>> out;
    for (const auto& [sym, coeff] : sums) {
        if (coeff == 0)
            inert.push_back(sym);
        else
            out.emplace_back(sym, coeff);
    }
    return out;
}

} // namespace

LinearInequality LinearInequality::normalized() const {
    LinearInequality out;
    out.threshold = threshold;
    out.inert_symbols = inert_symbols;
    out.terms = merge_terms(terms, out.inert_symbols);
    std::sort(out.inert_symbols.begin(), out.inert_symbols.end());
    out.inert_symbols.erase(std::unique(out.inert_symbols.begin(), out.inert_symbols.end()),
                            out.inert_symbols.end());
    return out;
}

long long LinearInequality::bound() const {
    long long a = std::max<long long>(1, std::llabs(threshold));
    for (const auto& [sym, coeff] : terms) {
        (void)sym;
        a = std::max(a, std::llabs(coeff));
    }
    return a;
}

LinearCongruence LinearCongruence::normalized() const {
    LinearCongruence out;
    out.residue = residue;
    out.modulus = modulus;
    out.inert_symbols = inert_symbols;
    out.terms = merge_terms(terms, out.inert_symbols);
    std::sort(out.inert_symbols.begin(), out.inert_symbols.end());
    out.inert_symbols.erase(std::unique(out.inert_symbols.begin(), out.inert_symbols.end()),
                            out.inert_symbols.end());
    return out;
}

ProtocolSpec majority_protocol() {
    SpecBuilder b;
    auto s = [&](const char* l, const char* g) { return b.state(std::string(l) + "@" + g); };
    StateId x0 = s("x", "0"), x1 = s("x", "1");
    StateId y0 = s("y", "0"), y1 = s("y", "1");
    StateId d0 = s("d", "0"), d1 = s("d", "1");
    b.declare_globals({"0", "1"});
    b.input("x", x0);
    b.input("y", y0);
    b.accept(x1);
    b.accept(y1);
    b.accept(d1);
    b.transition(x0, d1, {{x0, x1}, {y0, y1}, {d0, d1}});
    b.transition(y1, d0, {{x1, x0}, {y1, y0}, {d1, d0}});
    return b.finish();
}

namespace {

// Shared layout for the inequality/congruence compilers: locals are the
// distinct contributions plus 0, globals the counter values.
struct CounterLayout {
    std::vector<long long> locals;  // locals[0] == 0
    std::vector<long long> globals; // counter values in order

    std::string local_label(std::size_t i) const { return std::to_string(locals[i]); }
    std::string global_label(std::size_t g) const { return std::to_string(globals[g]); }
    std::string label(std::size_t i, std::size_t g) const {
        return local_label(i) + "@" + global_label(g);
    }
};

ProtocolSpec build_counter_protocol(
    const std::vector<std::pair<std::string, long long>>& terms,
    const std::vector<std::string>& inert, const CounterLayout& layout,
    const std::function<std::optional<std::size_t>(std::size_t, long long)>& advance,
    const std::function<bool(long long)>& accepts) {
    SpecBuilder b;
    std::size_t nl = layout.locals.size(), ng = layout.globals.size();
    std::vector<std::vector<StateId>> grid(nl, std::vector<StateId>(ng));
    for (std::size_t i = 0; i < nl; ++i)
        for (std::size_t g = 0; g < ng; ++g) grid[i][g] = b.state(layout.label(i, g));
    std::vector<std::string> global_labels;
    for (std::size_t g = 0; g < ng; ++g) global_labels.push_back(layout.global_label(g));
    b.declare_globals(std::move(global_labels));

    for (std::size_t g = 0; g < ng; ++g)
        if (accepts(layout.globals[g]))
            for (std::size_t i = 0; i < nl; ++i) b.accept(grid[i][g]);

    // Spending a contribution advances the counter; every local rides along.
    for (std::size_t i = 1; i < nl; ++i) {
        for (std::size_t g = 0; g < ng; ++g) {
            auto g2 = advance(g, layout.locals[i]);
            if (!g2) continue; // counter guard: stays silent
            std::vector<std::pair<StateId, StateId>> moves;
            for (std::size_t j = 0; j < nl; ++j) moves.emplace_back(grid[j][g], grid[j][*g2]);
            b.transition(grid[i][g], grid[0][*g2], std::move(moves));
        }
    }

    // Zero index for the initial counter value.
    std::size_t g0 = 0;
    for (std::size_t g = 0; g < ng; ++g)
        if (layout.globals[g] == 0) g0 = g;
    for (const auto& [sym, coeff] : terms) {
        std::size_t i = 0;
        for (std::size_t k = 0; k < nl; ++k)
            if (layout.locals[k] == coeff) i = k;
        b.input(sym, grid[i][g0]);
    }
    for (const auto& sym : inert) b.input(sym, grid[0][g0]);
    return b.finish();
}

} // namespace

ProtocolSpec inequality_protocol(const LinearInequality& raw) {
    LinearInequality ineq = raw;
    for (const auto& [sym, coeff] : ineq.terms) {
        (void)sym;
        if (coeff == 0) fail(Err::CoefficientZero, "inequality has a zero coefficient; normalize first");
    }
    long long a = ineq.bound();
    CounterLayout layout;
    layout.locals.push_back(0);
    for (const auto& [sym, coeff] : ineq.terms) {
        (void)sym;
        if (std::find(layout.locals.begin(), layout.locals.end(), coeff) == layout.locals.end())
            layout.locals.push_back(coeff);
    }
    for (long long v = -2 * a; v <= 2 * a; ++v) layout.globals.push_back(v);
    long long c = ineq.threshold;
    return build_counter_protocol(
        ineq.terms, ineq.inert_symbols, layout,
        [&layout, a](std::size_t g, long long add) -> std::optional<std::size_t> {
            long long v = layout.globals[g] + add;
            if (v < -2 * a || v > 2 * a) return std::nullopt;
            return static_cast<std::size_t>(v + 2 * a);
        },
        [c](long long v) { return v < c; });
}

ProtocolSpec modulo_protocol(const LinearCongruence& raw) {
    if (raw.modulus < 2) fail(Err::BadModulus, "modulus must be at least 2");
    LinearCongruence cong = raw;
    for (const auto& [sym, coeff] : cong.terms) {
        (void)sym;
        if (coeff == 0) fail(Err::CoefficientZero, "congruence has a zero coefficient; normalize first");
    }
    long long l = cong.modulus;
    long long target = ((cong.residue % l) + l) % l;
    CounterLayout layout;
    layout.locals.push_back(0);
    for (const auto& [sym, coeff] : cong.terms) {
        (void)sym;
        if (std::find(layout.locals.begin(), layout.locals.end(), coeff) == layout.locals.end())
            layout.locals.push_back(coeff);
    }
    for (long long v = 0; v < l; ++v) layout.globals.push_back(v);
    return build_counter_protocol(
        cong.terms, cong.inert_symbols, layout,
        [&layout, l](std::size_t g, long long add) -> std::optional<std::size_t> {
            long long v = (((layout.globals[g] + add) % l) + l) % l;
            return static_cast<std::size_t>(v);
        },
        [target](long long v) { return v == target; });
}

// ---- formulas ----

FormulaPtr make_ineq(LinearInequality ineq) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Ineq;
    f->ineq = ineq.normalized();
    return f;
}

FormulaPtr make_cong(LinearCongruence cong) {
    if (cong.modulus < 2) fail(Err::BadModulus, "modulus must be at least 2");
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Cong;
    f->cong = cong.normalized();
    return f;
}

FormulaPtr make_not(FormulaPtr inner) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Not;
    f->children.push_back(std::move(inner));
    return f;
}

static FormulaPtr make_nary(Formula::Kind kind, std::vector<FormulaPtr> fs) {
    if (fs.empty()) fail(Err::Validation, "connective needs at least one operand");
    if (fs.size() == 1) return fs[0];
    auto f = std::make_shared<Formula>();
    f->kind = kind;
    f->children = std::move(fs);
    return f;
}

FormulaPtr make_and(std::vector<FormulaPtr> fs) { return make_nary(Formula::And, std::move(fs)); }
FormulaPtr make_or(std::vector<FormulaPtr> fs) { return make_nary(Formula::Or, std::move(fs)); }

namespace {

long long eval_sum(const std::vector<std::pair<std::string, long long>>& terms,
                   const InputMap& input) {
    long long sum = 0;
    for (const auto& [sym, coeff] : terms) {
        auto it = input.find(sym);
        if (it != input.end()) sum += coeff * static_cast<long long>(it->second);
    }
    return sum;
}

} // namespace

bool eval_formula(const Formula& f, const InputMap& input) {
    switch (f.kind) {
        case Formula::Ineq: return eval_sum(f.ineq.terms, input) < f.ineq.threshold;
        case Formula::Cong: {
            long long l = f.cong.modulus;
            long long v = ((eval_sum(f.cong.terms, input) % l) + l) % l;
            return v == ((f.cong.residue % l) + l) % l;
        }
        case Formula::Not: return !eval_formula(*f.children[0], input);
        case Formula::And:
            for (const auto& c : f.children)
                if (!eval_formula(*c, input)) return false;
            return true;
        case Formula::Or:
            for (const auto& c : f.children)
                if (eval_formula(*c, input)) return true;
            return false;
    }
    return false;
}

std::vector<std::string> formula_symbols(const Formula& f) {
    std::vector<std::string> out;
    auto add = [&out](const std::vector<std::pair<std::string, long long>>& terms,
                      const std::vector<std::string>& inert) {
        for (const auto& [sym, c] : terms) {
            (void)c;
            out.push_back(sym);
        }
        for (const auto& sym : inert) out.push_back(sym);
    };
    switch (f.kind) {
        case Formula::Ineq: add(f.ineq.terms, f.ineq.inert_symbols); break;
        case Formula::Cong: add(f.cong.terms, f.cong.inert_symbols); break;
        default:
            for (const auto& c : f.children)
                for (auto& s : formula_symbols(*c)) out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ProtocolSpec compile_formula(const Formula& f) {
    switch (f.kind) {
        case Formula::Ineq: return inequality_protocol(f.ineq.normalized());
        case Formula::Cong: return modulo_protocol(f.cong.normalized());
        case Formula::Not: return complement_output(compile_formula(*f.children[0]));
        case Formula::And:
        case Formula::Or: {
            OutputCombiner op =
                f.kind == Formula::And ? OutputCombiner::And() : OutputCombiner::Or();
            ProtocolSpec acc = compile_formula(*f.children[0]);
            for (std::size_t i = 1; i < f.children.size(); ++i)
                acc = parallel_compose(acc, compile_formula(*f.children[i]), op);
            return acc;
        }
    }
    fail(Err::Validation, "bad formula");
}

// ---- textual formulas ----

namespace {

struct FTok {
    enum Kind { LParen, RParen, Symbol, Int, End } kind;
    std::string text;
    long long value = 0;
    int line, col;
};

struct FLexer {
    std::string_view text;
    std::size_t i = 0;
    int line = 1, col = 1;

    void advance() {
        if (i < text.size() && text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++i;
    }

    FTok next() {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' ||
                                   text[i] == '\r'))
            advance();
        if (i >= text.size()) return {FTok::End, "", 0, line, col};
        int l = line, c = col;
        char ch = text[i];
        if (ch == '(') {
            advance();
            return {FTok::LParen, "(", 0, l, c};
        }
        if (ch == ')') {
            advance();
            return {FTok::RParen, ")", 0, l, c};
        }
        std::string tok;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '(' && text[i] != ')') {
            tok.push_back(text[i]);
            advance();
        }
        bool numeric = !tok.empty() && (std::isdigit(static_cast<unsigned char>(tok[0])) ||
                                        (tok[0] == '-' && tok.size() > 1));
        if (numeric) {
            for (std::size_t k = 1; k < tok.size(); ++k)
                if (!std::isdigit(static_cast<unsigned char>(tok[k]))) numeric = false;
        }
        if (numeric) return {FTok::Int, tok, std::stoll(tok), l, c};
        return {FTok::Symbol, tok, 0, l, c};
    }
};

struct FParser {
    FLexer lex;
    FTok cur;

    explicit FParser(std::string_view text) : lex{text} { cur = lex.next(); }

    [[noreturn]] void err(const std::string& msg) const {
        throw ParseError(msg + (cur.text.empty() ? "" : " near '" + cur.text + "'"), cur.line,
                         cur.col);
    }
    FTok take() {
        FTok t = cur;
        cur = lex.next();
        return t;
    }
    void expect(FTok::Kind kind, const char* what) {
        if (cur.kind != kind) err(std::string("expected ") + what);
        take();
    }

    // returns (terms, constant)
    std::pair<std::vector<std::pair<std::string, long long>>, long long> sum() {
        std::vector<std::pair<std::string, long long>> terms;
        long long constant = 0;
        term(terms, constant);
        return {terms, constant};
    }

    void term(std::vector<std::pair<std::string, long long>>& terms, long long& constant) {
        if (cur.kind == FTok::Symbol) {
            terms.emplace_back(take().text, 1);
            return;
        }
        if (cur.kind == FTok::Int) {
            constant += take().value;
            return;
        }
        if (cur.kind != FTok::LParen) err("expected a term");
        take();
        if (cur.kind != FTok::Symbol) err("expected an operator");
        std::string op = take().text;
        if (op == "+") {
            while (cur.kind != FTok::RParen) term(terms, constant);
            take();
        } else if (op == "*") {
            if (cur.kind != FTok::Int) err("expected an integer coefficient");
            long long coeff = take().value;
            if (cur.kind == FTok::Int) {
                constant += coeff * take().value;
            } else if (cur.kind == FTok::Symbol) {
                terms.emplace_back(take().text, coeff);
            } else {
                err("expected a variable");
            }
            expect(FTok::RParen, "')'");
        } else {
            err("expected '+' or '*'");
        }
    }

    FormulaPtr formula() {
        if (cur.kind != FTok::LParen) err("expected '('");
        take();
        if (cur.kind != FTok::Symbol) err("expected an operator");
        std::string op = take().text;
        if (op == "<") {
            auto [terms, constant] = sum();
            if (cur.kind != FTok::Int) err("expected an integer threshold");
            long long c = take().value;
            expect(FTok::RParen, "')'");
            LinearInequality ineq;
            ineq.terms = std::move(terms);
            ineq.threshold = c - constant;
            return make_ineq(std::move(ineq));
        }
        if (op == "mod") {
            auto [terms, constant] = sum();
            if (cur.kind != FTok::Int) err("expected an integer modulus");
            long long l = take().value;
            if (cur.kind != FTok::Int) err("expected an integer residue");
            long long c = take().value;
            expect(FTok::RParen, "')'");
            if (l < 2) err("modulus must be at least 2");
            LinearCongruence cong;
            cong.terms = std::move(terms);
            cong.modulus = l;
            cong.residue = c - constant;
            return make_cong(std::move(cong));
        }
        if (op == "not") {
            FormulaPtr inner = formula();
            expect(FTok::RParen, "')'");
            return make_not(std::move(inner));
        }
        if (op == "and" || op == "or") {
            std::vector<FormulaPtr> children;
            while (cur.kind != FTok::RParen) children.push_back(formula());
            take();
            if (children.empty()) err("connective needs operands");
            return op == "and" ? make_and(std::move(children)) : make_or(std::move(children));
        }
        err("unknown operator '" + op + "'");
    }
};

void print_terms(std::ostringstream& os,
                 const std::vector<std::pair<std::string, long long>>& terms,
                 const std::vector<std::string>& inert) {
    std::size_t total = terms.size() + inert.size();
    if (total != 1) os << "(+";
    auto one = [&os, total](const std::string& sym, long long coeff) {
        if (total != 1) os << ' ';
        if (coeff == 1)
            os << sym;
        else
            os << "(* " << coeff << ' ' << sym << ')';
    };
    if (total == 0) os << " 0";
    for (const auto& [sym, coeff] : terms) one(sym, coeff);
    for (const auto& sym : inert) one(sym, 0);
    if (total != 1) os << ')';
}

} // namespace

FormulaPtr parse_formula(std::string_view text) {
    FParser p(text);
    FormulaPtr f = p.formula();
    if (p.cur.kind != FTok::End) p.err("trailing content");
    return f;
}

std::string print_formula(const Formula& f) {
    std::ostringstream os;
    switch (f.kind) {
        case Formula::Ineq:
            os << "(< ";
            print_terms(os, f.ineq.terms, f.ineq.inert_symbols);
            os << ' ' << f.ineq.threshold << ')';
            break;
        case Formula::Cong:
            os << "(mod ";
            print_terms(os, f.cong.terms, f.cong.inert_symbols);
            os << ' ' << f.cong.modulus << ' ' << f.cong.residue << ')';
            break;
        case Formula::Not:
            os << "(not " << print_formula(*f.children[0]) << ')';
            break;
        case Formula::And:
        case Formula::Or:
            os << (f.kind == Formula::And ? "(and" : "(or");
            for (const auto& c : f.children) os << ' ' << print_formula(*c);
            os << ')';
            break;
    }
    return os.str();
}

} // namespace bcp
