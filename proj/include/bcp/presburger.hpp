#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bcp/protocol.hpp"
#include "bcp/simulate.hpp"

namespace bcp {

// sum_i coeff_i * x_i < threshold
struct LinearInequality {
    std::vector<std::pair<std::string, long long>> terms; // symbol -> coefficient
    long long threshold = 0;
    std::vector<std::string> inert_symbols; // zero-coefficient symbols after normalization

    // Merges duplicate symbols, moves zero coefficients to inert_symbols.
    LinearInequality normalized() const;
    // max(|coeff|..., |threshold|, 1)
    long long bound() const;
};

// sum_i coeff_i * x_i = residue  (mod modulus)
struct LinearCongruence {
    std::vector<std::pair<std::string, long long>> terms;
    long long residue = 0;
    long long modulus = 0;
    std::vector<std::string> inert_symbols;

    LinearCongruence normalized() const;
};

struct Formula {
    enum Kind { Ineq, Cong, Not, And, Or } kind = Ineq;
    LinearInequality ineq;
    LinearCongruence cong;
    std::vector<std::shared_ptr<const Formula>> children;
};
using FormulaPtr = std::shared_ptr<const Formula>;

FormulaPtr make_ineq(LinearInequality ineq);
FormulaPtr make_cong(LinearCongruence cong);
FormulaPtr make_not(FormulaPtr f);
FormulaPtr make_and(std::vector<FormulaPtr> fs);
FormulaPtr make_or(std::vector<FormulaPtr> fs);

// Textual grammar, anchored on the conventional prefix form:
//   formula := atom | (not f) | (and f f ...) | (or f f ...)
//   atom    := (< sum int) | (mod sum modulus residue)
//   sum     := term | (+ term term ...)
//   term    := var | int | (* int var)
// Integer terms fold into the threshold/residue.
FormulaPtr parse_formula(std::string_view text); // throws ParseError with positions
std::string print_formula(const Formula& f);
std::vector<std::string> formula_symbols(const Formula& f);

bool eval_formula(const Formula& f, const InputMap& input);

// x > y over symbols {x,y}; stabilizes within O(n log n) broadcasts.
ProtocolSpec majority_protocol();

// Agents hold their contribution, a global counter in [-2A, 2A] accumulates.
ProtocolSpec inequality_protocol(const LinearInequality& ineq);

// Same layout with arithmetic mod `modulus`.
ProtocolSpec modulo_protocol(const LinearCongruence& cong);

// Parallel composition of the atom protocols; boolean structure lives in the
// accepting-set combiner, negation complements it.
ProtocolSpec compile_formula(const Formula& f);

} // namespace bcp
