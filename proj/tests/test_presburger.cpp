#include <cmath>

#include "bcp/analysis.hpp"
#include "bcp/presburger.hpp"
#include "bcp/simulate.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcp;
using namespace bcp::testing;

namespace {

// every input of total size 1..max_n over the symbols
void for_all_inputs(const std::vector<std::string>& symbols, std::uint64_t max_n,
                    const std::function<void(const InputMap&)>& fn, std::uint64_t min_n = 1) {
    std::vector<std::uint64_t> counts(symbols.size(), 0);
    std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t left) {
        if (i + 1 == counts.size()) {
            counts[i] = left;
            InputMap input;
            for (std::size_t k = 0; k < symbols.size(); ++k)
                if (counts[k]) input[symbols[k]] = counts[k];
            if (!input.empty()) fn(input);
            return;
        }
        for (std::uint64_t c = 0; c <= left; ++c) {
            counts[i] = c;
            rec(i + 1, left - c);
        }
    };
    for (std::uint64_t n = min_n; n <= max_n; ++n) rec(0, n);
}

void check_computes(const ProtocolSpec& spec, const Formula& f, std::uint64_t max_n) {
    ExplicitProtocol view(spec);
    for_all_inputs(formula_symbols(f), max_n, [&](const InputMap& input) {
        bool expected = eval_formula(f, input);
        Verdict v = model_check(view, input, expected, 2000000);
        CAPTURE(print_formula(f));
        CHECK(v.status == Verdict::Correct);
    });
}

} // namespace

TEST_CASE("majority stabilizes to the sign of the margin") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    CHECK(model_check(view, {{"x", 3}, {"y", 2}}, true, 1000000).status == Verdict::Correct);
    CHECK(model_check(view, {{"y", 1}}, false, 1000000).status == Verdict::Correct);
    // ties reject: the inequality is strict
    CHECK(model_check(view, {{"x", 2}, {"y", 2}}, false, 1000000).status == Verdict::Correct);
}

TEST_CASE("majority equals x > y on every small input") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    for_all_inputs({"x", "y"}, 5, [&](const InputMap& input) {
        auto get = [&](const char* s) {
            auto it = input.find(s);
            return it == input.end() ? 0ull : it->second;
        };
        bool expected = get("x") > get("y");
        CHECK(model_check(view, input, expected, 2000000).status == Verdict::Correct);
    });
}

TEST_CASE("inequality protocol: x - y < 0") {
    LinearInequality ineq{{{"x", 1}, {"y", -1}}, 0, {}};
    ProtocolSpec spec = inequality_protocol(ineq);
    ExplicitProtocol view(spec);

    CHECK(model_check(view, {{"x", 1}, {"y", 2}}, true, 1000000).status == Verdict::Correct);

    // single x agent, threshold 1: one alpha step then a stable rejection
    LinearInequality lt1{{{"x", 1}}, 1, {}};
    ProtocolSpec spec1 = inequality_protocol(lt1);
    ExplicitProtocol view1(spec1);
    Configuration c = init_config(view1, {{"x", 1}});
    auto enabled = enabled_nonsilent(view1, c);
    REQUIRE(enabled.size() == 1);
    Configuration after = apply_broadcast(view1, c, enabled[0]);
    CHECK(count_of(spec1, after, "0@1") == 1);
    CHECK(quiescent(view1, after));
    CHECK(consensus_of(view1, after) == Consensus::Zero);
}

TEST_CASE("inequality runs conserve the represented sum") {
    LinearInequality ineq{{{"x", 2}, {"y", -1}}, 3, {}};
    ProtocolSpec spec = inequality_protocol(ineq);
    ExplicitProtocol view(spec);
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        std::uint64_t nx = 1 + rng.below(5), ny = 1 + rng.below(5);
        long long target = 2 * static_cast<long long>(nx) - static_cast<long long>(ny);
        Configuration c = init_config(view, {{"x", nx}, {"y", ny}});
        for (int i = 0; i < 300; ++i) {
            long long sum = 0;
            for (const auto& [q, cnt] : c.entries()) {
                sum += std::stoll(spec.local_of(q)) * static_cast<long long>(cnt);
            }
            sum += std::stoll((*spec.globals)[spec.global_of(c.entries().front().first)]);
            CHECK(sum == target);
            c = sample_step(view, c, rng).second;
        }
    }
}

TEST_CASE("each non-silent inequality step retires one contribution") {
    LinearInequality ineq{{{"x", 1}, {"y", -1}}, 0, {}};
    ProtocolSpec spec = inequality_protocol(ineq);
    ExplicitProtocol view(spec);
    Rng rng(22);
    Configuration c = init_config(view, {{"x", 3}, {"y", 3}});
    std::uint64_t nonsilent = 0;
    auto zeros = [&](const Configuration& conf) {
        std::uint64_t z = 0;
        for (const auto& [q, cnt] : conf.entries())
            if (spec.local_of(q) == "0") z += cnt;
        return z;
    };
    for (int i = 0; i < 400; ++i) {
        std::uint64_t z = zeros(c);
        auto [q, next] = sample_step(view, c, rng);
        if (!view.silent(q)) {
            ++nonsilent;
            CHECK(zeros(next) == z + 1);
        } else {
            CHECK(zeros(next) == z);
        }
        c = std::move(next);
    }
    CHECK(nonsilent <= 6); // at most one per agent
}

TEST_CASE("congruence protocol: parity") {
    LinearCongruence parity{{{"x", 1}}, 1, 2, {}};
    ProtocolSpec spec = modulo_protocol(parity);
    ExplicitProtocol view(spec);
    CHECK(model_check(view, {{"x", 3}}, true, 1000000).status == Verdict::Correct);

    // x == 0 mod 2 rejects a single agent after its forced increment
    LinearCongruence even{{{"x", 1}}, 0, 2, {}};
    ProtocolSpec espec = modulo_protocol(even);
    ExplicitProtocol eview(espec);
    Configuration c = init_config(eview, {{"x", 1}});
    auto enabled = enabled_nonsilent(eview, c);
    REQUIRE(enabled.size() == 1);
    Configuration after = apply_broadcast(eview, c, enabled[0]);
    CHECK(count_of(espec, after, "0@1") == 1);
    CHECK(consensus_of(eview, after) == Consensus::Zero);
}

TEST_CASE("congruence runs conserve the sum modulo l") {
    LinearCongruence cong{{{"x", 3}, {"y", 1}}, 2, 5, {}};
    ProtocolSpec spec = modulo_protocol(cong);
    ExplicitProtocol view(spec);
    Rng rng(23);
    Configuration c = init_config(view, {{"x", 2}, {"y", 3}});
    long long target = (3 * 2 + 1 * 3) % 5;
    for (int i = 0; i < 300; ++i) {
        long long sum = 0;
        for (const auto& [q, cnt] : c.entries())
            sum += std::stoll(spec.local_of(q)) * static_cast<long long>(cnt);
        sum += std::stoll((*spec.globals)[spec.global_of(c.entries().front().first)]);
        CHECK(((sum % 5) + 5) % 5 == target);
        c = sample_step(view, c, rng).second;
    }
}

TEST_CASE("normalization merges, drops and rejects") {
    LinearInequality raw{{{"x", 2}, {"y", 2}, {"z", 0}, {"x", -1}}, 1, {}};
    LinearInequality norm = raw.normalized();
    // x folded to 1, z inert
    CHECK(norm.terms.size() == 2);
    CHECK(norm.inert_symbols == std::vector<std::string>{"z"});
    ProtocolSpec spec = inequality_protocol(norm);
    ExplicitProtocol view(spec);
    // z agents exist but never matter
    bool expected = (1 * 1 + 2 * 1) < 1;
    CHECK(model_check(view, {{"x", 1}, {"y", 1}, {"z", 2}}, expected, 1000000).status ==
          Verdict::Correct);

    CHECK_THROWS_AS(inequality_protocol(raw), Error);               // zero coefficient
    LinearInequality dup{{{"x", 1}, {"y", 1}}, 0, {}};
    CHECK_THROWS_AS(inequality_protocol(dup), Error);               // duplicate coefficients
    CHECK_THROWS_AS(modulo_protocol({{{"x", 1}}, 0, 1, {}}), Error); // modulus too small
}

TEST_CASE("formula parsing, printing and evaluation") {
    FormulaPtr f = parse_formula("(and (< (+ (* 2 x) (* -1 y)) 3) (mod (+ x y) 2 1))");
    REQUIRE(f);
    CHECK(f->kind == Formula::And);
    CHECK(eval_formula(*f, {{"x", 1}, {"y", 0}}) == ((2 < 3) && (1 % 2 == 1)));
    CHECK_FALSE(eval_formula(*f, {{"x", 2}, {"y", 2}}));

    CHECK(eval_formula(*parse_formula("(< (+ x (* -1 y)) 0)"), {{"x", 1}, {"y", 2}}));
    CHECK_FALSE(eval_formula(*parse_formula("(mod x 2 1)"), {{"x", 4}}));

    // integer terms fold into the threshold
    FormulaPtr folded = parse_formula("(< (+ x 3) 5)");
    CHECK(eval_formula(*folded, {{"x", 1}}));
    CHECK_FALSE(eval_formula(*folded, {{"x", 2}}));

    // print-parse round trip preserves meaning
    FormulaPtr g = parse_formula(print_formula(*f));
    for_all_inputs({"x", "y"}, 4, [&](const InputMap& in) {
        CHECK(eval_formula(*f, in) == eval_formula(*g, in));
    });

    CHECK_THROWS_AS(parse_formula("(< x)"), ParseError);
    CHECK_THROWS_AS(parse_formula("(frob x 1)"), ParseError);
    try {
        parse_formula("(and (< x 1)\n  (bogus))");
        FAIL("expected error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("compiled formulas compute their predicate on all small inputs") {
    FormulaPtr not_lt = parse_formula("(not (< x 1))");
    check_computes(compile_formula(*not_lt), *not_lt, 4);

    FormulaPtr disj = parse_formula("(or (< (+ x (* -1 y)) 0) (mod x 2 0))");
    CHECK(eval_formula(*disj, {{"x", 2}, {"y", 1}}));
    check_computes(compile_formula(*disj), *disj, 4);

    FormulaPtr conj = parse_formula("(and (mod x 2 1) (mod y 2 1))");
    {
        ProtocolSpec spec = compile_formula(*conj);
        ExplicitProtocol view(spec);
        CHECK(model_check(view, {{"x", 1}, {"y", 1}}, true, 2000000).status == Verdict::Correct);
        check_computes(spec, *conj, 4);
    }

    // an atom compiles to itself
    FormulaPtr atom = parse_formula("(< (+ x (* -1 y)) 0)");
    ProtocolSpec direct = inequality_protocol(atom->ineq);
    CHECK(compile_formula(*atom) == direct);
}

TEST_CASE("majority runtime stays under the harmonic bound at n=64") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Rng rng(31);
    MeasureOptions opts;
    opts.max_steps = 1000000;
    RunStats stats =
        measure_time(view, {{"x", 33}, {"y", 31}}, 60, Estimator::LastConsensusChange, rng, opts);
    double hn = 0;
    for (int k = 1; k <= 64; ++k) hn += 1.0 / k;
    CHECK(stats.mean_T(64) <= 2 * 64 * hn);
}
