#include <cmath>
#include <sstream>

#include "bcp/analysis.hpp"
#include "bcp/presburger.hpp"
#include "bcp/protocol_io.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcp;
using namespace bcp::testing;

TEST_CASE("decide_stable on majority configurations") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    CHECK(decide_stable(view, config_of(maj, {{"d@1", 2}}), 100000));
    CHECK_FALSE(decide_stable(view, config_of(maj, {{"x@0", 1}, {"y@0", 1}}), 100000));
    CHECK_FALSE(decide_stable(view, config_of(maj, {{"x@0", 1}, {"x@1", 1}}), 100000));
}

TEST_CASE("decide_stable agrees with the brute-force definition") {
    std::vector<ProtocolSpec> corpus = {
        majority_protocol(),
        inequality_protocol({{{"x", 1}, {"y", -1}}, 0, {}}),
        modulo_protocol({{{"x", 1}}, 1, 2, {}}),
    };
    Rng rng(11);
    for (const auto& spec : corpus) {
        ExplicitProtocol view(spec);
        // sample reachable configurations of size <= 4 and compare verdicts
        for (int trial = 0; trial < 20; ++trial) {
            InputMap input;
            std::uint64_t n = 1 + rng.below(4);
            std::uint64_t split = rng.below(n + 1);
            if (spec.input_alphabet.size() == 1) {
                input[spec.input_alphabet[0]] = n;
            } else {
                if (split) input[spec.input_alphabet[0]] = split;
                if (n - split) input[spec.input_alphabet[1]] = n - split;
            }
            if (input.empty()) continue;
            Configuration c = init_config(view, input);
            for (int hop = 0; hop < 6; ++hop) {
                CHECK(decide_stable(view, c, 100000) == brute_stable(view, c));
                c = sample_step(view, c, rng).second;
            }
        }
    }
}

TEST_CASE("model_check validates majority and catches mutations") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Verdict v = model_check(view, {{"x", 2}, {"y", 1}}, true, 1000000);
    CHECK(v.status == Verdict::Correct);
    CHECK(v.explored > 0);

    // single agent, trivially stable by accepting-set membership
    SpecBuilder b;
    StateId a = b.state("a");
    b.input("x", a);
    ProtocolSpec one = b.finish();
    ExplicitProtocol oview(one);
    CHECK(model_check(oview, {{"x", 1}}, false, 1000).status == Verdict::Correct);

    // break the majority protocol: remove the beta transition
    ProtocolSpec broken = majority_protocol();
    StateId y1 = broken.state_index("y@1");
    broken.transitions[y1] = {y1, {}};
    ExplicitProtocol bview(broken);
    Verdict bad = model_check(bview, {{"x", 1}, {"y", 2}}, false, 1000000);
    CHECK(bad.status == Verdict::Counterexample);
    REQUIRE(bad.witness.has_value());
    // the witness replays to a stable wrong consensus
    Configuration c = bad.witness->initial;
    for (StateId q : bad.witness->chosen) c = apply_broadcast(bview, c, q);
    CHECK(consensus_of(bview, c) == Consensus::One);
    CHECK(decide_stable(bview, c, 100000));
}

TEST_CASE("model_check reports exhausted budgets") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Verdict v = model_check(view, {{"x", 3}, {"y", 3}}, false, 3);
    CHECK(v.status == Verdict::BoundExceeded);
}

TEST_CASE("measure_time with the three estimators") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Rng rng(12);
    MeasureOptions opts;
    opts.max_steps = 200000;

    RunStats q = measure_time(view, {{"x", 6}, {"y", 4}}, 40, Estimator::QuiescenceT, rng, opts);
    CHECK(q.defined_T(10) == 40);
    CHECK(q.timeouts(10) == 0);

    Rng rng2(12);
    RunStats e = measure_time(view, {{"x", 6}, {"y", 4}}, 40, Estimator::ExactStable, rng2, opts);
    CHECK(e.defined_T(10) == 40);

    Rng rng3(12);
    RunStats l = measure_time(view, {{"x", 6}, {"y", 4}}, 40, Estimator::LastConsensusChange,
                              rng3, opts);
    CHECK(l.defined_T(10) == 40);

    // same seeds, same trials: stability is reached no later than quiescence
    for (std::uint32_t t = 0; t < 40; ++t) {
        REQUIRE(e.rows[t].T.has_value());
        REQUIRE(q.rows[t].T.has_value());
        CHECK(*e.rows[t].T <= *q.rows[t].T);
        CHECK(e.rows[t].seed == q.rows[t].seed);
    }

    // single-agent silent protocol: T = 0 everywhere
    SpecBuilder b;
    StateId a = b.state("a");
    b.input("x", a);
    ProtocolSpec silent = b.finish();
    ExplicitProtocol sview(silent);
    Rng rng4(1);
    RunStats s = measure_time(sview, {{"x", 1}}, 5, Estimator::QuiescenceT, rng4, opts);
    for (const auto& row : s.rows) CHECK(row.T == 0);
}

TEST_CASE("concurrent and sequential measurement agree") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    MeasureOptions par;
    par.threads = 4;
    MeasureOptions seq;
    seq.threads = 1;
    Rng r1(77), r2(77);
    RunStats a = measure_time(view, {{"x", 5}, {"y", 3}}, 24, Estimator::QuiescenceT, r1, par);
    RunStats b = measure_time(view, {{"x", 5}, {"y", 3}}, 24, Estimator::QuiescenceT, r2, seq);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].seed == b.rows[i].seed);
        CHECK(a.rows[i].steps == b.rows[i].steps);
        CHECK(a.rows[i].T == b.rows[i].T);
    }
}

TEST_CASE("csv export carries the schema and reproduces bytewise") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Rng r1(5), r2(5);
    MeasureOptions opts;
    RunStats a = measure_time(view, {{"x", 3}, {"y", 2}}, 6, Estimator::QuiescenceT, r1, opts);
    RunStats b = measure_time(view, {{"x", 3}, {"y", 2}}, 6, Estimator::QuiescenceT, r2, opts);
    std::ostringstream osa, osb;
    write_stats_csv(osa, a, {{"protocol", "majority"}});
    write_stats_csv(osb, b, {{"protocol", "majority"}});
    CHECK(osa.str() == osb.str());
    CHECK(osa.str().find("n,trial,seed,steps,T,estimator,truncated\n") != std::string::npos);
}

TEST_CASE("fit_nlogn recovers exact coefficients and flags mismatches") {
    std::vector<std::pair<double, double>> exact;
    for (double n : {10.0, 100.0, 1000.0}) exact.push_back({n, 3 * n * std::log(n)});
    FitResult f = fit_nlogn(exact);
    CHECK(f.a == doctest::Approx(3.0));
    CHECK(f.rms == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_FALSE(f.poor_fit);
    CHECK(f.ratios_nonincreasing);

    std::vector<std::pair<double, double>> quad;
    for (double n : {10.0, 100.0, 1000.0}) quad.push_back({n, n * n});
    FitResult g = fit_nlogn(quad);
    CHECK(g.poor_fit);
    CHECK_FALSE(g.ratios_nonincreasing);

    CHECK_THROWS_AS(fit_nlogn(std::vector<std::pair<double, double>>{{10, 1}, {20, 2}}), Error);
}

TEST_CASE("geometric tail bounds") {
    std::vector<double> ps = {0.5, 0.25};
    CHECK(geom_tail_upper(ps, 1.0) == doctest::Approx(1.0));
    CHECK(geom_tail_lower(ps, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(geom_tail_upper(ps, 0.5), Error);
    CHECK_THROWS_AS(geom_tail_lower(ps, 1.5), Error);
    CHECK_THROWS_AS(geom_tail_upper(std::vector<double>{0.0}, 2.0), Error);

    // harmonic probability list: bound equals exp(-k H_n) when the exponent
    // equation holds
    const int n = 50;
    std::vector<double> harmonic;
    double hn = 0;
    for (int i = 1; i <= n; ++i) {
        harmonic.push_back(double(i) / n);
        hn += 1.0 / i;
    }
    double k = 1.0;
    double lambda = harmonic_tail_threshold(n, k) / 2; // solves l-1-ln l = k
    double bound = geom_tail_upper(harmonic, lambda);
    CHECK(bound == doctest::Approx(std::exp(-k * hn)).epsilon(1e-6));

    // lower-tail shape used by the clock analysis: lambda = 1/7 with
    // p* = 1/n and mu >= n/2 ln n gives at most n^{-1/2}
    double expo = (1.0 / 7 - 1 - std::log(1.0 / 7));
    CHECK(expo >= 1.0);
    std::vector<double> ps2;
    for (int i = 1; i <= n; ++i) ps2.push_back(double(i) / n);
    double mu = 0;
    for (double p : ps2) mu += 1 / p;
    if (mu >= n / 2.0 * std::log(n)) {
        double lower = geom_tail_lower(ps2, 1.0 / 7);
        CHECK(lower <= std::pow(n, -0.5));
    }
}

TEST_CASE("harmonic tail thresholds") {
    double k = 1 - std::log(2.0); // lambda = 2 solves the equation
    CHECK(harmonic_tail_threshold(100, k) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(harmonic_tail_threshold(100, 1.0) < harmonic_tail_threshold(100, 2.0));
    CHECK(harmonic_tail_threshold(100, 2.0) < harmonic_tail_threshold(100, 4.0));
    CHECK_THROWS_AS(harmonic_tail_threshold(2, 1.0), Error);
}

TEST_CASE("monte-carlo geometric sums respect both bounds") {
    const int n = 100;
    const int samples = 10000;
    std::vector<double> ps;
    double mu = 0;
    for (int i = 1; i <= n; ++i) {
        ps.push_back(double(i) / n);
        mu += double(n) / i;
    }
    Rng rng(123);
    auto sample_sum = [&]() {
        double total = 0;
        for (double p : ps) {
            // geometric: trials until success
            std::uint64_t t = 1;
            while (rng.uniform() >= p) ++t;
            total += double(t);
        }
        return total;
    };
    std::vector<double> sums(samples);
    for (auto& s : sums) s = sample_sum();
    for (double lambda : {1.2, 1.5, 2.0}) {
        double freq = 0;
        for (double s : sums)
            if (s >= lambda * mu) ++freq;
        freq /= samples;
        double bound = geom_tail_upper(ps, lambda);
        double sigma = std::sqrt(bound * (1 - bound) / samples);
        CHECK(freq <= bound + 3 * sigma + 1e-12);
    }
    for (double lambda : {0.5, 0.7, 0.9}) {
        double freq = 0;
        for (double s : sums)
            if (s <= lambda * mu) ++freq;
        freq /= samples;
        double bound = geom_tail_lower(ps, lambda);
        double sigma = std::sqrt(bound * (1 - bound) / samples);
        CHECK(freq <= bound + 3 * sigma + 1e-12);
    }
}
