#include <map>

#include "bcp/analysis.hpp"
#include "bcp/presburger.hpp"
#include "bcp/protocol.hpp"
#include "bcp/simulate.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcp;
using namespace bcp::testing;

namespace {

// the running example of the step relation: a |> b, {a->c, b->d}
ProtocolSpec abc_protocol() {
    SpecBuilder b;
    StateId a = b.state("a"), bb = b.state("b"), c = b.state("c"), d = b.state("d");
    (void)c;
    (void)d;
    b.transition(a, bb, {{a, b.state("c")}, {bb, b.state("d")}});
    return b.finish();
}

ProtocolSpec all_silent_protocol() {
    SpecBuilder b;
    StateId a = b.state("a");
    b.state("b");
    b.input("x", a);
    return b.finish();
}

} // namespace

TEST_CASE("init_config maps inputs through the input mapping") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Configuration c = init_config(view, {{"x", 3}, {"y", 2}});
    CHECK(c.size() == 5);
    CHECK(count_of(maj, c, "x@0") == 3);
    CHECK(count_of(maj, c, "y@0") == 2);

    Configuration single = init_config(view, {{"x", 1}});
    CHECK(single.size() == 1);

    ProtocolSpec ineq = inequality_protocol({{{"x", 1}, {"y", -1}}, 0, {}});
    ExplicitProtocol iview(ineq);
    Configuration ic = init_config(iview, {{"x", 2}, {"y", 2}});
    CHECK(ic.size() == 4);
    CHECK(count_of(ineq, ic, "1@0") == 2);
    CHECK(count_of(ineq, ic, "-1@0") == 2);

    CHECK_THROWS_AS(init_config(view, {{"z", 1}}), Error);
    CHECK_THROWS_AS(init_config(view, {{"x", 0}}), Error);
}

TEST_CASE("apply_broadcast follows the three-phase step") {
    ProtocolSpec spec = abc_protocol();
    ExplicitProtocol view(spec);
    Configuration c = config_of(spec, {{"a", 2}, {"b", 1}});
    Configuration next = apply_broadcast(view, c, spec.state_index("a"));
    CHECK(next.size() == 3);
    CHECK(count_of(spec, next, "b") == 1);
    CHECK(count_of(spec, next, "c") == 1);
    CHECK(count_of(spec, next, "d") == 1);

    // silent transitions keep the configuration
    Configuration c2 = config_of(spec, {{"c", 2}, {"d", 1}});
    CHECK(apply_broadcast(view, c2, spec.state_index("c")) == c2);

    // absent broadcaster
    CHECK_THROWS_AS(apply_broadcast(view, c2, spec.state_index("a")), Error);

    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol mview(maj);
    Configuration m0 = init_config(mview, {{"x", 3}, {"y", 2}});
    Configuration m1 = apply_broadcast(mview, m0, maj.state_index("x@0"));
    CHECK(count_of(maj, m1, "d@1") == 1);
    CHECK(count_of(maj, m1, "x@1") == 2);
    CHECK(count_of(maj, m1, "y@1") == 2);
}

TEST_CASE("sample_step follows the occupancy distribution") {
    ProtocolSpec spec = abc_protocol();
    ExplicitProtocol view(spec);

    Configuration lone = config_of(spec, {{"a", 1}});
    Rng rng(1);
    for (int i = 0; i < 32; ++i) CHECK(sample_step(view, lone, rng).first == spec.state_index("a"));

    Configuration c = config_of(spec, {{"a", 2}, {"b", 1}});
    const std::uint64_t trials = 100000;
    std::uint64_t picked_a = 0;
    Rng rng2(2);
    for (std::uint64_t i = 0; i < trials; ++i)
        if (sample_step(view, c, rng2).first == spec.state_index("a")) ++picked_a;
    CHECK(within_3sigma(double(picked_a) / trials, 2.0 / 3.0, trials));

    // both majority branches from <x0,y0> occur with chance one half
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol mview(maj);
    Configuration m = config_of(maj, {{"x@0", 1}, {"y@0", 1}});
    std::uint64_t x_first = 0;
    Rng rng3(3);
    for (std::uint64_t i = 0; i < trials; ++i)
        if (sample_step(mview, m, rng3).first == maj.state_index("x@0")) ++x_first;
    CHECK(within_3sigma(double(x_first) / trials, 0.5, trials));
}

TEST_CASE("scheduler frequencies pass a chi-square check") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Configuration c = config_of(maj, {{"x@0", 3}, {"y@0", 2}, {"d@0", 1}});
    const std::uint64_t trials = 100000;
    std::map<StateId, std::uint64_t> hits;
    Rng rng(4);
    for (std::uint64_t i = 0; i < trials; ++i) ++hits[sample_step(view, c, rng).first];
    double chi2 = 0;
    for (const auto& [q, cnt] : c.entries()) {
        double expected = double(cnt) / double(c.size()) * double(trials);
        double diff = double(hits[q]) - expected;
        chi2 += diff * diff / expected;
    }
    CHECK(chi2 < chi2_crit_999(int(c.support_size()) - 1));
}

TEST_CASE("run_execution on the majority protocol") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Rng rng(5);
    Trace tr = run_execution(view, {{"x", 3}, {"y", 2}}, rng, StopPolicy::quiescence(), 100000);
    CHECK_FALSE(tr.truncated);
    CHECK(consensus_of(view, tr.final) == Consensus::One);

    Rng rng2(6);
    Trace tr2 = run_execution(view, {{"y", 1}}, rng2, StopPolicy::quiescence(), 100000);
    CHECK(tr2.step_count == 0); // already quiescent, rejecting
    CHECK(consensus_of(view, tr2.final) == Consensus::Zero);
}

TEST_CASE("run_execution with the exact stability stop") {
    ProtocolSpec ineq = inequality_protocol({{{"x", 1}, {"y", -1}}, 0, {}});
    ExplicitProtocol view(ineq);
    Rng rng(7);
    Trace tr = run_execution(view, {{"x", 1}, {"y", 2}}, rng, StopPolicy::exact_stable(), 100000);
    CHECK_FALSE(tr.truncated);
    CHECK(consensus_of(view, tr.final) == Consensus::One);
    CHECK(decide_stable(view, tr.final, 100000));
}

TEST_CASE("consensus classification") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    CHECK(consensus_of(view, config_of(maj, {{"d@1", 2}})) == Consensus::One);
    CHECK(consensus_of(view, config_of(maj, {{"x@0", 1}, {"x@1", 1}})) == Consensus::Mixed);
    CHECK(consensus_of(view, config_of(maj, {{"x@0", 1}, {"y@0", 1}, {"d@0", 1}})) ==
          Consensus::Zero);
}

TEST_CASE("enabled_nonsilent lists occupied non-silent states") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    CHECK(enabled_nonsilent(view, config_of(maj, {{"d@1", 1}, {"x@1", 1}})).empty());
    auto enabled = enabled_nonsilent(view, config_of(maj, {{"x@0", 1}, {"y@0", 1}}));
    REQUIRE(enabled.size() == 1);
    CHECK(enabled[0] == maj.state_index("x@0"));

    ProtocolSpec silent = all_silent_protocol();
    ExplicitProtocol sview(silent);
    CHECK(enabled_nonsilent(sview, config_of(silent, {{"a", 3}, {"b", 1}})).empty());
}

TEST_CASE("agent count is conserved along sampled runs") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Rng rng(8);
    Configuration c = init_config(view, {{"x", 6}, {"y", 5}});
    for (int i = 0; i < 2000; ++i) {
        auto [q, next] = sample_step(view, c, rng);
        (void)q;
        CHECK(next.size() == c.size());
        c = std::move(next);
    }
}

TEST_CASE("global-state coherence is preserved along runs") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    Rng rng(9);
    Configuration c = init_config(view, {{"x", 4}, {"y", 4}});
    for (int i = 0; i < 1000; ++i) {
        std::size_t g = maj.global_of(c.entries().front().first);
        for (const auto& [q, cnt] : c.entries()) {
            (void)cnt;
            CHECK(maj.global_of(q) == g);
        }
        c = sample_step(view, c, rng).second;
    }
}

TEST_CASE("identical seeds give identical traces") {
    ProtocolSpec maj = majority_protocol();
    ExplicitProtocol view(maj);
    RunOptions opts;
    opts.retain_steps = true;
    Rng r1(42), r2(42);
    Trace t1 = run_execution(view, {{"x", 5}, {"y", 4}}, r1, StopPolicy::quiescence(), 100000, opts);
    Trace t2 = run_execution(view, {{"x", 5}, {"y", 4}}, r2, StopPolicy::quiescence(), 100000, opts);
    REQUIRE(t1.steps.size() == t2.steps.size());
    for (std::size_t i = 0; i < t1.steps.size(); ++i) {
        CHECK(t1.steps[i].chosen == t2.steps[i].chosen);
        CHECK(t1.steps[i].config == t2.steps[i].config);
    }
}

TEST_CASE("configuration equality and hashing are content based") {
    Configuration a, b;
    a.add(3, 2);
    a.add(7, 1);
    b.add(7, 1);
    b.add(3, 1);
    b.add(3, 1);
    CHECK(a == b);
    CHECK(a.hash() == b.hash());
    b.add(3, -1);
    CHECK(a != b);
}
