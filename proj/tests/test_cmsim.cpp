#include <cmath>
#include <set>

#include "bcp/analysis.hpp"
#include "bcp/cmsim.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcp;
using namespace bcp::testing;

namespace {

// exhaustive reachability from phi(cmd, w): collects the reachable final
// configurations and checks closure properties
struct StepReach {
    std::set<std::pair<bool, std::uint64_t>> finals;
    bool failing_reachable = false;
    bool ret_global_neither = false; // a Ret-global configuration that is neither
};

StepReach explore_step(const ProtocolSpec& spec, const Configuration& start,
                       std::size_t budget) {
    ExplicitProtocol view(spec);
    StepReach out;
    ReachGraph g = explore(view, start, budget);
    for (const auto& conf : g.nodes) {
        auto fin = step_final(spec, conf);
        if (fin) out.finals.insert(*fin);
        bool failing = step_failing(spec, conf);
        if (failing) out.failing_reachable = true;
        // every configuration with a completion global must be final/failing
        bool ret_global = true;
        for (const auto& [q, cnt] : conf.entries()) {
            (void)cnt;
            std::string label = spec.states[q];
            auto at = label.rfind('@');
            std::string glob = label.substr(at + 1);
            if (glob != "done0" && glob != "done1") ret_global = false;
        }
        if (ret_global && !fin && !failing) out.ret_global_neither = true;
    }
    return out;
}

} // namespace

TEST_CASE("one-step machine: reachable finals match the arithmetic") {
    ProtocolSpec spec = step_bp();
    const std::uint64_t n = 3;
    struct Case {
        const char* cmd;
        CmCmd op;
    };
    for (const Case c : {Case{"mul2", CmCmd::Mul2}, Case{"inc", CmCmd::Inc},
                         Case{"divmod2", CmCmd::Divmod2}, Case{"iszero", CmCmd::IsZero}}) {
        for (std::uint64_t w = 0; w <= n; ++w) {
            CmStepResult expect = cm_step(c.op, w);
            if (expect.value > n) continue; // target injection undefined
            StepReach r = explore_step(spec, step_config(spec, c.cmd, w, n), 100000);
            CAPTURE(c.cmd);
            CAPTURE(w);
            REQUIRE(r.finals.size() == 1);
            CHECK(r.finals.begin()->first == expect.done1);
            CHECK(r.finals.begin()->second == expect.value);
            CHECK_FALSE(r.failing_reachable);
        }
    }
}

TEST_CASE("one-step machine: worked examples") {
    ProtocolSpec spec = step_bp();
    // doubling two contributions among four agents
    StepReach r = explore_step(spec, step_config(spec, "mul2", 2, 4), 100000);
    REQUIRE(r.finals.size() == 1);
    CHECK(*r.finals.begin() == std::pair<bool, std::uint64_t>{false, 4});

    // an all-zero population answers the zero test immediately
    ExplicitProtocol view(spec);
    Configuration z = step_config(spec, "iszero", 0, 4);
    auto enabled = enabled_nonsilent(view, z);
    REQUIRE(enabled.size() == 1);
    Configuration after = apply_broadcast(view, z, enabled[0]);
    CHECK(step_final(spec, after) == std::pair<bool, std::uint64_t>{false, 0});

    // halving three among four
    StepReach r2 = explore_step(spec, step_config(spec, "divmod2", 3, 4), 100000);
    REQUIRE(r2.finals.size() == 1);
    CHECK(*r2.finals.begin() == std::pair<bool, std::uint64_t>{true, 1});
}

TEST_CASE("one-step machine: final configurations are closed under reachability") {
    ProtocolSpec spec = step_bp();
    ExplicitProtocol view(spec);
    Configuration fin = step_config(spec, "done1", 2, 4);
    for (const auto& [q, cnt] : fin.entries()) {
        (void)cnt;
        CHECK(view.silent(q));
    }
}

TEST_CASE("potential and value bookkeeping along runs") {
    ProtocolSpec spec = step_bp();
    ExplicitProtocol view(spec);
    Rng rng(50);
    const std::uint64_t n = 12;
    auto stars = [&](const Configuration& c) {
        std::uint64_t k = 0;
        for (const auto& [q, cnt] : c.entries())
            if (spec.states[q].rfind("s@", 0) == 0) k += cnt;
        return k;
    };
    auto done1_flag = [&](const Configuration& c) {
        return spec.states[c.entries().front().first].rfind("@done1") != std::string::npos ? 1u
                                                                                           : 0u;
    };
    for (const char* cmd : {"mul2", "divmod2", "inc", "iszero"}) {
        bool zero_test = cmd == std::string("iszero");
        for (int trial = 0; trial < 12; ++trial) {
            std::uint64_t w = rng.below(cmd == std::string("mul2") ? n / 2 + 1 : n + 1);
            Configuration c = step_config(spec, cmd, w, n);
            std::uint64_t before = step_value_x2(spec, c);
            bool alpha_fired = false;
            // conserved along the normalizers: the represented value plus
            // the remainder carried in the completion status (arithmetic
            // commands), or the value plus the parked contributions (zero
            // test)
            std::uint64_t conserved = 0;
            while (!quiescent(view, c)) {
                std::uint64_t phi = step_potential(spec, c);
                CHECK(phi <= 2 * n);
                auto [q, next] = sample_step(view, c, rng);
                if (view.silent(q)) {
                    c = std::move(next);
                    continue;
                }
                std::string glob = spec.states[q].substr(spec.states[q].rfind('@') + 1);
                bool is_alpha = glob == "mul2" || glob == "inc" || glob == "divmod2" ||
                                glob == "iszero";
                std::uint64_t phi2 = step_potential(spec, next);
                auto quantity = [&](const Configuration& conf) {
                    return zero_test ? step_value_x2(spec, conf) + 2 * stars(conf)
                                     : step_value_x2(spec, conf) + done1_flag(conf);
                };
                if (is_alpha) {
                    CHECK_FALSE(alpha_fired);
                    alpha_fired = true;
                    conserved = quantity(next);
                    // the command moved the value by exactly its effect
                    CmStepResult expect = cm_step(*cm_cmd_from_name(cmd), w);
                    std::uint64_t target =
                        zero_test ? before : 2 * expect.value + (expect.done1 ? 1 : 0);
                    CHECK(conserved == target);
                } else {
                    CHECK(phi2 < phi); // normalizers strictly shrink the potential
                    CHECK(quantity(next) == conserved);
                }
                c = std::move(next);
            }
            auto fin = step_final(spec, c);
            REQUIRE(fin);
            CmStepResult expect = cm_step(*cm_cmd_from_name(cmd), w);
            CHECK(fin->second == expect.value);
            CHECK(fin->first == expect.done1);
            if (zero_test) CHECK(step_value_x2(spec, c) == before);
        }
    }
}

TEST_CASE("single-agent clock finishes in two broadcasts") {
    ClockBp ck = clock_bp();
    Rng rng(51);
    ClockRun r = run_clock(ck, 1, rng, 100);
    CHECK_FALSE(r.timeout);
    CHECK_FALSE(r.early_final);
    CHECK(r.time == 2);
}

TEST_CASE("clock time concentrates around n log n") {
    ClockBp ck = clock_bp();
    const std::uint64_t n = 300;
    const int trials = 200;
    Rng rng(52);
    double total = 0;
    for (int t = 0; t < trials; ++t) {
        Rng trial = rng.stream(t);
        ClockRun r = run_clock(ck, n, trial, 10000000);
        REQUIRE_FALSE(r.timeout);
        CHECK_FALSE(r.early_final);
        total += double(r.time);
    }
    double mean = total / trials;
    double nln = double(n) * std::log(double(n));
    CHECK(mean <= 2 * nln + 4);
    CHECK(mean >= 0.25 * nln);
}

TEST_CASE("chained clock runs its phases in sequence") {
    ClockBp ck = chained_clock_bp(1);
    ExplicitProtocol view(ck.spec);
    Rng rng(53);
    const std::uint64_t n = 6;
    StateId init = ck.spec.state_index(ck.initial_label);
    StateId fin = ck.spec.state_index(ck.final_label);
    Configuration c = Configuration::single(init, n);
    std::uint64_t steps = 0, phase_hops = 0;
    std::vector<std::uint64_t> phase_steps;
    std::uint64_t in_phase = 0;
    std::size_t cur_phase = ck.spec.global_of(init);
    while (c.count(fin) != n) {
        REQUIRE(steps < 10000000);
        auto [q, next] = sample_step(view, c, rng);
        (void)q;
        ++steps;
        std::size_t g = ck.spec.global_of(next.entries().front().first);
        if (g != cur_phase) {
            ++phase_hops;
            phase_steps.push_back(in_phase);
            in_phase = 0;
            cur_phase = g;
        } else {
            ++in_phase;
        }
        c = std::move(next);
    }
    phase_steps.push_back(in_phase);
    CHECK(phase_hops == 27);
    std::uint64_t total = phase_hops; // one broadcast per phase change
    for (std::uint64_t s : phase_steps) total += s;
    CHECK(total == steps);
    // no agent may idle in the final state before the last phase
    CHECK(phase_steps.size() == 28);
}

TEST_CASE("chained clock rarely beats the guaranteed floor") {
    ClockBp ck = chained_clock_bp(1);
    const std::uint64_t n = 60;
    const int trials = 60;
    Rng rng(54);
    int too_fast = 0;
    for (int t = 0; t < trials; ++t) {
        Rng trial = rng.stream(t);
        ClockRun r = run_clock(ck, n, trial, 100000000);
        REQUIRE_FALSE(r.timeout);
        CHECK_FALSE(r.early_final);
        if (double(r.time) < double(n) * std::log(double(n))) ++too_fast;
    }
    CHECK(too_fast == 0);
}

TEST_CASE("hardened step: outcomes are final or failing, never wrong") {
    ProtocolSpec spec = hardened_step_bp(1);
    ExplicitProtocol view(spec);
    Rng rng(55);
    const std::uint64_t n = 30;
    int failures = 0;
    const int trials = 60;
    for (int t = 0; t < trials; ++t) {
        std::uint64_t w = 1 + rng.below(n / 2);
        Configuration c = step_config(spec, hardened_cmd_global("inc"), w, n);
        Trace tr = run_from(view, c, rng, StopPolicy::quiescence(), 10000000);
        REQUIRE_FALSE(tr.truncated);
        auto fin = step_final(spec, tr.final);
        if (fin) {
            CHECK(fin->first == false);
            CHECK(fin->second == w + 1);
        } else {
            CHECK(step_failing(spec, tr.final));
            ++failures;
        }
    }
    CHECK(failures <= trials / 10);
}

TEST_CASE("hardened step: exhaustive check at four agents") {
    ProtocolSpec spec = hardened_step_bp(1);
    StepReach r = explore_step(spec, step_config(spec, hardened_cmd_global("inc"), 1, 4),
                               4000000);
    // the only reachable final is the arithmetic answer, failures permitted
    REQUIRE(r.finals.size() == 1);
    CHECK(*r.finals.begin() == std::pair<bool, std::uint64_t>{false, 2});
    CHECK_FALSE(r.ret_global_neither);
}

TEST_CASE("hardened step: failing configurations absorb") {
    ProtocolSpec spec = hardened_step_bp(1);
    ExplicitProtocol view(spec);
    // drop one agent into the failure state mid-episode and explore
    Configuration c = step_config(spec, hardened_cmd_global("inc"), 1, 3);
    StateId bot = spec.state_index("bot@" + hardened_cmd_global("inc"));
    Configuration broken = c;
    broken.add(c.entries().front().first, -1);
    broken.add(bot, 1);
    ReachGraph g = explore(view, broken, 500000);
    for (const auto& conf : g.nodes) {
        CHECK(step_failing(spec, conf));
        CHECK_FALSE(step_final(spec, conf).has_value());
    }
}

TEST_CASE("hardened step terminal time scales like n log n") {
    ProtocolSpec spec = hardened_step_bp(1);
    ExplicitProtocol view(spec);
    Rng rng(56);
    std::vector<double> ratios;
    for (std::uint64_t n : {50ull, 100ull}) {
        double total = 0;
        const int trials = 12;
        for (int t = 0; t < trials; ++t) {
            Configuration c = step_config(spec, hardened_cmd_global("inc"), n / 3, n);
            Trace tr = run_from(view, c, rng, StopPolicy::quiescence(), 100000000);
            REQUIRE_FALSE(tr.truncated);
            total += double(tr.step_count);
        }
        ratios.push_back(total / trials / (double(n) * std::log(double(n))));
    }
    // 28 chained phases at roughly n ln n each, plus slack
    for (double r : ratios) CHECK(r <= 45.0);
    CHECK(ratios[1] <= ratios[0] * 1.3);
}

TEST_CASE("compiled trivial machine stabilizes to acceptance") {
    CmBcp compiled = cm_to_bcp(trivial_accept_cm(), 1);
    Protocol& view = compiled.view();

    // exhaustive: from two agents, acceptance is reached with certainty
    Verdict v = model_check(view, {{"x1", 2}}, true, 500000);
    CHECK(v.status == Verdict::Correct);

    // sampled: the machine halts after its single step
    Rng rng(57);
    Configuration c = compiled.initial({{"x1", 3}});
    std::uint64_t steps = 0;
    while (!compiled.halted(c).has_value()) {
        REQUIRE(steps < 2000000);
        c = sample_step(view, c, rng).second;
        ++steps;
    }
    CHECK(compiled.halted(c) == true);
}

TEST_CASE("compiled power-of-two machine is never wrong") {
    CounterMachine cm = power_of_two_cm();
    for (std::uint64_t x : {2ull, 3ull, 4ull}) {
        CmBcp compiled = cm_to_bcp(cm, 1);
        Protocol& view = compiled.view();
        Rng rng(58 + x);
        int done = 0;
        for (int trial = 0; trial < 6; ++trial) {
            Configuration c = compiled.initial({{"x1", x}});
            std::uint64_t steps = 0;
            std::optional<bool> verdict;
            while (steps < 3000000) {
                auto h = compiled.halted(c);
                if (h) {
                    verdict = h;
                    break;
                }
                c = sample_step(view, c, rng).second;
                ++steps;
            }
            if (verdict) {
                ++done;
                bool expect = (x & (x - 1)) == 0;
                CHECK(*verdict == expect);
            }
        }
        CHECK(done >= 1);
    }
}

TEST_CASE("counter occupancy tracks the machine counters") {
    CmBcp compiled = cm_to_bcp(power_of_two_cm(), 1);
    Protocol& view = compiled.view();
    Rng rng(59);
    Configuration c = compiled.initial({{"x1", 4}});
    CHECK(compiled.counter_value(c, 0) == 4);
    CHECK(compiled.cm_state(c) == std::string("start"));
    // counter occupancy only changes through load/store phases; it never
    // exceeds the population
    for (int i = 0; i < 20000; ++i) {
        c = sample_step(view, c, rng).second;
        CHECK(compiled.counter_value(c, 0) <= 4);
    }
}

TEST_CASE("an injected failure restarts the computation exactly") {
    CmBcp compiled = cm_to_bcp(power_of_two_cm(), 1);
    Protocol& view = compiled.view();
    Rng rng(60);
    const std::uint64_t n = 4;
    Configuration start = compiled.initial({{"x1", n}});
    std::string initial_print = compiled.inner_fingerprint(start);

    Configuration c = start;
    for (int i = 0; i < 400; ++i) c = sample_step(view, c, rng).second;
    c = compiled.inject_failure(c, rng);
    CHECK(compiled.has_failure(c));

    // the reset brings the population back to the initial machine image
    bool restarted = false;
    std::uint64_t waited = 0;
    while (waited < 400 * n) {
        c = sample_step(view, c, rng).second;
        ++waited;
        if (!compiled.has_failure(c) && compiled.inner_fingerprint(c) == initial_print) {
            restarted = true;
            break;
        }
    }
    CHECK(restarted);

    // and the run still finishes with the right answer
    std::optional<bool> verdict;
    std::uint64_t steps = 0;
    while (steps < 3000000) {
        auto h = compiled.halted(c);
        if (h) {
            verdict = h;
            break;
        }
        c = sample_step(view, c, rng).second;
        ++steps;
    }
    REQUIRE(verdict.has_value());
    CHECK(*verdict == true);
}

TEST_CASE("materialized compilation matches the live view on seeded runs") {
    CmBcp compiled = cm_to_bcp(trivial_accept_cm(), 1);
    ProtocolSpec spec = compiled.materialize(300000);
    ExplicitProtocol flat(spec);
    Protocol& live = compiled.view();

    Rng r1(61), r2(61);
    Configuration ca = init_config(live, {{"x1", 2}});
    Configuration cb = init_config(flat, {{"x1", 2}});
    for (int i = 0; i < 4000; ++i) {
        auto [qa, na] = sample_step(live, ca, r1);
        auto [qb, nb] = sample_step(flat, cb, r2);
        CHECK(live.state_label(qa) == spec.states[qb]);
        ca = std::move(na);
        cb = std::move(nb);
    }
}
