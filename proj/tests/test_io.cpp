#include "bcp/cmsim.hpp"
#include "bcp/combinators.hpp"
#include "bcp/machines_io.hpp"
#include "bcp/presburger.hpp"
#include "bcp/protocol_io.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bcp;

TEST_CASE("protocol files round-trip losslessly") {
    for (const ProtocolSpec& spec :
         {majority_protocol(), inequality_protocol({{{"x", 2}, {"y", -1}}, 3, {}}),
          modulo_protocol({{{"x", 1}, {"y", 3}}, 1, 2, {}}), step_bp(), clock_bp().spec,
          chained_clock_bp(1).spec}) {
        std::string text = print_protocol(spec);
        ProtocolSpec back = parse_protocol(text);
        CHECK(back == spec);
        CHECK(print_protocol(back) == text);
    }
}

TEST_CASE("a hand-written file parses to the expected protocol") {
    const char* text = R"(
# a tiny two-state toggle
states: a b
inputs: x -> a
accepting: b
transitions:
a -> b ; a -> b
)";
    ProtocolSpec spec = parse_protocol(text);
    CHECK(spec.states.size() == 2);
    CHECK(spec.input_alphabet == std::vector<std::string>{"x"});
    CHECK(spec.accepting[spec.state_index("b")]);
    CHECK(spec.transition_silent(spec.state_index("b"))); // omitted: silent default
    CHECK_FALSE(spec.transition_silent(spec.state_index("a")));
}

TEST_CASE("parse errors carry positions") {
    try {
        parse_protocol("states: a b\ntransitions:\na -> undeclared\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.col > 1);
    }
    CHECK_THROWS_AS(parse_protocol("transitions:\n"), ParseError);
    CHECK_THROWS_AS(parse_protocol("states: a a\n"), ParseError);
}

TEST_CASE("nondet and rendezvous files round-trip") {
    // simple two-choice protocol
    SpecBuilder b;
    StateId a = b.state("a");
    StateId c = b.state("c");
    b.input("x", a);
    b.transition(a, c, {});
    NondetSpec nd;
    nd.spec = b.finish();
    nd.delta1.resize(nd.spec.states.size());
    for (StateId q = 0; q < nd.spec.states.size(); ++q) nd.delta1[q] = {q, {}};
    nd.delta1[a] = {a, Response{{{c, a}}}};
    nd.validate();
    NondetSpec nd2 = parse_nondet(print_nondet(nd));
    CHECK(nd2.spec == nd.spec);
    CHECK(nd2.delta1 == nd.delta1);

    RendezvousSpec rs;
    {
        SpecBuilder rb;
        StateId x = rb.state("x");
        StateId y = rb.state("y");
        StateId o = rb.state("o");
        (void)o;
        rb.input("x", x);
        rb.input("y", y);
        rs.spec = rb.finish();
        rs.rendezvous[{x, y}] = {rb.find("o").value(), rb.find("o").value()};
    }
    rs.validate();
    RendezvousSpec rs2 = parse_rendezvous(print_rendezvous(rs));
    CHECK(rs2.spec == rs.spec);
    CHECK(rs2.rendezvous == rs.rendezvous);
}

TEST_CASE("machine descriptions round-trip") {
    CounterMachine cm = power_of_two_cm();
    CounterMachine cm2 = parse_cm(print_cm(cm));
    CHECK(cm2.state_names == cm.state_names);
    CHECK(cm2.counters == cm.counters);
    CHECK(cm2.n_bounded == cm.n_bounded);
    CHECK(print_cm(cm2) == print_cm(cm));

    Rtm parity = parity_rtm();
    Rtm parity2 = parse_rtm(print_rtm(parity));
    CHECK(parity2.state_names == parity.state_names);
    CHECK(parity2.symbols == parity.symbols);
    CHECK(print_rtm(parity2) == print_rtm(parity));

    StackPipeline sp = tm_to_two_stack(unary_to_binary_tm(parity));
    std::string text = print_sm(sp.sm, sp.plan);
    StackPipeline sp2 = parse_sm(text);
    CHECK(sp2.sm.state_names == sp.sm.state_names);
    CHECK(sp2.plan.input_stacks == sp.plan.input_stacks);
    CHECK(print_sm(sp2.sm, sp2.plan) == text);
}

TEST_CASE("compiled machine protocols round-trip through the file format") {
    CmBcp compiled = cm_to_bcp(trivial_accept_cm(), 1);
    ProtocolSpec spec = compiled.materialize(300000);
    std::string text = print_protocol(spec);
    ProtocolSpec back = parse_protocol(text);
    CHECK(back == spec);
    CHECK(print_protocol(back) == text);
}
