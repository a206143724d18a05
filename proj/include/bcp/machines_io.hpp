#pragma once

#include <string>
#include <string_view>

#include "bcp/machines.hpp"

namespace bcp {

// Textual machine descriptions: explicit transition rows, round-trippable.
// Counter machine:
//   cm
//   counters: 2
//   states: 0 1 init a
//   initial: init
//   bounded: n                    (optional)
//   t1:
//   init -> c1 divmod2 a 1
//   t2:  ...                      (omitted: same as t1)
// Stack machine:
//   sm / stacks: / states: / initial: / accept: / reject: / input: s2 s3
//   d1:
//   q -> push s1 0 q2
//   q2 -> pop s1 on0 on1 onE
// Turing machine (single or two tape):
//   rtm / tapes: 1|2 / symbols: _ 0 1 / states: / initial: / accept: /
//   reject: / space: a b          (declared bound a*N+b, optional)
//   d1:
//   q , r -> q2 , w , L|R|S              (single tape)
//   q , r , w -> q2 , w2 , L|R|S , L|R|S (two tapes)
// Rows equal to the stay-in-place default may be omitted.
std::string print_cm(const CounterMachine& cm);
CounterMachine parse_cm(std::string_view text);

std::string print_sm(const StackMachine& sm, const StackInputPlan& plan = {});
StackPipeline parse_sm(std::string_view text);

std::string print_rtm(const Rtm& m);
Rtm parse_rtm(std::string_view text);

CounterMachine load_cm(const std::string& path);
StackPipeline load_sm(const std::string& path);
Rtm load_rtm(const std::string& path);

} // namespace bcp
