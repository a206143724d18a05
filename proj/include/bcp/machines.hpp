#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/rng.hpp"

namespace bcp {

enum class Outcome { Accept, Reject, Timeout };

// ---- multiplicative counter machines ----

enum class CmCmd { Mul2, Inc, Divmod2, IsZero };
const char* cm_cmd_name(CmCmd cmd);
std::optional<CmCmd> cm_cmd_from_name(std::string_view name);

struct CmTransition {
    std::uint32_t counter = 0; // 0-based
    CmCmd cmd = CmCmd::IsZero;
    std::uint32_t succ0 = 0;
    std::uint32_t succ1 = 0; // unused for Mul2/Inc
};

struct CounterMachine {
    std::uint32_t counters = 1;
    std::vector<std::string> state_names;
    std::uint32_t init_state = 0;
    std::uint32_t state0 = 0; // rejecting halt, named "0"
    std::uint32_t state1 = 0; // accepting halt, named "1"
    std::vector<CmTransition> t1, t2; // indexed by state
    bool n_bounded = false;           // counters never exceed the input size

    void validate() const;
};

struct CmStepResult {
    bool done1 = false; // completion status
    std::uint64_t value = 0;
};

// step(cmd, x); total on nonnegative values.
CmStepResult cm_step(CmCmd cmd, std::uint64_t x);

struct CmRunResult {
    Outcome outcome = Outcome::Timeout;
    std::uint64_t steps = 0;
    std::uint64_t max_counter = 0;
    std::vector<std::uint64_t> final_counters;
};

CmRunResult run_cm(const CounterMachine& cm, std::span<const std::uint64_t> input, Rng& rng,
                   std::uint64_t max_steps);

// ---- randomised stack machines ----

struct SmOp {
    bool is_push = true;
    std::uint32_t stack = 0;
    // push
    std::uint8_t bit = 0;
    std::uint32_t succ = 0;
    // pop
    std::uint32_t on0 = 0, on1 = 0, on_empty = 0;
};

struct StackMachine {
    std::uint32_t stacks = 1;
    std::vector<std::string> state_names;
    std::uint32_t init_state = 0;
    std::uint32_t accept_state = 0;
    std::uint32_t reject_state = 0;
    std::vector<SmOp> d1, d2;

    void validate() const;
};

struct SmRunResult {
    Outcome outcome = Outcome::Timeout;
    std::uint64_t steps = 0;
    std::vector<std::size_t> max_depths; // per stack, in symbols
    std::vector<std::string> final_stacks;
};

// Stacks are binary strings with index 0 on top.
SmRunResult run_stack_machine(const StackMachine& sm, std::vector<std::string> stacks, Rng& rng,
                              std::uint64_t max_steps);

// ---- randomised Turing machines ----

using Sym = std::uint8_t; // index into Rtm::symbols; 0 is the blank

struct Rtm {
    bool two_tape = false; // read-only input tape + work tape
    std::vector<std::string> symbols; // symbols[0] == "_"
    std::vector<std::string> state_names;
    std::uint32_t q0 = 0, q_accept = 0, q_reject = 0;

    struct Move1 {
        std::uint32_t succ = 0;
        Sym write = 0;
        std::int8_t move = 0;
    };
    struct Move2 {
        std::uint32_t succ = 0;
        Sym work_write = 0;
        std::int8_t read_move = 0, work_move = 0;
    };
    // single tape: index (state * nsym + sym)
    std::vector<Move1> d1, d2;
    // two tapes: index ((state * nsym + read) * nsym + work)
    std::vector<Move2> d1w, d2w;

    // declared tape usage bound: cells <= space_linear * N + space_const,
    // where N is the input length (filled in by generators)
    std::uint64_t space_linear = 0, space_const = 0;

    std::size_t nsym() const { return symbols.size(); }
    void validate() const;
};

enum class TapeEncoding { Unary, Binary };

struct RtmRunResult {
    Outcome outcome = Outcome::Timeout;
    std::uint64_t steps = 0;
    std::int64_t min_cell = 0, max_cell = 0; // visited tape extent (single / work tape)
};

// Input layout on the (read) tape: cells 1..n hold _ v1 _ v2 _ ... _ vk _
// with each value written as 1^x (unary) or msb-first binary.
RtmRunResult rtm_run(const Rtm& m, std::span<const std::uint64_t> input, TapeEncoding enc,
                     Rng& rng, std::uint64_t max_steps);

std::vector<Sym> encode_tape(const Rtm& m, std::span<const std::uint64_t> input, TapeEncoding enc);

// ---- input encodings for stack machines ----

// f(0)=01, f(1)=10, f(_)=11 over the binary-encoded tape, top-first.
std::string two_symbol_encode(std::span<const std::uint64_t> input);
// Round-robin distribution of the two-symbol string over `groups` stacks.
std::vector<std::string> multi_stack_encode(std::span<const std::uint64_t> input,
                                            std::size_t groups);

// Which stacks of a machine receive the round-robin encoded input.
struct StackInputPlan {
    std::vector<std::uint32_t> input_stacks;
};

struct StackPipeline {
    StackMachine sm;
    StackInputPlan plan;
};

std::vector<std::string> initial_stacks(const StackMachine& sm, const StackInputPlan& plan,
                                        std::span<const std::uint64_t> input);

// ---- reduction passes ----

struct UnaryToBinaryOptions {
    // work tape cells made available to the simulated machine; 0 picks
    // max(4, input-length) automatically
    std::uint32_t work_cells = 0;
};

// Two-tape log-space machine with unary input -> single-tape {_,0,1} machine
// with binary input. Head movement on the input tape is tracked in a binary
// position counter kept on the tape.
Rtm unary_to_binary_tm(const Rtm& m, const UnaryToBinaryOptions& opts = {});

// Single-tape machine -> 2-stack machine holding the tape halves; the input
// arrives two-symbol encoded on the right stack.
StackPipeline tm_to_two_stack(const Rtm& m);

// Round-robin split: every stack becomes `c` stacks bounded by 1/c of the
// original depth; the input group may use its own width (3 in the classic
// layout).
StackPipeline bound_stacks(const StackPipeline& p, std::uint32_t c, std::uint32_t input_aux);

// Both of the above: two-symbol tape encoding, halves as stacks, then the
// split producing c(l-1)+input_aux stacks.
StackPipeline tm_to_stack(const Rtm& m, std::uint32_t c, std::uint32_t input_aux = 3);

// Stacks become counter pairs (contents, occupancy); pushing doubles and
// pops divide. Counter-held inputs are converted to the encoded stacks by a
// generated prologue.
CounterMachine stack_to_cm(const StackPipeline& p, std::uint32_t arity);

struct TmCompileOptions {
    std::uint32_t c = 4;            // stacks per non-input group
    std::uint32_t input_aux = 0;    // 0: same as c (keeps every stack short)
    UnaryToBinaryOptions unary;
};

CounterMachine compile_tm_to_cm(const Rtm& m, const TmCompileOptions& opts = {});

// Deterministic two-tape scanner accepting odd unary inputs.
Rtm parity_rtm();

} // namespace bcp
