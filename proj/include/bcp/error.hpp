#pragma once

#include <stdexcept>
#include <string>

namespace bcp {

enum class Err {
    UnknownSymbol,
    EmptyPopulation,
    StateNotPresent,
    UnknownState,
    Validation,
    Parse,
    BudgetExceeded,
    DegenerateInput,
    DomainError,
    CoefficientZero,
    BadModulus,
    ArityMismatch,
    CounterOverflow,
    SpaceBoundViolation,
    Timeout,
    Io,
};

class Error : public std::runtime_error {
  public:
    Error(Err kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Err kind() const { return kind_; }

  private:
    Err kind_;
};

// Parse failures carry a 1-based source position.
class ParseError : public Error {
  public:
    ParseError(std::string msg, int line, int col)
        : Error(Err::Parse, msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
          line(line), col(col) {}
    int line;
    int col;
};

[[noreturn]] inline void fail(Err kind, const std::string& msg) { throw Error(kind, msg); }

} // namespace bcp
