#pragma once

#include <stdexcept>
#include <string>

namespace hiemp {

/// An argument violated an operation's precondition (bad dimensions, out-of-range values).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training or an oracle cannot continue: non-finite values, exhausted budgets, bad files.
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hiemp
