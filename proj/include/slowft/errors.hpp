#pragma once

#include <stdexcept>
#include <string>

namespace slowft {

// Bad user input or precondition violation. CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A configured work or precision budget ran out. CLI exit code 3.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A construction step could not be satisfied (no admissible block, schedule
// constraint not met inside the precision budget, ...). CLI exit code 3.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace slowft
