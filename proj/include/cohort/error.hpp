#pragma once

#include <stdexcept>
#include <string>

namespace cohort {

enum class ErrorKind {
    Argument,    // caller violated a precondition (bad range, unknown kind)
    Input,       // malformed user input (schema, unparseable file)
    Integrity,   // data contradicts an invariant (double spend, bad checksum)
    Sequencing,  // append out of order (day gap)
    Io,          // filesystem failure
    Validation,  // a validation check failed
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

// Process exit codes: 0 ok, 1 validation failure, 2 input error, 3 I/O error.
inline int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Validation: return 1;
        case ErrorKind::Io: return 3;
        default: return 2;
    }
}

}  // namespace cohort
