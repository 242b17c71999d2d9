#pragma once

#include <stdexcept>
#include <string>

namespace renorm {

enum class ErrorKind {
    PointOutsideDomain,
    RangeEscapesDomain,
    TruncationOverflow,
    NotMonotone,
    NotRenormalizable,
    NoConvergence,
    NewtonDiverged,
    ClassificationAmbiguous,
    HInversionFailed,
    ConstraintViolated,
    DepthExceeded,
    SingularDerivative,
    DegenerateJacobian,
    SingularZ,
    DomainError,
    ConfigError,
    IoError,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace renorm
