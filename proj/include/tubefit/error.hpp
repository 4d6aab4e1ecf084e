#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tubefit {

enum class ErrorCode {
    Precondition,
    Domain,
    DegenerateFit,
    InsufficientData,
    SingularTangent,
    EmptyNeighborhood,
    DegenerateWeights,
    DegenerateCovariance,
    TubeFitFailed,
    Export,
    Parse,
    EmptyInput,
    UnsupportedVersion,
    Input,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace tubefit
