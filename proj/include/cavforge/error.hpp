#pragma once

#include <stdexcept>
#include <string>

namespace cavforge {

enum class ErrorCode {
    InvalidArgument,
    DuplicateId,
    UnknownId,
    OutOfBounds,
    NoKnobs,
    NoSnapshot,
    MissingComponent,
    NonFinite,
    DimensionMismatch,
    DegenerateResponse,
    BeamLost,
    NoSignal,
    NoLasing,
    Saturation,
    NotConverged,
    Io,
    Parse,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cavforge
