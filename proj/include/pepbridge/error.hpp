// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pepbridge {

enum class Errc {
    DegenerateGeometry,
    InvalidTime,
    IndexOutOfSchedule,
    InvalidType,
    InvalidK,
    EmptyInput,
    ShapeMismatch,
    TimeOutOfRange,
    DegenerateTime,
    NonFiniteState,
    DimensionMismatch,
    NegativeDistance,
    NonFiniteComponent,
    NonFiniteLoss,
    EmptyReceptor,
    MalformedRecord,
    EmptyStructure,
    BadMagic,
    CountMismatch,
    NonFiniteValue,
    UnknownKey,
    UnparsableValue,
    DegenerateInput,
    LengthMismatch,
    TooFewItems,
    EmptyNativeSite,
    DegenerateLabels,
    EmptyCloud,
    InvalidArgument,
    Io,
};

std::string_view errc_name(Errc code);

/// Every recoverable failure in the library is reported through this type.
/// `code()` identifies the failure class; `what()` carries the location.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);
    Errc code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    Errc code_;
    std::string message_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace pepbridge
