// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/error.hpp"

namespace pepbridge {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::DegenerateGeometry: return "DegenerateGeometry";
        case Errc::InvalidTime: return "InvalidTime";
        case Errc::IndexOutOfSchedule: return "IndexOutOfSchedule";
        case Errc::InvalidType: return "InvalidType";
        case Errc::InvalidK: return "InvalidK";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::TimeOutOfRange: return "TimeOutOfRange";
        case Errc::DegenerateTime: return "DegenerateTime";
        case Errc::NonFiniteState: return "NonFiniteState";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::NegativeDistance: return "NegativeDistance";
        case Errc::NonFiniteComponent: return "NonFiniteComponent";
        case Errc::NonFiniteLoss: return "NonFiniteLoss";
        case Errc::EmptyReceptor: return "EmptyReceptor";
        case Errc::MalformedRecord: return "MalformedRecord";
        case Errc::EmptyStructure: return "EmptyStructure";
        case Errc::BadMagic: return "BadMagic";
        case Errc::CountMismatch: return "CountMismatch";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::UnknownKey: return "UnknownKey";
        case Errc::UnparsableValue: return "UnparsableValue";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::TooFewItems: return "TooFewItems";
        case Errc::EmptyNativeSite: return "EmptyNativeSite";
        case Errc::DegenerateLabels: return "DegenerateLabels";
        case Errc::EmptyCloud: return "EmptyCloud";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), message_(message) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace pepbridge
