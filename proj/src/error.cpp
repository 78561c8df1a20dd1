#include "drainguard/error.hpp"

namespace drainguard {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::ConfigError: return "ConfigError";
    case Errc::NonPositiveBudget: return "NonPositiveBudget";
    case Errc::DegenerateBurst: return "DegenerateBurst";
    case Errc::ClockWentBackwards: return "ClockWentBackwards";
    case Errc::UnknownService: return "UnknownService";
    case Errc::UnknownRequester: return "UnknownRequester";
    case Errc::WrongLength: return "WrongLength";
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::MalformedSignature: return "MalformedSignature";
    case Errc::CounterExhausted: return "CounterExhausted";
    case Errc::CryptoFailure: return "CryptoFailure";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

} // namespace drainguard
