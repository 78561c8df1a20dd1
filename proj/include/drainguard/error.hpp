#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drainguard {

enum class Errc {
    ConfigError,
    NonPositiveBudget,
    DegenerateBurst,
    ClockWentBackwards,
    UnknownService,
    UnknownRequester,
    WrongLength,
    MalformedMessage,
    MalformedSignature,
    CounterExhausted,
    CryptoFailure,
};

std::string_view to_string(Errc code);

/// Exception carrying a stable error code. Protocol-level rejections are not
/// errors and are reported through result types instead.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace drainguard
