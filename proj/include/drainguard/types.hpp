#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace drainguard {

/// Simulation and limiter time base: integer milliseconds since t = 0.
using Millis = std::chrono::duration<std::int64_t, std::milli>;

inline constexpr Millis kMillisPerDay{86'400'000};
inline constexpr double kSecondsPerDay = 86'400.0;

enum class RequesterId : std::uint32_t {};
enum class ProviderId : std::uint32_t {};
enum class ServiceId : std::uint8_t {};

constexpr std::uint32_t to_underlying(RequesterId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t to_underlying(ProviderId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint8_t to_underlying(ServiceId id) { return static_cast<std::uint8_t>(id); }

inline double to_seconds(Millis t) { return static_cast<double>(t.count()) / 1000.0; }
inline double to_days(Millis t) { return static_cast<double>(t.count()) / static_cast<double>(kMillisPerDay.count()); }

inline Millis from_seconds(double s) { return Millis{static_cast<std::int64_t>(std::llround(s * 1000.0))}; }
inline Millis from_days(double d) { return from_seconds(d * kSecondsPerDay); }

} // namespace drainguard
