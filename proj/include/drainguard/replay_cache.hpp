#pragma once

#include <cstdint>
#include <optional>
#include <set>

namespace drainguard {

/// Ticket counters already redeemed at a Provider. A counter is refused when
/// it is cached, or when it lags the highest cached counter by more than the
/// validity distance. Raising the maximum evicts counters that fall outside
/// the distance, so memory stays bounded by delta_i + 1 entries.
class ReplayCache {
public:
    enum class Admission { Accept, Replayed, OutsideWindow };

    explicit ReplayCache(std::uint32_t delta_i = 16);

    Admission admit(std::uint16_t counter);

    const std::set<std::uint16_t>& seen() const { return seen_; }
    std::optional<std::uint16_t> max_seen() const;
    std::uint32_t delta_i() const { return delta_i_; }

private:
    std::uint32_t delta_i_;
    std::set<std::uint16_t> seen_;
};

} // namespace drainguard
