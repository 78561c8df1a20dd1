#include "drainguard/replay_cache.hpp"

#include "drainguard/error.hpp"

namespace drainguard {

ReplayCache::ReplayCache(std::uint32_t delta_i) : delta_i_(delta_i) {
    if (delta_i_ == 0) {
        throw Error(Errc::ConfigError, "delta_i must be positive");
    }
}

std::optional<std::uint16_t> ReplayCache::max_seen() const {
    if (seen_.empty()) {
        return std::nullopt;
    }
    return *seen_.rbegin();
}

ReplayCache::Admission ReplayCache::admit(std::uint16_t counter) {
    if (seen_.contains(counter)) {
        return Admission::Replayed;
    }
    const auto max = max_seen();
    if (max && *max > counter && static_cast<std::uint32_t>(*max - counter) > delta_i_) {
        return Admission::OutsideWindow;
    }
    seen_.insert(counter);
    if (!max || counter > *max) {
        // Everything more than delta_i below the new maximum can go.
        if (counter > delta_i_) {
            seen_.erase(seen_.begin(), seen_.lower_bound(static_cast<std::uint16_t>(counter - delta_i_)));
        }
    }
    return Admission::Accept;
}

} // namespace drainguard
