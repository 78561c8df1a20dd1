#pragma once

#include "drainguard/energy_model.hpp"
#include "drainguard/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>

namespace drainguard {

enum class Algorithm { LeakyBucket, Ewma };
enum class Decision { Served, Dropped };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

/// The most intensive burst that must still pass undetected: `requests`
/// requests of `service` spread evenly over `window`.
struct ToleratedBurst {
    std::uint32_t requests = 10;
    ServiceId service{1};
    Millis window{600'000};
};

struct LeakyBucketParams {
    double drain_per_tick_j = 0.0; // D
    double threshold_j = 0.0;      // K_lb
};

struct EwmaParams {
    double decay = 0.0;       // d = exp(-1 / lifetime_in_ticks)
    double initial_j = 0.0;   // e0
    double threshold_j = 0.0; // K_ewma
};

struct LimiterParams {
    Millis tick{60'000};
    double lambda_th_j_per_day = 0.0;
    LeakyBucketParams lb;
    EwmaParams ewma;

    double threshold(Algorithm a) const { return a == Algorithm::LeakyBucket ? lb.threshold_j : ewma.threshold_j; }
};

/// Counter value and the time it was last brought up to date.
struct CounterState {
    double level_j = 0.0;
    Millis last_update{0};
};

using LeakyBucketState = CounterState;
using EwmaState = CounterState;

struct LimiterStep {
    CounterState state;
    std::optional<Decision> decision; // set iff a request was presented
};

/// Leaky bucket: continuous drain of D per tick (floored at zero), then a
/// presented request is dropped when the level already exceeds K_lb, and
/// otherwise served and added to the level. Dropped requests leave the
/// level untouched. Throws Errc::ClockWentBackwards.
LimiterStep lb_update(const LeakyBucketState& state, const LimiterParams& params, Millis now,
                      std::optional<double> request_j);

/// EWMA: decay by d per tick (fractional ticks allowed), then a presented
/// request is dropped when the level exceeds K_ewma, otherwise served and
/// (1 - d) * E_s is added. Throws Errc::ClockWentBackwards.
LimiterStep ewma_update(const EwmaState& state, const LimiterParams& params, Millis now,
                        std::optional<double> request_j);

EwmaState ewma_initial_state(const LimiterParams& params, Millis created);

/// D = lambda_th * tick, and K_lb = the leaky bucket level right before the
/// last increment when the tolerated burst is fed from an empty bucket with
/// requests at window/m, 2*window/m, ..., window. Throws Errc::DegenerateBurst
/// when K_lb <= 0.
LeakyBucketParams derive_lb_params(const DeploymentConfig& cfg, const ToleratedBurst& burst, Millis tick);

/// d, e0 = lambda_th * tick, and K_ewma obtained like K_lb but starting from
/// e0 at t = 0.
EwmaParams derive_ewma_params(const DeploymentConfig& cfg, const ToleratedBurst& burst, Millis tick);

LimiterParams derive_limiter_params(const DeploymentConfig& cfg, const ToleratedBurst& burst, Millis tick);

/// Per-requester limiter state. Entries are created lazily on a requester's
/// first request. Not internally synchronised: callers serialise updates to
/// the same requester id (the backend core processes one message at a time).
class LimiterTable {
public:
    LimiterTable(Algorithm algorithm, LimiterParams params, std::map<ServiceId, double> catalog);

    /// Throws Errc::UnknownService, Errc::ClockWentBackwards.
    Decision check_and_update(RequesterId requester, ServiceId service, Millis now);

    /// Counter value decayed to `now` without changing the table; nullopt for
    /// requesters never seen.
    std::optional<double> level_at(RequesterId requester, Millis now) const;

    std::optional<CounterState> state(RequesterId requester) const;

    Algorithm algorithm() const { return algorithm_; }
    const LimiterParams& params() const { return params_; }
    std::size_t size() const { return states_.size(); }

    /// CSV rows `requester_id,algorithm,counter_j,last_update_ms`, sorted by id.
    void write_csv(std::ostream& out) const;

private:
    Algorithm algorithm_;
    LimiterParams params_;
    std::map<ServiceId, double> catalog_;
    std::unordered_map<RequesterId, CounterState> states_;
};

} // namespace drainguard
