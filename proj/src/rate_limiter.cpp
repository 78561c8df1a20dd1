#include "drainguard/rate_limiter.hpp"

#include "drainguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace drainguard {

namespace {

double elapsed_ticks(Millis from, Millis to, Millis tick) {
    if (to < from) {
        throw Error(Errc::ClockWentBackwards,
                    "update at " + std::to_string(to.count()) + " ms after " + std::to_string(from.count()) + " ms");
    }
    return static_cast<double>((to - from).count()) / static_cast<double>(tick.count());
}

double lb_decayed(double level, double drain_per_tick, double ticks) {
    return std::max(0.0, level - drain_per_tick * ticks);
}

double ewma_decayed(double level, double decay, double ticks) {
    return level * std::pow(decay, ticks);
}

// Requests at window/m * k for k = 1..m; returns the position of request k
// (in ticks) so both derivations feed the identical schedule.
double burst_position(const ToleratedBurst& burst, Millis tick, std::uint32_t k) {
    const double window_ticks = static_cast<double>(burst.window.count()) / static_cast<double>(tick.count());
    return window_ticks * static_cast<double>(k) / static_cast<double>(burst.requests);
}

void check_burst(const ToleratedBurst& burst, Millis tick) {
    if (burst.requests < 1 || burst.window <= Millis::zero() || tick <= Millis::zero()) {
        throw Error(Errc::ConfigError, "tolerated burst needs requests >= 1, window > 0 and tick > 0");
    }
}

} // namespace

std::string_view to_string(Algorithm a) {
    return a == Algorithm::LeakyBucket ? "lb" : "ewma";
}

Algorithm parse_algorithm(std::string_view text) {
    if (text == "lb" || text == "leaky_bucket") {
        return Algorithm::LeakyBucket;
    }
    if (text == "ewma") {
        return Algorithm::Ewma;
    }
    throw Error(Errc::ConfigError, "unknown limiter '" + std::string(text) + "'");
}

LimiterStep lb_update(const LeakyBucketState& state, const LimiterParams& params, Millis now,
                      std::optional<double> request_j) {
    const double ticks = elapsed_ticks(state.last_update, now, params.tick);
    LimiterStep step{{lb_decayed(state.level_j, params.lb.drain_per_tick_j, ticks), now}, std::nullopt};
    if (request_j) {
        if (step.state.level_j > params.lb.threshold_j) {
            step.decision = Decision::Dropped;
        } else {
            step.decision = Decision::Served;
            step.state.level_j += *request_j;
        }
    }
    return step;
}

LimiterStep ewma_update(const EwmaState& state, const LimiterParams& params, Millis now,
                        std::optional<double> request_j) {
    const double ticks = elapsed_ticks(state.last_update, now, params.tick);
    LimiterStep step{{ewma_decayed(state.level_j, params.ewma.decay, ticks), now}, std::nullopt};
    if (request_j) {
        if (step.state.level_j > params.ewma.threshold_j) {
            step.decision = Decision::Dropped;
        } else {
            step.decision = Decision::Served;
            step.state.level_j += (1.0 - params.ewma.decay) * *request_j;
        }
    }
    return step;
}

EwmaState ewma_initial_state(const LimiterParams& params, Millis created) {
    return {params.ewma.initial_j, created};
}

LeakyBucketParams derive_lb_params(const DeploymentConfig& cfg, const ToleratedBurst& burst, Millis tick) {
    check_burst(burst, tick);
    const double service_j = cfg.service_energy(burst.service);
    LeakyBucketParams p;
    p.drain_per_tick_j = threshold_depletion_rate(cfg) * to_days(tick);

    double level = 0.0;
    double last = burst_position(burst, tick, 1);
    for (std::uint32_t k = 1; k < burst.requests; ++k) {
        const double at = burst_position(burst, tick, k);
        level = lb_decayed(level, p.drain_per_tick_j, at - last) + service_j;
        last = at;
    }
    const double at = burst_position(burst, tick, burst.requests);
    p.threshold_j = lb_decayed(level, p.drain_per_tick_j, at - last);
    if (!(p.threshold_j > 0.0)) {
        throw Error(Errc::DegenerateBurst, "tolerated burst leaves an empty bucket (K_lb <= 0)");
    }
    return p;
}

EwmaParams derive_ewma_params(const DeploymentConfig& cfg, const ToleratedBurst& burst, Millis tick) {
    check_burst(burst, tick);
    const double service_j = cfg.service_energy(burst.service);
    const double lifetime_ticks = cfg.lifetime_seconds() * 1000.0 / static_cast<double>(tick.count());
    EwmaParams p;
    p.decay = std::exp(-1.0 / lifetime_ticks);
    p.initial_j = threshold_depletion_rate(cfg) * to_days(tick);

    // A table entry starts at e0 when the requester first shows up, so the
    // burst's first request sees e0 undecayed.
    double level = p.initial_j;
    double last = burst_position(burst, tick, 1);
    for (std::uint32_t k = 1; k < burst.requests; ++k) {
        const double at = burst_position(burst, tick, k);
        level = ewma_decayed(level, p.decay, at - last) + (1.0 - p.decay) * service_j;
        last = at;
    }
    p.threshold_j = ewma_decayed(level, p.decay, burst_position(burst, tick, burst.requests) - last);
    if (!(p.threshold_j > 0.0)) {
        throw Error(Errc::DegenerateBurst, "tolerated burst gives K_ewma <= 0");
    }
    return p;
}

LimiterParams derive_limiter_params(const DeploymentConfig& cfg, const ToleratedBurst& burst, Millis tick) {
    LimiterParams p;
    p.tick = tick;
    p.lambda_th_j_per_day = threshold_depletion_rate(cfg);
    p.lb = derive_lb_params(cfg, burst, tick);
    p.ewma = derive_ewma_params(cfg, burst, tick);
    return p;
}

LimiterTable::LimiterTable(Algorithm algorithm, LimiterParams params, std::map<ServiceId, double> catalog)
    : algorithm_(algorithm), params_(params), catalog_(std::move(catalog)) {}

Decision LimiterTable::check_and_update(RequesterId requester, ServiceId service, Millis now) {
    const auto svc = catalog_.find(service);
    if (svc == catalog_.end()) {
        throw Error(Errc::UnknownService, "service " + std::to_string(to_underlying(service)));
    }
    auto it = states_.find(requester);
    if (it == states_.end()) {
        const CounterState fresh = algorithm_ == Algorithm::LeakyBucket ? CounterState{0.0, now}
                                                                         : ewma_initial_state(params_, now);
        it = states_.emplace(requester, fresh).first;
    }
    const auto step = algorithm_ == Algorithm::LeakyBucket ? lb_update(it->second, params_, now, svc->second)
                                                           : ewma_update(it->second, params_, now, svc->second);
    it->second = step.state;
    return *step.decision;
}

std::optional<double> LimiterTable::level_at(RequesterId requester, Millis now) const {
    const auto it = states_.find(requester);
    if (it == states_.end()) {
        return std::nullopt;
    }
    const auto step = algorithm_ == Algorithm::LeakyBucket ? lb_update(it->second, params_, now, std::nullopt)
                                                           : ewma_update(it->second, params_, now, std::nullopt);
    return step.state.level_j;
}

std::optional<CounterState> LimiterTable::state(RequesterId requester) const {
    const auto it = states_.find(requester);
    if (it == states_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void LimiterTable::write_csv(std::ostream& out) const {
    std::vector<std::pair<RequesterId, CounterState>> rows(states_.begin(), states_.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out << "requester_id,algorithm,counter_j,last_update_ms\n";
    const auto old_precision = out.precision(17);
    for (const auto& [id, st] : rows) {
        out << to_underlying(id) << ',' << to_string(algorithm_) << ',' << st.level_j << ',' << st.last_update.count()
            << '\n';
    }
    out.precision(old_precision);
}

} // namespace drainguard
