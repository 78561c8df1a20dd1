#pragma once

#include "drainguard/types.hpp"

#include <cstdint>
#include <map>

namespace drainguard {

class KeyValueConfig;

/// Provider deployment: battery, radio baseline, lifetime and the services it
/// hosts. Energies in joules, current in amperes, voltage in volts.
struct DeploymentConfig {
    double battery_j = 0.0;
    double else_fraction = 0.0;
    double supply_v = 0.0;
    double rx_current_a = 0.0;
    double lifetime_days = 0.0;
    std::uint32_t requesters = 1;
    std::map<ServiceId, double> services;

    /// Throws Errc::ConfigError on the first violated invariant.
    void validate() const;

    double lifetime_seconds() const { return lifetime_days * kSecondsPerDay; }

    /// Energy of a catalogued service; throws Errc::UnknownService.
    double service_energy(ServiceId id) const;

    /// First (lowest id) service; used when a scenario does not name one.
    ServiceId default_service() const;
};

/// The hospital real-time-location-system deployment: CR2430 coin cell,
/// 45 mJ LED service, one year, 100 active requesters, 24 uA RX average at 3 V.
DeploymentConfig rtls_deployment();

/// Reads the `battery_j`, `else_fraction`, `supply_v`, `rx_current_a`,
/// `lifetime_days`, `requesters` and `service.<id>.energy_j` keys.
DeploymentConfig deployment_from(const KeyValueConfig& kv);

/// Energy the receiver needs over the whole lifetime: u * i_rx * T.
double rx_baseline_energy(const DeploymentConfig& cfg);

/// E_tot = E_bat - E_rx - else_fraction * E_bat. Throws
/// Errc::NonPositiveBudget when nothing is left for services.
///
/// For the RTLS deployment this yields about 451 J, in line with the 452 J
/// tabulated value; the 425 J figure sometimes quoted for the same inputs does
/// not follow from the formula.
double usable_service_energy(const DeploymentConfig& cfg);

/// lambda_th = E_tot / (T * N), in joules per day.
double threshold_depletion_rate(const DeploymentConfig& cfg);

/// Days until `remaining_j` is used up when one requester chains bursts of
/// `burst_requests` requests of `service_energy_j` every `burst_window`,
/// while the receiver baseline keeps draining concurrently.
double time_to_exhaustion(const DeploymentConfig& cfg, double remaining_j, std::uint32_t burst_requests,
                          Millis burst_window, double service_energy_j);

/// Battery charge left at `day` when the deployment consumes its battery
/// evenly over its lifetime.
double remaining_at_day(const DeploymentConfig& cfg, double day);

/// Joules drained from a budget. Draining past the budget is allowed.
class EnergyLedger {
public:
    EnergyLedger() = default;
    explicit EnergyLedger(double budget_j);

    void drain(double amount_j);

    double drained() const { return drained_; }
    double budget() const { return budget_; }
    double remaining() const { return budget_ - drained_; }
    bool exhausted() const { return drained_ >= budget_; }

private:
    double drained_ = 0.0;
    double budget_ = 0.0;
};

[[nodiscard]] EnergyLedger ledger_drain(EnergyLedger ledger, double amount_j);

} // namespace drainguard
