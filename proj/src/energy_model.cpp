#include "drainguard/energy_model.hpp"

#include "drainguard/config_file.hpp"
#include "drainguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace drainguard {

void DeploymentConfig::validate() const {
    if (!(battery_j > 0.0)) {
        throw Error(Errc::ConfigError, "battery_j must be > 0");
    }
    if (!(else_fraction >= 0.0 && else_fraction < 1.0)) {
        throw Error(Errc::ConfigError, "else_fraction must be in [0, 1)");
    }
    if (!(supply_v >= 0.0) || !(rx_current_a >= 0.0)) {
        throw Error(Errc::ConfigError, "supply_v and rx_current_a must be >= 0");
    }
    if (!(lifetime_days > 0.0)) {
        throw Error(Errc::ConfigError, "lifetime_days must be > 0");
    }
    if (requesters < 1) {
        throw Error(Errc::ConfigError, "requesters must be >= 1");
    }
    if (services.empty()) {
        throw Error(Errc::ConfigError, "service catalog is empty");
    }
    for (const auto& [id, energy] : services) {
        if (!(energy > 0.0)) {
            throw Error(Errc::ConfigError, "service " + std::to_string(to_underlying(id)) + " energy must be > 0");
        }
    }
}

double DeploymentConfig::service_energy(ServiceId id) const {
    const auto it = services.find(id);
    if (it == services.end()) {
        throw Error(Errc::UnknownService, "service " + std::to_string(to_underlying(id)));
    }
    return it->second;
}

ServiceId DeploymentConfig::default_service() const {
    if (services.empty()) {
        throw Error(Errc::ConfigError, "service catalog is empty");
    }
    return services.begin()->first;
}

DeploymentConfig rtls_deployment() {
    DeploymentConfig cfg;
    cfg.battery_j = 3024.0; // 840 mWh
    cfg.else_fraction = 0.1;
    cfg.supply_v = 3.0;
    cfg.rx_current_a = 24e-6;
    cfg.lifetime_days = 365.0;
    cfg.requesters = 100;
    cfg.services = {{ServiceId{1}, 0.045}};
    return cfg;
}

DeploymentConfig deployment_from(const KeyValueConfig& kv) {
    const auto defaults = rtls_deployment();
    DeploymentConfig cfg;
    cfg.battery_j = kv.get_double("battery_j", defaults.battery_j);
    cfg.else_fraction = kv.get_double("else_fraction", defaults.else_fraction);
    cfg.supply_v = kv.get_double("supply_v", defaults.supply_v);
    cfg.rx_current_a = kv.get_double("rx_current_a", defaults.rx_current_a);
    cfg.lifetime_days = kv.get_double("lifetime_days", defaults.lifetime_days);
    const auto n = kv.get_int("requesters", defaults.requesters);
    if (n < 1 || n > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(Errc::ConfigError, "requesters out of range");
    }
    cfg.requesters = static_cast<std::uint32_t>(n);

    for (const auto& key : kv.keys_with_prefix("service.")) {
        // service.<id>.energy_j
        const auto rest = key.substr(8);
        const auto dot = rest.find('.');
        if (dot == std::string::npos || rest.substr(dot + 1) != "energy_j") {
            throw Error(Errc::ConfigError, "unexpected key '" + key + "'");
        }
        int id = -1;
        try {
            id = std::stoi(rest.substr(0, dot));
        } catch (const std::exception&) {
            id = -1;
        }
        if (id < 0 || id > 255) {
            throw Error(Errc::ConfigError, "service id must be 0..255 in '" + key + "'");
        }
        cfg.services[ServiceId{static_cast<std::uint8_t>(id)}] = kv.get_double(key);
    }
    if (cfg.services.empty()) {
        cfg.services = defaults.services;
    }
    cfg.validate();
    return cfg;
}

double rx_baseline_energy(const DeploymentConfig& cfg) {
    return cfg.supply_v * cfg.rx_current_a * cfg.lifetime_seconds();
}

double usable_service_energy(const DeploymentConfig& cfg) {
    const double total = cfg.battery_j - rx_baseline_energy(cfg) - cfg.else_fraction * cfg.battery_j;
    if (!(total > 0.0)) {
        throw Error(Errc::NonPositiveBudget, "receiver baseline and reserved share consume the whole battery");
    }
    return total;
}

double threshold_depletion_rate(const DeploymentConfig& cfg) {
    return usable_service_energy(cfg) / (cfg.lifetime_days * static_cast<double>(cfg.requesters));
}

double time_to_exhaustion(const DeploymentConfig& cfg, double remaining_j, std::uint32_t burst_requests,
                          Millis burst_window, double service_energy_j) {
    if (burst_requests < 1 || burst_window <= Millis::zero() || !(remaining_j > 0.0)) {
        throw Error(Errc::ConfigError, "time_to_exhaustion needs burst_requests >= 1, window > 0, remaining > 0");
    }
    const double attack_w = static_cast<double>(burst_requests) * service_energy_j / to_seconds(burst_window);
    const double baseline_w = cfg.supply_v * cfg.rx_current_a;
    return remaining_j / (attack_w + baseline_w) / kSecondsPerDay;
}

double remaining_at_day(const DeploymentConfig& cfg, double day) {
    const double fraction = std::clamp(day / cfg.lifetime_days, 0.0, 1.0);
    return cfg.battery_j * (1.0 - fraction);
}

EnergyLedger::EnergyLedger(double budget_j) : budget_(budget_j) {}

void EnergyLedger::drain(double amount_j) {
    if (amount_j < 0.0) {
        throw Error(Errc::ConfigError, "negative drain");
    }
    drained_ += amount_j;
}

EnergyLedger ledger_drain(EnergyLedger ledger, double amount_j) {
    ledger.drain(amount_j);
    return ledger;
}

} // namespace drainguard
