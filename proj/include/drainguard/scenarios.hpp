#pragma once

#include "drainguard/simnet.hpp"
#include "drainguard/sweep.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drainguard {

class KeyValueConfig;

struct ScenarioSpec {
    std::string name = "scenario";
    SimConfig sim;
    BenignProfile benign;
    double benign_until_day = 365.0;
    std::optional<AttackSpec> attack;
    double horizon_days = 365.0;
    std::uint64_t seed = 1;
    std::vector<RequesterId> sampled;
};

/// Reads the simulator keys plus `name`, `seed`, `horizon_days`,
/// `benign.probability_per_day`, `benign.until_day`, `sample` and the
/// `attack.*` family, then rejects any key nobody read.
ScenarioSpec scenario_from(const KeyValueConfig& kv);
ScenarioSpec load_scenario(const std::string& path);

/// Benign traffic for the whole year, one requester chaining tolerated
/// bursts from day 200, counters of the attacker and one bystander sampled.
ScenarioSpec detection_scenario(const DeploymentConfig& deployment);

SimulationReport run_scenario(const ScenarioSpec& spec, std::uint64_t seed);

struct DetectionMetrics {
    std::uint64_t benign_requests = 0; // every requester, before the attack starts
    std::uint64_t benign_dropped = 0;
    double false_drop_rate = 0.0;
    std::uint64_t attack_served = 0; // attacking requester, after the transient
    std::uint64_t attack_dropped = 0;
    double attack_days = 0.0;
    double served_per_day = 0.0;
    std::uint64_t attack_phase_served = 0; // attacking requester, whole attack phase
    double max_requester_energy_j = 0.0;
    double requester_energy_bound_j = 0.0;
};

/// Only meaningful for a ChainedBursts attack.
DetectionMetrics detection_metrics(const SimulationReport& report, const ScenarioSpec& spec,
                                   double transient_days = 5.0);

DetectionMetrics average_metrics(const std::vector<DetectionMetrics>& runs);

// Tables -------------------------------------------------------------------

struct ParameterTable {
    double rx_energy_j = 0.0;
    double usable_energy_j = 0.0;
    double lambda_th_j_per_day = 0.0;
    double lb_drain_per_tick_j = 0.0;
    double lb_threshold_j = 0.0;
    double ewma_decay = 0.0;
    double ewma_initial_j = 0.0;
    double ewma_threshold_j = 0.0;
};

ParameterTable parametrize(const SimConfig& cfg);
void write_parameter_table(std::ostream& out, const ParameterTable& table);

void write_severity_csv(std::ostream& out, const std::vector<SeverityPoint>& points);

struct LatencyRow {
    Protocol protocol = Protocol::Proxy;
    std::size_t request_bytes = 0;
    double transfer_s = 0.0;
};

std::vector<LatencyRow> latency_table(const SimConfig& cfg);
void write_latency_table(std::ostream& out, const std::vector<LatencyRow>& rows);

struct InjectionResult {
    Protocol protocol = Protocol::Proxy;
    double per_second = 0.0;
    double days = 0.0;
    double drained_j = 0.0;
    double battery_percent = 0.0;
    std::uint64_t messages = 0;
};

/// rate * duration * per-verification cost.
InjectionResult injection_drain(const SimConfig& cfg, Protocol protocol, double per_second, double days);

/// The same attack pushed through the simulator; every garbage message must
/// be rejected and charged.
InjectionResult simulate_injection(const SimConfig& cfg, Protocol protocol, double per_second, double days,
                                   std::uint64_t seed);

void write_injection_table(std::ostream& out, const std::vector<InjectionResult>& rows);

} // namespace drainguard
