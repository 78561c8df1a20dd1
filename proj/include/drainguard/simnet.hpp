#pragma once

#include "drainguard/crypto.hpp"
#include "drainguard/energy_model.hpp"
#include "drainguard/protocol.hpp"
#include "drainguard/rate_limiter.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace drainguard {

class KeyValueConfig;

struct LinkParams {
    double bytes_per_s = 20.0;
    Millis base_delay{0};
};

/// size / data_rate + base_delay, rounded up to the next millisecond.
Millis transmit_latency(const LinkParams& link, std::size_t size_bytes);

struct NetworkParams {
    LinkParams constrained{20.0, Millis{0}};
    LinkParams unconstrained{1.25e6, Millis{5}};
};

/// Energy the Provider spends authenticating one request, per protocol.
/// These are measured hardware constants and therefore inputs.
struct VerificationCosts {
    double proxy_j = 1.21e-6;
    double ticket_j = 2.34e-6;
    double asymmetric_j = 33.14e-3;

    double for_protocol(Protocol p) const;
};

enum class Fidelity {
    /// Every message of the handshake is exchanged, signed and verified.
    Protocol,
    /// Requesters are taken as authenticated: the Backend runs the limiter and
    /// produces the real MAC'd request or ticket, but no signatures are made.
    PreAuthenticated,
};

std::string_view to_string(Fidelity f);
Fidelity parse_fidelity(std::string_view text);

struct BenignProfile {
    double probability_per_day = 0.274;
};

struct SimConfig {
    DeploymentConfig deployment = rtls_deployment();
    ToleratedBurst burst;
    Millis tick{60'000};
    Algorithm algorithm = Algorithm::LeakyBucket;
    Protocol protocol = Protocol::Proxy;
    Fidelity fidelity = Fidelity::Protocol;
    NetworkParams network;
    VerificationCosts costs;
    std::size_t asym_request_bytes = 532;
    std::uint32_t delta_i = 16;
    std::uint32_t counter_lookahead = 1;
    ProviderId provider_id{1};
    bool attacker_observes = true;
    std::size_t observation_limit = 1'000'000;

    /// Limiter parameters derived from the deployment and tolerated burst.
    LimiterParams limiter() const;
    std::size_t provider_request_bytes() const;
};

/// Deployment, limiter, protocol, link and cost keys; see configs/ for the
/// schema. Callers reject unread keys once every consumer has parsed.
SimConfig sim_config_from(const KeyValueConfig& kv);

// Attacks ------------------------------------------------------------------

/// One authenticated requester repeats the tolerated burst back to back.
struct ChainedBursts {
    std::uint32_t requests = 10;
    Millis window{600'000};
    double start_day = 200.0;
    RequesterId requester{0};
};

/// The attacker holds stolen keys of these requesters and requests at the
/// given rate for each of them.
struct CompromisedFlood {
    std::vector<RequesterId> requesters;
    double requests_per_day = 1.0;
    double start_day = 0.0;
};

/// Random request-sized messages straight to the Provider.
struct GarbageInjection {
    double per_second = 1.0;
    double start_day = 0.0;
};

using AttackSpec = std::variant<ChainedBursts, CompromisedFlood, GarbageInjection>;

// Nodes and events -----------------------------------------------------------

enum class NodeKind : std::uint8_t { Requester, Backend, Provider, Attacker };

struct Address {
    NodeKind kind = NodeKind::Requester;
    std::uint32_t index = 0;
    friend auto operator<=>(const Address&, const Address&) = default;
};

struct Deliver {
    Address from;
    Address to;
    RequesterId claimed{}; // sender identity as seen by the Backend; spoofable
    Bytes payload;
};

enum class TimerKind : std::uint8_t { BenignRequest, BurstRequest, FloodRequest, Garbage, DailySample };

struct Timer {
    Address node;
    TimerKind kind = TimerKind::BenignRequest;
    std::uint32_t arg = 0;
};

struct SimEvent {
    Millis time{0};
    std::uint64_t sequence = 0;
    std::variant<Deliver, Timer> action;
};

struct ObservedMessage {
    Millis time{0};
    Address from;
    Address to;
    Bytes payload;
};

/// Network adversary: sees every legit message, can send anything from any
/// address, and uses only keys it stole. There is deliberately no way to
/// drop, delay or alter a message that is already in flight.
class AttackerNode {
public:
    const std::vector<ObservedMessage>& observations() const { return observations_; }
    bool holds_key_of(RequesterId id) const { return stolen_.contains(id); }

private:
    friend class Simulation;

    std::vector<ObservedMessage> observations_;
    std::map<RequesterId, RequesterContext> stolen_;
    std::map<RequesterId, std::unique_ptr<RequesterSession>> sessions_;
    std::uint32_t next_asym_counter_ = 1u << 31;
};

// Report ---------------------------------------------------------------------

struct DayRow {
    std::uint32_t day = 0;
    RequesterId requester{};
    std::uint32_t requested = 0;
    std::uint32_t served = 0;
    std::uint32_t dropped = 0;
    std::uint32_t failed = 0;
    std::optional<double> counter_j; // end-of-day limiter level, sampled requesters only
};

struct LedgerPoint {
    std::uint32_t day = 0;
    double drained_j = 0.0;
};

struct SimulationReport {
    std::vector<DayRow> rows; // sorted by (day, requester)
    std::vector<LedgerPoint> ledger_trace;
    std::map<std::string, std::uint64_t> tallies;
    std::uint64_t provider_serves = 0;
    std::uint64_t provider_handled = 0;
    double served_energy_j = 0.0;
    double verification_energy_j = 0.0;
    double drained_j = 0.0;
    double budget_j = 0.0;
    std::uint64_t events = 0;

    bool empty() const { return rows.empty() && tallies.empty() && provider_handled == 0; }

    /// `day,requester_id,requested,served,dropped,failed,counter_j`
    void write_csv(std::ostream& out) const;
    /// JSON summary of totals and tallies.
    void write_summary(std::ostream& out) const;
};

// Simulation -----------------------------------------------------------------

class Simulation {
public:
    Simulation(SimConfig cfg, std::uint64_t seed);
    ~Simulation();
    Simulation(Simulation&&) noexcept;
    Simulation& operator=(Simulation&&) noexcept;

    /// One request per requester per day with the profile's probability, at a
    /// uniformly random time of that day, for days [0, horizon_days).
    void spawn_benign_traffic(const BenignProfile& profile, double horizon_days);

    /// Throws Errc::UnknownRequester for ids outside the topology.
    void spawn_attack(const AttackSpec& attack, double horizon_days);

    /// Record end-of-day limiter levels for these requesters (and the ledger
    /// for every day) until `horizon_days`.
    void sample_daily(std::vector<RequesterId> requesters, double horizon_days);

    SimulationReport run_until(Millis t_end);

    Millis now() const;
    const SimConfig& config() const;
    const Backend& backend() const;
    const Provider& provider() const;
    const AttackerNode& attacker() const;
    std::uint32_t requester_count() const;

    /// Every Backend-issued (provider, service, counter, h) tuple, for audits.
    const std::vector<IssuedGrant>& issued_grants() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Requesters, Backend, Provider and attacker wired per `protocol`.
Simulation build_topology(const SimConfig& cfg, Protocol protocol, std::uint64_t seed);

} // namespace drainguard
