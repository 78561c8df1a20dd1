#pragma once

#include "drainguard/crypto.hpp"
#include "drainguard/energy_model.hpp"
#include "drainguard/messages.hpp"
#include "drainguard/rate_limiter.hpp"
#include "drainguard/replay_cache.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <variant>

namespace drainguard {

enum class Protocol { Proxy, TicketIssuer, Asymmetric };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

/// Certificate subject id used by the Backend.
inline constexpr std::uint32_t kBackendSubject = 0xb0000000u;

// ---------------------------------------------------------------------------
// Requester

enum class RequesterError { BadSignature, BadCertificate, NonceMismatch, UnexpectedMessage };
std::string_view to_string(RequesterError e);

/// Long-lived Requester state shared by its sessions.
struct RequesterContext {
    RequesterId id{};
    Identity identity;
    PublicKey ca_key;
    std::optional<Certificate> backend_cert; // cached after the first run
};

/// One protocol run of a Requester. Any error aborts the session.
class RequesterSession {
public:
    using Step = std::variant<Message, RequesterError>;

    RequesterSession(Protocol protocol, ServiceId service, ProviderId provider);

    /// Message (a).
    MsgA start(const RequesterContext& ctx, Rng& rng);

    /// Message (b) -> (c) for the proxy protocol, (c') for tickets.
    Step on_msg_b(RequesterContext& ctx, const MsgB& msg, Rng& rng);

    /// Ticket protocol (d) -> (e).
    Step on_msg_d2(const RequesterContext& ctx, const MsgD2& msg);

    bool aborted() const { return state_ == State::Aborted; }
    bool done() const { return state_ == State::Done; }
    const std::optional<Commitment>& commitment() const { return commitment_; }

private:
    enum class State { Idle, AwaitB, AwaitD2, Done, Aborted };

    Step abort(RequesterError e);

    Protocol protocol_;
    ServiceId service_;
    ProviderId provider_;
    State state_ = State::Idle;
    bool asked_for_cert_ = false;
    Nonce n1_{};
    Nonce n2_{};
    Nonce n3_{};
    std::optional<Commitment> commitment_;
    std::optional<PublicKey> backend_key_;
};

// ---------------------------------------------------------------------------
// Backend

enum class BackendError {
    UnknownSession,
    BadSignature,
    BadCertificate,
    RateLimited,
    CounterExhausted,
    UnknownProvider,
    UnknownService,
};
std::string_view to_string(BackendError e);

/// Every MAC the Backend produces for a Provider, for auditing.
struct IssuedGrant {
    RequesterId requester{};
    ProviderId provider{};
    ServiceId service{};
    std::uint16_t counter = 0;
    std::optional<Digest> h; // ticket protocol only
};

struct BackendOutput {
    std::optional<Message> to_requester;
    std::optional<MsgD> to_provider;
    std::optional<Ticket> ticket; // handshake-free ticket issue only
    ProviderId provider{};
    std::optional<Decision> decision;
    std::optional<BackendError> error;
};

struct BackendConfig {
    Identity identity;
    PublicKey ca_key;
    Algorithm algorithm = Algorithm::LeakyBucket;
    LimiterParams limiter;
    std::map<ServiceId, double> catalog;
    std::map<ProviderId, SymKey> provider_keys;
};

/// Trusted Backend: authenticates Requesters with signatures, runs the
/// per-requester limiter and either forwards MAC'd requests (proxy) or issues
/// tickets. Processes one message at a time.
class Backend {
public:
    explicit Backend(BackendConfig cfg);

    /// (a) -> (b). Opens (or replaces) the requester's single session.
    BackendOutput on_msg_a(const MsgA& msg, Rng& rng);

    /// Proxy protocol (c) -> (d) to the Provider.
    BackendOutput on_msg_c(RequesterId from, const MsgC& msg, Millis now);

    /// Ticket protocol (c) -> (d) with a ticket back to the Requester.
    BackendOutput on_msg_c2(RequesterId from, const MsgC2& msg, Millis now);

    /// Limiter and MAC steps for a sender that is taken as authenticated,
    /// skipping the signature handshake. Used by long simulations where the
    /// handshake cost would dominate and does not affect any decision.
    BackendOutput forward_authenticated(RequesterId from, ProviderId provider, ServiceId service, Millis now);
    BackendOutput ticket_authenticated(RequesterId from, ProviderId provider, ServiceId service, const Digest& h,
                                       Millis now);

    void set_grant_observer(std::function<void(const IssuedGrant&)> observer) { observer_ = std::move(observer); }

    const LimiterTable& limiter() const { return limiter_; }
    const Certificate& certificate() const { return cfg_.identity.cert; }
    std::size_t open_sessions() const { return sessions_.size(); }
    std::uint32_t next_counter(ProviderId provider) const;

private:
    struct Session {
        Nonce n2{};
        bool want_cert = false;
    };

    /// Looks up and validates the requester key; on success the session is
    /// consumed by the caller.
    std::variant<PublicKey, BackendError> requester_key(RequesterId from, const Session& session,
                                                        const std::optional<Certificate>& cert);
    std::optional<BackendError> admit(RequesterId from, ProviderId provider, ServiceId service, Millis now,
                                      BackendOutput& out);
    std::uint16_t take_counter(ProviderId provider);
    void issue_msg_d(RequesterId from, ProviderId provider, ServiceId service, BackendOutput& out);
    Ticket issue_ticket(RequesterId from, ProviderId provider, ServiceId service, const Digest& h);

    BackendConfig cfg_;
    LimiterTable limiter_;
    std::unordered_map<RequesterId, Session> sessions_;
    std::unordered_map<RequesterId, PublicKey> requester_keys_;
    std::map<ProviderId, std::uint32_t> counters_;
    std::function<void(const IssuedGrant&)> observer_;
};

// ---------------------------------------------------------------------------
// Provider

enum class RejectReason {
    WrongLength,
    Malformed,
    BadMac,
    StaleCounter,
    Replayed,
    OutsideWindow,
    UnknownService,
    BadCertificate,
    BadSignature,
    RateLimited,
};
std::string_view to_string(RejectReason r);

struct Serve {
    ServiceId service{};
    std::uint32_t counter = 0;
    std::optional<Digest> h;
};

struct Reject {
    RejectReason reason;
};

using ProviderVerdict = std::variant<Serve, Reject>;

struct ProviderConfig {
    ProviderId id{};
    Block key{};
    std::map<ServiceId, double> catalog;
    double budget_j = 0.0;
    double verify_cost_j = 0.0;
    std::uint32_t delta_i = 16;
    /// Proxy protocol: how many counters past the last accepted one are tried.
    std::uint32_t counter_lookahead = 1;
    // Asymmetric baseline only.
    std::optional<PublicKey> ca_key;
    Algorithm algorithm = Algorithm::LeakyBucket;
    LimiterParams limiter;
};

/// Constrained Provider. Every handled request first pays the configured
/// verification energy; a Serve additionally drains the service energy.
class Provider {
public:
    explicit Provider(ProviderConfig cfg);

    ProviderVerdict p1_handle(ByteView wire);
    ProviderVerdict p1_handle(const MsgD& msg);
    ProviderVerdict p2_handle(ByteView wire);
    ProviderVerdict p2_handle(const MsgE& msg);
    ProviderVerdict asym_handle(ByteView wire, Millis now);

    const EnergyLedger& ledger() const { return ledger_; }
    double served_energy() const { return served_j_; }
    double verification_energy() const { return verify_j_; }
    std::uint64_t serves() const { return serves_; }
    std::uint64_t handled() const { return handled_; }
    std::optional<std::uint16_t> last_counter() const { return last_counter_; }
    const ReplayCache& replay_cache() const { return cache_; }
    ProviderId id() const { return cfg_.id; }
    /// Present only for the asymmetric baseline, where the Provider throttles.
    const LimiterTable* limiter() const { return limiter_ ? &*limiter_ : nullptr; }

private:
    void pay_verification();
    ProviderVerdict serve(ServiceId service, std::uint32_t counter, std::optional<Digest> h);

    ProviderConfig cfg_;
    SymKey key_;
    EnergyLedger ledger_;
    double served_j_ = 0.0;
    double verify_j_ = 0.0;
    std::uint64_t serves_ = 0;
    std::uint64_t handled_ = 0;
    std::optional<std::uint16_t> last_counter_;
    ReplayCache cache_;
    std::optional<LimiterTable> limiter_;
    std::map<std::uint32_t, std::uint32_t> asym_counters_;
};

/// Wire size of an asymmetric baseline request with the given padding.
std::size_t asym_request_size(std::uint32_t padding);

/// Padding that brings an asymmetric request to `total_bytes`.
std::uint32_t asym_padding_for(std::size_t total_bytes);

AsymRequest make_asym_request(const Identity& requester, ServiceId service, ProviderId provider,
                              std::uint32_t counter, std::size_t total_bytes);

} // namespace drainguard
