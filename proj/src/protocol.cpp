#include "drainguard/protocol.hpp"

#include "drainguard/error.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <string>

namespace drainguard {

std::string_view to_string(Protocol p) {
    switch (p) {
    case Protocol::Proxy: return "p1";
    case Protocol::TicketIssuer: return "p2";
    case Protocol::Asymmetric: return "asym";
    }
    return "?";
}

Protocol parse_protocol(std::string_view text) {
    if (text == "p1" || text == "proxy") {
        return Protocol::Proxy;
    }
    if (text == "p2" || text == "ticket") {
        return Protocol::TicketIssuer;
    }
    if (text == "asym" || text == "asymmetric") {
        return Protocol::Asymmetric;
    }
    throw Error(Errc::ConfigError, "unknown protocol '" + std::string(text) + "'");
}

std::string_view to_string(RequesterError e) {
    switch (e) {
    case RequesterError::BadSignature: return "BadSignature";
    case RequesterError::BadCertificate: return "BadCertificate";
    case RequesterError::NonceMismatch: return "NonceMismatch";
    case RequesterError::UnexpectedMessage: return "UnexpectedMessage";
    }
    return "?";
}

std::string_view to_string(BackendError e) {
    switch (e) {
    case BackendError::UnknownSession: return "UnknownSession";
    case BackendError::BadSignature: return "BadSignature";
    case BackendError::BadCertificate: return "BadCertificate";
    case BackendError::RateLimited: return "RateLimited";
    case BackendError::CounterExhausted: return "CounterExhausted";
    case BackendError::UnknownProvider: return "UnknownProvider";
    case BackendError::UnknownService: return "UnknownService";
    }
    return "?";
}

std::string_view to_string(RejectReason r) {
    switch (r) {
    case RejectReason::WrongLength: return "WrongLength";
    case RejectReason::Malformed: return "Malformed";
    case RejectReason::BadMac: return "BadMac";
    case RejectReason::StaleCounter: return "StaleCounter";
    case RejectReason::Replayed: return "Replayed";
    case RejectReason::OutsideWindow: return "OutsideWindow";
    case RejectReason::UnknownService: return "UnknownService";
    case RejectReason::BadCertificate: return "BadCertificate";
    case RejectReason::BadSignature: return "BadSignature";
    case RejectReason::RateLimited: return "RateLimited";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Requester

RequesterSession::RequesterSession(Protocol protocol, ServiceId service, ProviderId provider)
    : protocol_(protocol), service_(service), provider_(provider) {
    if (protocol == Protocol::Asymmetric) {
        throw Error(Errc::ConfigError, "the asymmetric baseline has no backend session");
    }
}

MsgA RequesterSession::start(const RequesterContext& ctx, Rng& rng) {
    n1_ = rng.nonce();
    asked_for_cert_ = !ctx.backend_cert.has_value();
    state_ = State::AwaitB;
    return MsgA{ctx.id, n1_, asked_for_cert_};
}

RequesterSession::Step RequesterSession::abort(RequesterError e) {
    state_ = State::Aborted;
    return e;
}

RequesterSession::Step RequesterSession::on_msg_b(RequesterContext& ctx, const MsgB& msg, Rng& rng) {
    if (state_ != State::AwaitB) {
        return abort(RequesterError::UnexpectedMessage);
    }
    std::optional<Certificate> fresh_cert;
    if (asked_for_cert_) {
        if (!msg.backend_cert || msg.backend_cert->subject != kBackendSubject ||
            !cert_verify(ctx.ca_key, *msg.backend_cert)) {
            return abort(RequesterError::BadCertificate);
        }
        fresh_cert = msg.backend_cert;
    } else if (!ctx.backend_cert) {
        return abort(RequesterError::BadCertificate);
    }
    const PublicKey& backend_key = fresh_cert ? fresh_cert->key : ctx.backend_cert->key;
    // The signature covers our own N1, which never travels in (b): a failure
    // means the reply does not belong to this run.
    if (!backend_key.verify(signed_nonces(n1_, msg.n2), msg.sig)) {
        return abort(RequesterError::NonceMismatch);
    }
    if (fresh_cert) {
        ctx.backend_cert = fresh_cert;
    }
    backend_key_ = backend_key;
    n2_ = msg.n2;
    const auto own_cert = msg.want_cert ? std::optional<Certificate>(ctx.identity.cert) : std::nullopt;

    if (protocol_ == Protocol::Proxy) {
        state_ = State::Done;
        return Message{MsgC{service_, provider_, ctx.identity.key.sign(signed_p1_request(service_, provider_, n2_)),
                            own_cert}};
    }
    n3_ = rng.nonce();
    commitment_ = new_commitment(rng);
    state_ = State::AwaitD2;
    MsgC2 out;
    out.provider = provider_;
    out.service = service_;
    out.n3 = n3_;
    out.h = commitment_->h;
    out.requester_cert = own_cert;
    out.sig = ctx.identity.key.sign(signed_p2_request(provider_, service_, n2_, n3_, commitment_->h));
    return Message{out};
}

RequesterSession::Step RequesterSession::on_msg_d2(const RequesterContext&, const MsgD2& msg) {
    if (state_ != State::AwaitD2 || !backend_key_ || !commitment_) {
        return abort(RequesterError::UnexpectedMessage);
    }
    if (!backend_key_->verify(signed_ticket(msg.ticket, n3_), msg.sig)) {
        return abort(RequesterError::BadSignature);
    }
    state_ = State::Done;
    return Message{MsgE{commitment_->r, msg.ticket}};
}

// ---------------------------------------------------------------------------
// Backend

Backend::Backend(BackendConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.algorithm, cfg_.limiter, cfg_.catalog) {}

std::uint32_t Backend::next_counter(ProviderId provider) const {
    const auto it = counters_.find(provider);
    return it == counters_.end() ? 0u : it->second;
}

BackendOutput Backend::on_msg_a(const MsgA& msg, Rng& rng) {
    Session session;
    session.n2 = rng.nonce();
    session.want_cert = !requester_keys_.contains(msg.requester);
    sessions_[msg.requester] = session;

    MsgB reply;
    reply.n2 = session.n2;
    reply.want_cert = session.want_cert;
    if (msg.want_cert) {
        reply.backend_cert = cfg_.identity.cert;
    }
    reply.sig = cfg_.identity.key.sign(signed_nonces(msg.n1, session.n2));
    BackendOutput out;
    out.to_requester = Message{std::move(reply)};
    return out;
}

std::variant<PublicKey, BackendError> Backend::requester_key(RequesterId from, const Session& session,
                                                             const std::optional<Certificate>& cert) {
    if (cert) {
        if (cert->subject != to_underlying(from) || !cert_verify(cfg_.ca_key, *cert)) {
            return BackendError::BadCertificate;
        }
        return cert->key;
    }
    const auto it = requester_keys_.find(from);
    if (session.want_cert || it == requester_keys_.end()) {
        return BackendError::BadCertificate;
    }
    return it->second;
}

std::uint16_t Backend::take_counter(ProviderId provider) {
    auto& next = counters_[provider];
    return static_cast<std::uint16_t>(next++);
}

std::optional<BackendError> Backend::admit(RequesterId from, ProviderId provider, ServiceId service, Millis now,
                                           BackendOutput& out) {
    out.provider = provider;
    if (!cfg_.provider_keys.contains(provider)) {
        return BackendError::UnknownProvider;
    }
    if (!cfg_.catalog.contains(service)) {
        return BackendError::UnknownService;
    }
    if (next_counter(provider) > 0xffffu) {
        return BackendError::CounterExhausted;
    }
    out.decision = limiter_.check_and_update(from, service, now);
    if (*out.decision == Decision::Dropped) {
        out.to_requester = Message{MsgDenied{service}};
        return BackendError::RateLimited;
    }
    return std::nullopt;
}

BackendOutput Backend::on_msg_c(RequesterId from, const MsgC& msg, Millis now) {
    BackendOutput out;
    const auto session = sessions_.find(from);
    if (session == sessions_.end()) {
        out.error = BackendError::UnknownSession;
        return out;
    }
    const auto key = requester_key(from, session->second, msg.requester_cert);
    if (const auto* e = std::get_if<BackendError>(&key)) {
        out.error = *e;
        return out;
    }
    const auto& pk = std::get<PublicKey>(key);
    if (!pk.verify(signed_p1_request(msg.service, msg.provider, session->second.n2), msg.sig)) {
        out.error = BackendError::BadSignature;
        return out;
    }
    sessions_.erase(session);
    requester_keys_.insert_or_assign(from, pk);

    if (const auto e = admit(from, msg.provider, msg.service, now, out)) {
        out.error = e;
        return out;
    }
    issue_msg_d(from, msg.provider, msg.service, out);
    return out;
}

void Backend::issue_msg_d(RequesterId from, ProviderId provider, ServiceId service, BackendOutput& out) {
    const auto counter = take_counter(provider);
    out.to_provider = MsgD{service, mac_tag(cfg_.provider_keys.at(provider), p1_mac_input(service, provider, counter))};
    if (observer_) {
        observer_(IssuedGrant{from, provider, service, counter, std::nullopt});
    }
}

Ticket Backend::issue_ticket(RequesterId from, ProviderId provider, ServiceId service, const Digest& h) {
    Ticket ticket;
    ticket.service = service;
    ticket.counter = take_counter(provider);
    ticket.mac = mac_tag(cfg_.provider_keys.at(provider), p2_mac_input(provider, service, h, ticket.counter));
    if (observer_) {
        observer_(IssuedGrant{from, provider, service, ticket.counter, h});
    }
    return ticket;
}

BackendOutput Backend::on_msg_c2(RequesterId from, const MsgC2& msg, Millis now) {
    BackendOutput out;
    const auto session = sessions_.find(from);
    if (session == sessions_.end()) {
        out.error = BackendError::UnknownSession;
        return out;
    }
    const auto key = requester_key(from, session->second, msg.requester_cert);
    if (const auto* e = std::get_if<BackendError>(&key)) {
        out.error = *e;
        return out;
    }
    const auto& pk = std::get<PublicKey>(key);
    if (!pk.verify(signed_p2_request(msg.provider, msg.service, session->second.n2, msg.n3, msg.h), msg.sig)) {
        out.error = BackendError::BadSignature;
        return out;
    }
    sessions_.erase(session);
    requester_keys_.insert_or_assign(from, pk);

    if (const auto e = admit(from, msg.provider, msg.service, now, out)) {
        out.error = e;
        return out;
    }
    const auto ticket = issue_ticket(from, msg.provider, msg.service, msg.h);
    out.to_requester = Message{MsgD2{ticket, cfg_.identity.key.sign(signed_ticket(ticket, msg.n3))}};
    return out;
}

BackendOutput Backend::forward_authenticated(RequesterId from, ProviderId provider, ServiceId service, Millis now) {
    BackendOutput out;
    if (const auto e = admit(from, provider, service, now, out)) {
        out.error = e;
        return out;
    }
    issue_msg_d(from, provider, service, out);
    return out;
}

BackendOutput Backend::ticket_authenticated(RequesterId from, ProviderId provider, ServiceId service,
                                            const Digest& h, Millis now) {
    BackendOutput out;
    if (const auto e = admit(from, provider, service, now, out)) {
        out.error = e;
        return out;
    }
    out.ticket = issue_ticket(from, provider, service, h);
    return out;
}

// ---------------------------------------------------------------------------
// Provider

namespace {
constexpr std::uint32_t kStaleScan = 4;
}

Provider::Provider(ProviderConfig cfg)
    : cfg_(std::move(cfg)), key_(cfg_.key), ledger_(cfg_.budget_j), cache_(cfg_.delta_i) {
    if (cfg_.counter_lookahead == 0) {
        throw Error(Errc::ConfigError, "counter_lookahead must be positive");
    }
    if (cfg_.ca_key) {
        limiter_.emplace(cfg_.algorithm, cfg_.limiter, cfg_.catalog);
    }
}

void Provider::pay_verification() {
    ++handled_;
    ledger_.drain(cfg_.verify_cost_j);
    verify_j_ += cfg_.verify_cost_j;
}

ProviderVerdict Provider::serve(ServiceId service, std::uint32_t counter, std::optional<Digest> h) {
    const double energy = cfg_.catalog.at(service);
    ledger_.drain(energy);
    served_j_ += energy;
    ++serves_;
    return Serve{service, counter, h};
}

ProviderVerdict Provider::p1_handle(ByteView wire) {
    if (wire.size() != kMsgDWireSize) {
        pay_verification();
        return Reject{RejectReason::WrongLength};
    }
    return p1_handle(decode_msg_d(wire));
}

ProviderVerdict Provider::p1_handle(const MsgD& msg) {
    pay_verification();
    const std::uint32_t next = last_counter_ ? *last_counter_ + 1u : 0u;
    for (std::uint32_t i = next; i < next + cfg_.counter_lookahead && i <= 0xffffu; ++i) {
        const auto counter = static_cast<std::uint16_t>(i);
        if (mac_verify(key_, p1_mac_input(msg.service, cfg_.id, counter), msg.mac)) {
            if (!cfg_.catalog.contains(msg.service)) {
                return Reject{RejectReason::UnknownService};
            }
            last_counter_ = counter;
            return serve(msg.service, counter, std::nullopt);
        }
    }
    if (last_counter_) {
        const std::uint32_t last = *last_counter_;
        const std::uint32_t lowest = last >= kStaleScan ? last - kStaleScan + 1 : 0;
        for (std::uint32_t i = lowest; i <= last; ++i) {
            if (mac_verify(key_, p1_mac_input(msg.service, cfg_.id, static_cast<std::uint16_t>(i)), msg.mac)) {
                return Reject{RejectReason::StaleCounter};
            }
        }
    }
    return Reject{RejectReason::BadMac};
}

ProviderVerdict Provider::p2_handle(ByteView wire) {
    if (wire.size() != kMsgEWireSize) {
        pay_verification();
        return Reject{RejectReason::WrongLength};
    }
    return p2_handle(decode_msg_e(wire));
}

ProviderVerdict Provider::p2_handle(const MsgE& msg) {
    pay_verification();
    const auto h = dm_hash(msg.r);
    if (!mac_verify(key_, p2_mac_input(cfg_.id, msg.ticket.service, h, msg.ticket.counter), msg.ticket.mac)) {
        return Reject{RejectReason::BadMac};
    }
    if (!cfg_.catalog.contains(msg.ticket.service)) {
        return Reject{RejectReason::UnknownService};
    }
    switch (cache_.admit(msg.ticket.counter)) {
    case ReplayCache::Admission::Replayed: return Reject{RejectReason::Replayed};
    case ReplayCache::Admission::OutsideWindow: return Reject{RejectReason::OutsideWindow};
    case ReplayCache::Admission::Accept: break;
    }
    return serve(msg.ticket.service, msg.ticket.counter, h);
}

ProviderVerdict Provider::asym_handle(ByteView wire, Millis now) {
    pay_verification();
    if (!cfg_.ca_key || !limiter_) {
        return Reject{RejectReason::Malformed};
    }
    AsymRequest req;
    try {
        auto msg = decode(wire);
        if (!std::holds_alternative<AsymRequest>(msg)) {
            return Reject{RejectReason::Malformed};
        }
        req = std::get<AsymRequest>(std::move(msg));
    } catch (const Error&) {
        return Reject{RejectReason::Malformed};
    }
    if (!cert_verify(*cfg_.ca_key, req.cert)) {
        return Reject{RejectReason::BadCertificate};
    }
    if (req.provider != cfg_.id || !req.cert.key.verify(signed_asym_request(req.service, req.provider, req.counter),
                                                        req.sig)) {
        return Reject{RejectReason::BadSignature};
    }
    if (!cfg_.catalog.contains(req.service)) {
        return Reject{RejectReason::UnknownService};
    }
    const auto last = asym_counters_.find(req.cert.subject);
    if (last != asym_counters_.end() && req.counter <= last->second) {
        return Reject{RejectReason::StaleCounter};
    }
    asym_counters_[req.cert.subject] = req.counter;
    if (limiter_->check_and_update(RequesterId{req.cert.subject}, req.service, now) == Decision::Dropped) {
        return Reject{RejectReason::RateLimited};
    }
    return serve(req.service, req.counter, std::nullopt);
}

std::size_t asym_request_size(std::uint32_t padding) {
    AsymRequest probe;
    probe.padding = padding;
    return encode(probe).size();
}

std::uint32_t asym_padding_for(std::size_t total_bytes) {
    const auto base = asym_request_size(0);
    if (total_bytes < base) {
        throw Error(Errc::ConfigError, "asymmetric request cannot be smaller than " + std::to_string(base) + " bytes");
    }
    return static_cast<std::uint32_t>(total_bytes - base);
}

AsymRequest make_asym_request(const Identity& requester, ServiceId service, ProviderId provider,
                              std::uint32_t counter, std::size_t total_bytes) {
    AsymRequest req;
    req.service = service;
    req.provider = provider;
    req.counter = counter;
    req.cert = requester.cert;
    req.sig = requester.key.sign(signed_asym_request(service, provider, counter));
    req.padding = asym_padding_for(total_bytes);
    return req;
}

} // namespace drainguard
