#include "drainguard/simnet.hpp"

#include "drainguard/config_file.hpp"
#include "drainguard/error.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <queue>
#include <random>

namespace drainguard {

Millis transmit_latency(const LinkParams& link, std::size_t size_bytes) {
    if (!(link.bytes_per_s > 0.0)) {
        throw Error(Errc::ConfigError, "link data rate must be positive");
    }
    const double ms = static_cast<double>(size_bytes) / link.bytes_per_s * 1000.0;
    // Guard against 26.6 s turning into 26601 ms through representation error.
    const auto whole = static_cast<std::int64_t>(std::ceil(ms - 1e-9));
    return Millis{whole} + link.base_delay;
}

double VerificationCosts::for_protocol(Protocol p) const {
    switch (p) {
    case Protocol::Proxy: return proxy_j;
    case Protocol::TicketIssuer: return ticket_j;
    case Protocol::Asymmetric: return asymmetric_j;
    }
    return 0.0;
}

std::string_view to_string(Fidelity f) { return f == Fidelity::Protocol ? "protocol" : "preauth"; }

Fidelity parse_fidelity(std::string_view text) {
    if (text == "protocol" || text == "full") {
        return Fidelity::Protocol;
    }
    if (text == "preauth" || text == "limiter") {
        return Fidelity::PreAuthenticated;
    }
    throw Error(Errc::ConfigError, "unknown fidelity '" + std::string(text) + "'");
}

LimiterParams SimConfig::limiter() const { return derive_limiter_params(deployment, burst, tick); }

std::size_t SimConfig::provider_request_bytes() const {
    switch (protocol) {
    case Protocol::Proxy: return kMsgDWireSize;
    case Protocol::TicketIssuer: return kMsgEWireSize;
    case Protocol::Asymmetric: return asym_request_bytes;
    }
    return 0;
}

SimConfig sim_config_from(const KeyValueConfig& kv) {
    SimConfig cfg;
    cfg.deployment = deployment_from(kv);
    cfg.tick = from_seconds(kv.get_double("limiter.tick_s", 60.0));
    if (cfg.tick <= Millis::zero()) {
        throw Error(Errc::ConfigError, "limiter.tick_s must be positive");
    }
    const auto burst_requests = kv.get_int("burst.requests", cfg.burst.requests);
    if (burst_requests < 1) {
        throw Error(Errc::ConfigError, "burst.requests must be >= 1");
    }
    cfg.burst.requests = static_cast<std::uint32_t>(burst_requests);
    cfg.burst.window = from_seconds(kv.get_double("burst.window_s", to_seconds(cfg.burst.window)));
    cfg.burst.service = ServiceId{static_cast<std::uint8_t>(
        kv.get_int("burst.service", to_underlying(cfg.deployment.default_service())))};
    cfg.deployment.service_energy(cfg.burst.service);

    cfg.algorithm = parse_algorithm(kv.get_string("limiter", "lb"));
    cfg.protocol = parse_protocol(kv.get_string("protocol", "p1"));
    cfg.fidelity = parse_fidelity(kv.get_string("fidelity", "protocol"));

    cfg.network.constrained.bytes_per_s = kv.get_double("link.constrained_bytes_per_s", 20.0);
    cfg.network.constrained.base_delay = Millis{kv.get_int("link.constrained_delay_ms", 0)};
    cfg.network.unconstrained.bytes_per_s = kv.get_double("link.unconstrained_bytes_per_s", 1.25e6);
    cfg.network.unconstrained.base_delay = Millis{kv.get_int("link.unconstrained_delay_ms", 5)};

    cfg.costs.proxy_j = kv.get_double("cost.p1_verify_j", cfg.costs.proxy_j);
    cfg.costs.ticket_j = kv.get_double("cost.p2_verify_j", cfg.costs.ticket_j);
    cfg.costs.asymmetric_j = kv.get_double("cost.asym_verify_j", cfg.costs.asymmetric_j);
    cfg.asym_request_bytes = static_cast<std::size_t>(kv.get_int("asym.request_bytes", 532));
    asym_padding_for(cfg.asym_request_bytes);

    const auto delta = kv.get_int("delta_i", 16);
    const auto lookahead = kv.get_int("p1.counter_lookahead", 1);
    if (delta < 1 || delta > 0xffff || lookahead < 1 || lookahead > 0xffff) {
        throw Error(Errc::ConfigError, "delta_i and p1.counter_lookahead must be in 1..65535");
    }
    cfg.delta_i = static_cast<std::uint32_t>(delta);
    cfg.counter_lookahead = static_cast<std::uint32_t>(lookahead);
    cfg.provider_id = ProviderId{static_cast<std::uint32_t>(kv.get_int("provider_id", 1))};
    cfg.attacker_observes = kv.get_bool("attacker.observe", true);
    if (cfg.fidelity == Fidelity::PreAuthenticated && cfg.protocol == Protocol::Asymmetric) {
        throw Error(Errc::ConfigError, "the asymmetric baseline needs fidelity = protocol");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Report

void SimulationReport::write_csv(std::ostream& out) const {
    out << "day,requester_id,requested,served,dropped,failed,counter_j\n";
    const auto old_precision = out.precision(17);
    for (const auto& r : rows) {
        out << r.day << ',' << to_underlying(r.requester) << ',' << r.requested << ',' << r.served << ','
            << r.dropped << ',' << r.failed << ',';
        if (r.counter_j) {
            out << *r.counter_j;
        }
        out << '\n';
    }
    out.precision(old_precision);
}

void SimulationReport::write_summary(std::ostream& out) const {
    nlohmann::ordered_json j;
    j["provider_serves"] = provider_serves;
    j["provider_handled"] = provider_handled;
    j["served_energy_j"] = served_energy_j;
    j["verification_energy_j"] = verification_energy_j;
    j["drained_j"] = drained_j;
    j["budget_j"] = budget_j;
    j["events"] = events;
    j["tallies"] = tallies;
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

constexpr std::uint32_t kGarbageAddress = 0xffffffffu;

struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
    }
};

struct RequesterNode {
    RequesterContext ctx;
    Rng rng;
    std::unique_ptr<RequesterSession> session;
    std::uint32_t asym_counter = 0;
};

struct BurstState {
    ChainedBursts spec;
    std::uint64_t issued = 0;
    Millis start{0};
};

} // namespace

struct Simulation::Impl {
    SimConfig cfg;
    std::uint64_t seed;
    LimiterParams limiter;
    Millis now{0};
    std::uint64_t sequence = 0;
    std::uint64_t events = 0;
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue;

    CertificateAuthority ca;
    std::vector<RequesterNode> requesters;
    std::unique_ptr<Backend> backend;
    Rng backend_rng;
    std::unique_ptr<Provider> provider;
    AttackerNode attacker;
    Rng attacker_rng;
    Rng traffic_rng;

    std::map<std::pair<Address, Address>, Millis> link_tail;
    std::map<std::pair<std::uint32_t, std::uint32_t>, DayRow> rows;
    std::map<std::string, std::uint64_t> tallies;
    std::vector<LedgerPoint> ledger_trace;
    std::vector<IssuedGrant> grants;

    std::vector<BurstState> bursts;
    std::optional<CompromisedFlood> flood;
    std::optional<GarbageInjection> garbage;
    Millis attack_end{0};
    std::vector<RequesterId> sampled;
    Millis sample_end{0};

    Impl(SimConfig c, std::uint64_t s)
        : cfg(std::move(c)), seed(s), limiter(cfg.limiter()),
          ca(SigningKey::from_seed(Rng(s, 0).bytes<32>())), backend_rng(s, 1), attacker_rng(s, 2),
          traffic_rng(s, 3) {
        cfg.deployment.validate();
        if (cfg.fidelity == Fidelity::PreAuthenticated && cfg.protocol == Protocol::Asymmetric) {
            throw Error(Errc::ConfigError, "the asymmetric baseline needs fidelity = protocol");
        }
        Rng key_rng(s, 4);
        const auto k_pb = key_rng.bytes<16>();

        BackendConfig bc{ca.enroll(kBackendSubject, key_rng.bytes<32>()),
                         ca.public_key(),
                         cfg.algorithm,
                         limiter,
                         cfg.deployment.services,
                         {}};
        bc.provider_keys.emplace(cfg.provider_id, SymKey(k_pb));
        backend = std::make_unique<Backend>(std::move(bc));
        backend->set_grant_observer([this](const IssuedGrant& g) { grants.push_back(g); });

        ProviderConfig pc;
        pc.id = cfg.provider_id;
        pc.key = k_pb;
        pc.catalog = cfg.deployment.services;
        pc.budget_j = usable_service_energy(cfg.deployment);
        pc.verify_cost_j = cfg.costs.for_protocol(cfg.protocol);
        pc.delta_i = cfg.delta_i;
        pc.counter_lookahead = cfg.counter_lookahead;
        if (cfg.protocol == Protocol::Asymmetric) {
            pc.ca_key = ca.public_key();
            pc.algorithm = cfg.algorithm;
            pc.limiter = limiter;
        }
        provider = std::make_unique<Provider>(std::move(pc));

        requesters.reserve(cfg.deployment.requesters);
        for (std::uint32_t i = 0; i < cfg.deployment.requesters; ++i) {
            RequesterNode node{RequesterContext{RequesterId{i}, ca.enroll(i, key_rng.bytes<32>()), ca.public_key(),
                                                std::nullopt},
                               Rng(s, 100 + i),
                               nullptr};
            requesters.push_back(std::move(node));
        }
    }

    std::uint32_t day_of(Millis t) const { return static_cast<std::uint32_t>(t / kMillisPerDay); }

    DayRow& row(RequesterId id) { return row_at(day_of(now), id); }

    DayRow& row_at(std::uint32_t day, RequesterId id) {
        auto [it, inserted] = rows.try_emplace({day, to_underlying(id)});
        if (inserted) {
            it->second.day = day;
            it->second.requester = id;
        }
        return it->second;
    }

    void tally(std::string_view scope, std::string_view what) {
        std::string key(scope);
        key += '.';
        key += what;
        ++tallies[key];
    }

    void schedule(Millis at, std::variant<Deliver, Timer> action) {
        queue.push(SimEvent{at, sequence++, std::move(action)});
    }

    void send(Address from, Address to, RequesterId claimed, Bytes payload) {
        const auto& link = to.kind == NodeKind::Provider || from.kind == NodeKind::Provider
                               ? cfg.network.constrained
                               : cfg.network.unconstrained;
        auto arrival = now + transmit_latency(link, payload.size());
        auto& tail = link_tail[{from, to}];
        arrival = std::max(arrival, tail);
        tail = arrival;
        if (cfg.attacker_observes && from.kind != NodeKind::Attacker &&
            attacker.observations_.size() < cfg.observation_limit) {
            attacker.observations_.push_back(ObservedMessage{now, from, to, payload});
        }
        schedule(arrival, Deliver{from, to, claimed, std::move(payload)});
    }

    static Address requester_address(RequesterId id) { return {NodeKind::Requester, to_underlying(id)}; }
    static Address backend_address() { return {NodeKind::Backend, 0}; }
    static Address provider_address() { return {NodeKind::Provider, 0}; }

    // -- requests -----------------------------------------------------------

    void record_backend(RequesterId who, const BackendOutput& out) {
        if (out.decision) {
            auto& r = row(who);
            (*out.decision == Decision::Served ? r.served : r.dropped)++;
        }
        if (out.error) {
            tally("backend", to_string(*out.error));
            if (*out.error != BackendError::RateLimited) {
                row(who).failed++;
            }
        }
    }

    /// `node_addr` is where replies go: the requester itself, or the attacker
    /// address standing in for a stolen identity.
    void start_request(RequesterContext& ctx, Rng& rng, std::unique_ptr<RequesterSession>& session,
                       std::uint32_t& asym_counter, Address node_addr) {
        const auto id = ctx.id;
        const auto service = cfg.deployment.default_service();
        row(id).requested++;

        if (cfg.protocol == Protocol::Asymmetric) {
            const auto req = make_asym_request(ctx.identity, service, cfg.provider_id, ++asym_counter,
                                               cfg.asym_request_bytes);
            send(node_addr, provider_address(), id, encode(req));
            return;
        }
        if (cfg.fidelity == Fidelity::PreAuthenticated) {
            if (cfg.protocol == Protocol::Proxy) {
                const auto out = backend->forward_authenticated(id, cfg.provider_id, service, now);
                record_backend(id, out);
                if (out.to_provider) {
                    send(backend_address(), provider_address(), id, encode_request(*out.to_provider));
                }
            } else {
                const auto commitment = new_commitment(rng);
                const auto out = backend->ticket_authenticated(id, cfg.provider_id, service, commitment.h, now);
                record_backend(id, out);
                if (out.ticket) {
                    send(node_addr, provider_address(), id, encode_request(MsgE{commitment.r, *out.ticket}));
                }
            }
            return;
        }
        if (session && !session->done() && !session->aborted()) {
            tally("requester", "Superseded");
            row(id).failed++;
        }
        session = std::make_unique<RequesterSession>(cfg.protocol, service, cfg.provider_id);
        send(node_addr, backend_address(), id, encode(session->start(ctx, rng)));
    }

    void requester_receive(RequesterContext& ctx, Rng& rng, std::unique_ptr<RequesterSession>& session,
                           Address self, const Message& msg) {
        if (std::holds_alternative<MsgDenied>(msg)) {
            if (session && !session->done()) {
                session.reset();
            }
            return;
        }
        if (!session) {
            tally("requester", to_string(RequesterError::UnexpectedMessage));
            return;
        }
        RequesterSession::Step step = RequesterError::UnexpectedMessage;
        if (const auto* b = std::get_if<MsgB>(&msg)) {
            step = session->on_msg_b(ctx, *b, rng);
        } else if (const auto* d2 = std::get_if<MsgD2>(&msg)) {
            step = session->on_msg_d2(ctx, *d2);
        }
        if (const auto* e = std::get_if<RequesterError>(&step)) {
            tally("requester", to_string(*e));
            row(ctx.id).failed++;
            return;
        }
        const auto& out = std::get<Message>(step);
        if (std::holds_alternative<MsgE>(out)) {
            send(self, provider_address(), ctx.id, encode(out));
        } else {
            send(self, backend_address(), ctx.id, encode(out));
        }
    }

    // -- delivery -----------------------------------------------------------

    void deliver(Deliver& d) {
        switch (d.to.kind) {
        case NodeKind::Backend: return backend_receive(d);
        case NodeKind::Provider: return provider_receive(d);
        case NodeKind::Requester: {
            if (d.to.index >= requesters.size()) {
                return;
            }
            auto& node = requesters[d.to.index];
            Message msg;
            try {
                msg = decode(d.payload);
            } catch (const Error&) {
                tally("requester", "Malformed");
                return;
            }
            return requester_receive(node.ctx, node.rng, node.session, d.to, msg);
        }
        case NodeKind::Attacker: {
            const RequesterId id{d.to.index};
            const auto stolen = attacker.stolen_.find(id);
            if (stolen == attacker.stolen_.end()) {
                return;
            }
            Message msg;
            try {
                msg = decode(d.payload);
            } catch (const Error&) {
                return;
            }
            return requester_receive(stolen->second, attacker_rng, attacker.sessions_[id], d.to, msg);
        }
        }
    }

    void backend_receive(const Deliver& d) {
        Message msg;
        try {
            msg = decode(d.payload);
        } catch (const Error&) {
            tally("backend", "Malformed");
            return;
        }
        BackendOutput out;
        if (const auto* a = std::get_if<MsgA>(&msg)) {
            out = backend->on_msg_a(*a, backend_rng);
        } else if (const auto* c = std::get_if<MsgC>(&msg); c && cfg.protocol == Protocol::Proxy) {
            out = backend->on_msg_c(d.claimed, *c, now);
        } else if (const auto* c2 = std::get_if<MsgC2>(&msg); c2 && cfg.protocol == Protocol::TicketIssuer) {
            out = backend->on_msg_c2(d.claimed, *c2, now);
        } else {
            tally("backend", "UnexpectedMessage");
            return;
        }
        record_backend(d.claimed, out);
        if (out.to_requester) {
            send(backend_address(), d.from, d.claimed, encode(*out.to_requester));
        }
        if (out.to_provider) {
            send(backend_address(), provider_address(), d.claimed, encode_request(*out.to_provider));
        }
    }

    void provider_receive(const Deliver& d) {
        ProviderVerdict verdict = Reject{RejectReason::Malformed};
        switch (cfg.protocol) {
        case Protocol::Proxy: verdict = provider->p1_handle(d.payload); break;
        case Protocol::TicketIssuer: verdict = provider->p2_handle(d.payload); break;
        case Protocol::Asymmetric: verdict = provider->asym_handle(d.payload, now); break;
        }
        if (std::holds_alternative<Serve>(verdict)) {
            ++tallies["provider.Serve"];
        } else {
            const auto reason = std::get<Reject>(verdict).reason;
            tally("provider", to_string(reason));
            if (cfg.protocol == Protocol::Asymmetric && d.from.index != kGarbageAddress) {
                auto& r = row(d.claimed);
                (reason == RejectReason::RateLimited ? r.dropped : r.failed)++;
            }
        }
        if (cfg.protocol == Protocol::Asymmetric && std::holds_alternative<Serve>(verdict)) {
            row(d.claimed).served++;
        }
    }

    // -- timers -------------------------------------------------------------

    void fire(const Timer& t) {
        switch (t.kind) {
        case TimerKind::BenignRequest: {
            auto& node = requesters.at(t.node.index);
            start_request(node.ctx, node.rng, node.session, node.asym_counter, t.node);
            break;
        }
        case TimerKind::BurstRequest: {
            auto& b = bursts.at(t.arg);
            auto& node = requesters.at(to_underlying(b.spec.requester));
            start_request(node.ctx, node.rng, node.session, node.asym_counter, t.node);
            ++b.issued;
            const auto next = b.start + Millis{static_cast<std::int64_t>(
                                            b.issued * static_cast<std::uint64_t>(b.spec.window.count()) /
                                            b.spec.requests)};
            if (next < attack_end) {
                schedule(next, Timer{t.node, TimerKind::BurstRequest, t.arg});
            }
            break;
        }
        case TimerKind::FloodRequest: {
            const RequesterId id{t.arg};
            auto& ctx = attacker.stolen_.at(id);
            start_request(ctx, attacker_rng, attacker.sessions_[id], attacker.next_asym_counter_, t.node);
            const auto next = now + from_days(1.0 / flood->requests_per_day);
            if (next < attack_end) {
                schedule(next, t);
            }
            break;
        }
        case TimerKind::Garbage: {
            Bytes junk(cfg.provider_request_bytes());
            attacker_rng.fill(junk);
            send(t.node, provider_address(), RequesterId{kGarbageAddress}, std::move(junk));
            const auto next = now + from_seconds(1.0 / garbage->per_second);
            if (next < attack_end) {
                schedule(next, t);
            }
            break;
        }
        case TimerKind::DailySample: {
            const std::uint32_t day = t.arg;
            ledger_trace.push_back(LedgerPoint{day, provider->ledger().drained()});
            for (const auto id : sampled) {
                if (const auto level = backend_or_provider_level(id)) {
                    row_at(day, id).counter_j = *level;
                }
            }
            const Millis next = Millis{static_cast<std::int64_t>(day + 2) * kMillisPerDay.count() - 1};
            if (next < sample_end) {
                schedule(next, Timer{t.node, TimerKind::DailySample, day + 1});
            }
            break;
        }
        }
    }

    std::optional<double> backend_or_provider_level(RequesterId id) const {
        if (const auto* own = provider->limiter()) {
            return own->level_at(id, now);
        }
        return backend->limiter().level_at(id, now);
    }

    SimulationReport report() const {
        SimulationReport r;
        r.rows.reserve(rows.size());
        for (const auto& [key, row] : rows) {
            r.rows.push_back(row);
        }
        r.ledger_trace = ledger_trace;
        r.tallies = tallies;
        r.provider_serves = provider->serves();
        r.provider_handled = provider->handled();
        r.served_energy_j = provider->served_energy();
        r.verification_energy_j = provider->verification_energy();
        r.drained_j = provider->ledger().drained();
        r.budget_j = provider->ledger().budget();
        r.events = events;
        return r;
    }
};

Simulation::Simulation(SimConfig cfg, std::uint64_t seed) : impl_(std::make_unique<Impl>(std::move(cfg), seed)) {}
Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

void Simulation::spawn_benign_traffic(const BenignProfile& profile, double horizon_days) {
    if (!(profile.probability_per_day >= 0.0 && profile.probability_per_day <= 1.0)) {
        throw Error(Errc::ConfigError, "request probability must be in [0, 1]");
    }
    auto& m = *impl_;
    std::bernoulli_distribution occurs(profile.probability_per_day);
    std::uniform_int_distribution<std::int64_t> offset(0, kMillisPerDay.count() - 1);
    const auto days = static_cast<std::uint32_t>(std::ceil(horizon_days));
    for (std::uint32_t i = 0; i < m.requesters.size(); ++i) {
        for (std::uint32_t day = 0; day < days; ++day) {
            if (!occurs(m.traffic_rng.engine())) {
                continue;
            }
            const Millis at = Millis{static_cast<std::int64_t>(day) * kMillisPerDay.count() +
                                     offset(m.traffic_rng.engine())};
            if (at >= m.now && at < from_days(horizon_days)) {
                m.schedule(at, Timer{Address{NodeKind::Requester, i}, TimerKind::BenignRequest, 0});
            }
        }
    }
}

void Simulation::spawn_attack(const AttackSpec& attack, double horizon_days) {
    auto& m = *impl_;
    m.attack_end = std::max(m.attack_end, from_days(horizon_days));
    if (const auto* b = std::get_if<ChainedBursts>(&attack)) {
        if (b->requests < 1 || b->window <= Millis::zero()) {
            throw Error(Errc::ConfigError, "chained bursts need requests >= 1 and window > 0");
        }
        if (to_underlying(b->requester) >= m.requesters.size()) {
            throw Error(Errc::UnknownRequester, std::to_string(to_underlying(b->requester)));
        }
        const auto start = from_days(b->start_day);
        m.bursts.push_back(BurstState{*b, 0, start});
        if (start < m.attack_end) {
            m.schedule(start, Timer{Impl::requester_address(b->requester), TimerKind::BurstRequest,
                                    static_cast<std::uint32_t>(m.bursts.size() - 1)});
        }
    } else if (const auto* f = std::get_if<CompromisedFlood>(&attack)) {
        if (!(f->requests_per_day > 0.0)) {
            throw Error(Errc::ConfigError, "flood rate must be positive");
        }
        for (const auto id : f->requesters) {
            if (to_underlying(id) >= m.requesters.size()) {
                throw Error(Errc::UnknownRequester, std::to_string(to_underlying(id)));
            }
        }
        m.flood = *f;
        const auto start = from_days(f->start_day);
        for (const auto id : f->requesters) {
            auto stolen = m.requesters[to_underlying(id)].ctx;
            stolen.backend_cert.reset();
            m.attacker.stolen_.insert_or_assign(id, std::move(stolen));
            if (start < m.attack_end) {
                m.schedule(start, Timer{Address{NodeKind::Attacker, to_underlying(id)}, TimerKind::FloodRequest,
                                        to_underlying(id)});
            }
        }
    } else {
        const auto& g = std::get<GarbageInjection>(attack);
        if (!(g.per_second > 0.0)) {
            throw Error(Errc::ConfigError, "injection rate must be positive");
        }
        m.garbage = g;
        const auto start = from_days(g.start_day);
        if (start < m.attack_end) {
            m.schedule(start, Timer{Address{NodeKind::Attacker, kGarbageAddress}, TimerKind::Garbage, 0});
        }
    }
}

void Simulation::sample_daily(std::vector<RequesterId> requesters, double horizon_days) {
    auto& m = *impl_;
    m.sampled = std::move(requesters);
    m.sample_end = from_days(horizon_days);
    // Each sample is taken in the last millisecond of its day.
    if (kMillisPerDay <= m.sample_end) {
        m.schedule(kMillisPerDay - Millis{1}, Timer{Impl::backend_address(), TimerKind::DailySample, 0});
    }
}

SimulationReport Simulation::run_until(Millis t_end) {
    auto& m = *impl_;
    if (t_end < m.now) {
        throw Error(Errc::ClockWentBackwards, "run_until before current time");
    }
    while (!m.queue.empty() && m.queue.top().time <= t_end) {
        // priority_queue::top is const; the event is consumed right after.
        SimEvent ev = std::move(const_cast<SimEvent&>(m.queue.top()));
        m.queue.pop();
        m.now = ev.time;
        ++m.events;
        if (auto* d = std::get_if<Deliver>(&ev.action)) {
            m.deliver(*d);
        } else {
            m.fire(std::get<Timer>(ev.action));
        }
    }
    m.now = t_end;
    return m.report();
}

Millis Simulation::now() const { return impl_->now; }
const SimConfig& Simulation::config() const { return impl_->cfg; }
const Backend& Simulation::backend() const { return *impl_->backend; }
const Provider& Simulation::provider() const { return *impl_->provider; }
const AttackerNode& Simulation::attacker() const { return impl_->attacker; }
std::uint32_t Simulation::requester_count() const { return static_cast<std::uint32_t>(impl_->requesters.size()); }
const std::vector<IssuedGrant>& Simulation::issued_grants() const { return impl_->grants; }

Simulation build_topology(const SimConfig& cfg, Protocol protocol, std::uint64_t seed) {
    SimConfig c = cfg;
    c.protocol = protocol;
    return Simulation(std::move(c), seed);
}

} // namespace drainguard
