#pragma once

#include "drainguard/protocol.hpp"

#include <memory>
#include <vector>

namespace drainguard::testing {

/// CA, Backend, one Provider and a few enrolled Requesters on the table
/// deployment. Everything is derived from one seed.
struct Rig {
    explicit Rig(std::uint64_t seed = 1, Algorithm algorithm = Algorithm::LeakyBucket, std::uint32_t requesters = 3,
                 Protocol asym_provider = Protocol::Proxy)
        : rng(seed, 99), ca(SigningKey::from_seed(Rng(seed, 0).bytes<32>())) {
        deployment = rtls_deployment();
        limiter = derive_limiter_params(deployment, ToleratedBurst{}, Millis{60'000});
        Rng keys(seed, 1);
        backend_seed = keys.bytes<32>();
        rebuild(keys.bytes<16>(), backend_seed, algorithm, asym_provider);
        for (std::uint32_t i = 0; i < requesters; ++i) {
            contexts.push_back(
                RequesterContext{RequesterId{i}, ca.enroll(i, keys.bytes<32>()), ca.public_key(), std::nullopt});
        }
    }

    /// Replaces the Backend and Provider with fresh ones using these secrets.
    void rebuild(const Block& provider_key, const Seed& backend_key_seed, Algorithm algorithm = Algorithm::LeakyBucket,
                 Protocol asym_provider = Protocol::Proxy) {
        k_pb = provider_key;
        backend_seed = backend_key_seed;
        grants.clear();
        BackendConfig bc{ca.enroll(kBackendSubject, backend_seed), ca.public_key(), algorithm, limiter,
                         deployment.services, {}};
        bc.provider_keys.emplace(provider_id, SymKey(k_pb));
        backend = std::make_unique<Backend>(std::move(bc));
        backend->set_grant_observer([this](const IssuedGrant& g) { grants.push_back(g); });

        ProviderConfig pc;
        pc.id = provider_id;
        pc.key = k_pb;
        pc.catalog = deployment.services;
        pc.budget_j = usable_service_energy(deployment);
        pc.verify_cost_j = 1e-6;
        if (asym_provider == Protocol::Asymmetric) {
            pc.ca_key = ca.public_key();
            pc.algorithm = algorithm;
            pc.limiter = limiter;
        }
        provider = std::make_unique<Provider>(pc);
    }

    /// Full proxy run for requester `who`; returns the Backend's final output.
    BackendOutput run_p1(std::uint32_t who, Millis now) {
        auto& ctx = contexts.at(who);
        RequesterSession s(Protocol::Proxy, service, provider_id);
        const auto a = s.start(ctx, rng);
        const auto b = backend->on_msg_a(a, rng);
        auto c = s.on_msg_b(ctx, std::get<MsgB>(*b.to_requester), rng);
        return backend->on_msg_c(ctx.id, std::get<MsgC>(std::get<Message>(c)), now);
    }

    struct P2Run {
        BackendOutput backend;
        std::optional<MsgE> redeem;
    };

    P2Run run_p2(std::uint32_t who, Millis now) {
        auto& ctx = contexts.at(who);
        RequesterSession s(Protocol::TicketIssuer, service, provider_id);
        const auto a = s.start(ctx, rng);
        const auto b = backend->on_msg_a(a, rng);
        auto c = s.on_msg_b(ctx, std::get<MsgB>(*b.to_requester), rng);
        P2Run run{backend->on_msg_c2(ctx.id, std::get<MsgC2>(std::get<Message>(c)), now), std::nullopt};
        if (run.backend.to_requester) {
            if (const auto* d2 = std::get_if<MsgD2>(&*run.backend.to_requester)) {
                auto e = s.on_msg_d2(ctx, *d2);
                run.redeem = std::get<MsgE>(std::get<Message>(e));
            }
        }
        return run;
    }

    Rng rng;
    CertificateAuthority ca;
    DeploymentConfig deployment;
    LimiterParams limiter;
    Block k_pb{};
    Seed backend_seed{};
    ProviderId provider_id{7};
    ServiceId service{1};
    std::unique_ptr<Backend> backend;
    std::unique_ptr<Provider> provider;
    std::vector<RequesterContext> contexts;
    std::vector<IssuedGrant> grants;
};

} // namespace drainguard::testing
