#pragma once

#include "drainguard/messages.hpp"

#include <random>

namespace drainguard::testing {

/// Arbitrary (not necessarily valid) protocol messages for codec tests.
class MessageGen {
public:
    explicit MessageGen(std::uint64_t seed) : rng_(seed), ca_(SigningKey::from_seed(rng_.bytes<32>())) {
        for (std::uint32_t i = 0; i < 4; ++i) {
            certs_.push_back(ca_.enroll(i, rng_.bytes<32>()).cert);
        }
    }

    MsgD msg_d() { return MsgD{service(), rng_.bytes<8>()}; }

    MsgE msg_e() { return MsgE{rng_.bytes<4>(), ticket()}; }

    Ticket ticket() {
        return Ticket{service(), static_cast<std::uint16_t>(rng_.engine()()), rng_.bytes<8>()};
    }

    Message any() {
        switch (rng_.engine()() % 9) {
        case 0: return MsgA{RequesterId{static_cast<std::uint32_t>(rng_.engine()())}, rng_.nonce(), coin()};
        case 1: return MsgB{rng_.nonce(), coin(), maybe_cert(), rng_.bytes<64>()};
        case 2: return MsgC{service(), provider(), rng_.bytes<64>(), maybe_cert()};
        case 3: return msg_d();
        case 4: return MsgC2{provider(), service(), rng_.nonce(), rng_.bytes<16>(), maybe_cert(), rng_.bytes<64>()};
        case 5: return MsgD2{ticket(), rng_.bytes<64>()};
        case 6: return msg_e();
        case 7: return MsgDenied{service()};
        default: {
            AsymRequest r;
            r.service = service();
            r.provider = provider();
            r.counter = static_cast<std::uint32_t>(rng_.engine()());
            r.cert = certs_[rng_.engine()() % certs_.size()];
            r.sig = rng_.bytes<64>();
            r.padding = static_cast<std::uint32_t>(rng_.engine()() % 400);
            return r;
        }
        }
    }

    Rng& rng() { return rng_; }

private:
    bool coin() { return (rng_.engine()() & 1) != 0; }
    ServiceId service() { return ServiceId{static_cast<std::uint8_t>(rng_.engine()())}; }
    ProviderId provider() { return ProviderId{static_cast<std::uint32_t>(rng_.engine()())}; }
    std::optional<Certificate> maybe_cert() {
        if (coin()) {
            return certs_[rng_.engine()() % certs_.size()];
        }
        return std::nullopt;
    }

    Rng rng_;
    CertificateAuthority ca_;
    std::vector<Certificate> certs_;
};

} // namespace drainguard::testing
