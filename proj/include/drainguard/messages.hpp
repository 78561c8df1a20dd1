#pragma once

#include "drainguard/crypto.hpp"
#include "drainguard/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

namespace drainguard {

// Protocol 1 (backend as a proxy):
//   (a) R -> B  ID_R, N1, F
//   (b) B -> R  N2, F, C_B*, S_B(N1, N2)
//   (c) R -> B  ID_S, ID_P, S_R(ID_S, ID_P, N2), C_R*
//   (d) B -> P  ID_S, M_KPB(ID_S, ID_P, i)
// Protocol 2 (backend as ticket issuer), (a) and (b) as above:
//   (c) R -> B  ID_P, ID_S, N3, h, C_R*, S_R(ID_P, ID_S, N2, N3, h)
//   (d) B -> R  T, S_B(T, N3)            T = ID_S, i, M_KPB(ID_P, ID_S, h, i)
//   (e) R -> P  r, T

struct MsgA {
    RequesterId requester{};
    Nonce n1{};
    bool want_cert = false;
    friend bool operator==(const MsgA&, const MsgA&) = default;
};

struct MsgB {
    Nonce n2{};
    bool want_cert = false;
    std::optional<Certificate> backend_cert;
    Signature sig{};
    friend bool operator==(const MsgB&, const MsgB&) = default;
};

struct MsgC {
    ServiceId service{};
    ProviderId provider{};
    Signature sig{};
    std::optional<Certificate> requester_cert;
    friend bool operator==(const MsgC&, const MsgC&) = default;
};

/// Protocol 1 request to the Provider. The counter i is MAC'd but not sent.
struct MsgD {
    ServiceId service{};
    Mac8 mac{};
    friend bool operator==(const MsgD&, const MsgD&) = default;
};

struct MsgC2 {
    ProviderId provider{};
    ServiceId service{};
    Nonce n3{};
    Digest h{};
    std::optional<Certificate> requester_cert;
    Signature sig{};
    friend bool operator==(const MsgC2&, const MsgC2&) = default;
};

struct Ticket {
    ServiceId service{};
    std::uint16_t counter = 0;
    Mac8 mac{};
    friend bool operator==(const Ticket&, const Ticket&) = default;
};

struct MsgD2 {
    Ticket ticket;
    Signature sig{};
    friend bool operator==(const MsgD2&, const MsgD2&) = default;
};

/// Protocol 2 request to the Provider.
struct MsgE {
    std::array<std::uint8_t, 4> r{};
    Ticket ticket;
    friend bool operator==(const MsgE&, const MsgE&) = default;
};

/// Backend -> Requester notice that a request was rate limited.
struct MsgDenied {
    ServiceId service{};
    friend bool operator==(const MsgDenied&, const MsgDenied&) = default;
};

/// Baseline: the Requester asks the Provider directly with its certificate and
/// a signature over (ID_S, ID_P, counter). `padding` models the extra bytes of
/// a full X.509 certificate chain so the wire size matches a configured value.
struct AsymRequest {
    ServiceId service{};
    ProviderId provider{};
    std::uint32_t counter = 0;
    Certificate cert;
    Signature sig{};
    std::uint32_t padding = 0;
    friend bool operator==(const AsymRequest&, const AsymRequest&) = default;
};

using Message = std::variant<MsgA, MsgB, MsgC, MsgD, MsgC2, MsgD2, MsgE, MsgDenied, AsymRequest>;

std::string_view message_name(const Message& m);

inline constexpr std::size_t kMsgDWireSize = 9;
inline constexpr std::size_t kMsgEWireSize = 15;

// Provider-bound requests, bit exact:
//   MsgD = ID_S(1) | MAC(8)
//   MsgE = r(4) | ID_S(1) | i(2, big endian) | MAC(8)
Bytes encode_request(const MsgD& msg);
Bytes encode_request(const MsgE& msg);

/// Dispatches on length: 9 bytes -> MsgD, 15 bytes -> MsgE. Throws
/// Errc::WrongLength otherwise.
std::variant<MsgD, MsgE> decode_request(ByteView bytes);
MsgD decode_msg_d(ByteView bytes);
MsgE decode_msg_e(ByteView bytes);

// Every other message uses a self-describing encoding:
//   type(1) | body_len(2) | { field_tag(1) | field_len(2) | value }*
// with big-endian integers. Optional certificates are omitted fields.
// encode() also handles MsgD and MsgE, emitting the bit-exact request form.
Bytes encode(const Message& msg);

/// Decodes the self-describing form. Throws Errc::MalformedMessage.
Message decode(ByteView bytes);

// Byte strings covered by signatures and MACs. Each starts with a one-byte
// domain label; MAC inputs also carry their fixed length so CBC-MAC only ever
// sees one length per label.
Bytes signed_nonces(const Nonce& n1, const Nonce& n2);
Bytes signed_p1_request(ServiceId service, ProviderId provider, const Nonce& n2);
Bytes signed_p2_request(ProviderId provider, ServiceId service, const Nonce& n2, const Nonce& n3, const Digest& h);
Bytes signed_ticket(const Ticket& ticket, const Nonce& n3);
Bytes signed_asym_request(ServiceId service, ProviderId provider, std::uint32_t counter);
Bytes p1_mac_input(ServiceId service, ProviderId provider, std::uint16_t counter);
Bytes p2_mac_input(ProviderId provider, ServiceId service, const Digest& h, std::uint16_t counter);

} // namespace drainguard
