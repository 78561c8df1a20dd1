#include "drainguard/messages.hpp"

#include "drainguard/error.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace drainguard {

namespace {

enum class MsgType : std::uint8_t {
    A = 0x0a,
    B = 0x0b,
    C = 0x0c,
    C2 = 0x2c,
    D2 = 0x2d,
    Denied = 0x0f,
    Asym = 0x3a,
};

// Field tags of the self-describing encoding.
enum Field : std::uint8_t {
    kRequester = 1,
    kNonce1 = 2,
    kNonce2 = 3,
    kNonce3 = 4,
    kFlag = 5,
    kCert = 6,
    kSig = 7,
    kService = 8,
    kProvider = 9,
    kHash = 10,
    kTicket = 11,
    kCounter = 12,
    kPadding = 13,
};

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

std::uint16_t get_u16(ByteView b) { return static_cast<std::uint16_t>(b[0] << 8 | b[1]); }

std::uint32_t get_u32(ByteView b) {
    return static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
           static_cast<std::uint32_t>(b[2]) << 8 | static_cast<std::uint32_t>(b[3]);
}

template <typename Range>
void append(Bytes& out, const Range& r) {
    out.insert(out.end(), std::begin(r), std::end(r));
}

class FieldWriter {
public:
    explicit FieldWriter(MsgType type) { out_.push_back(static_cast<std::uint8_t>(type)); out_.resize(3); }

    void raw(Field tag, ByteView value) {
        out_.push_back(tag);
        put_u16(out_, static_cast<std::uint16_t>(value.size()));
        append(out_, value);
    }
    void u8(Field tag, std::uint8_t v) { raw(tag, ByteView(&v, 1)); }
    void u32(Field tag, std::uint32_t v) {
        Bytes b;
        put_u32(b, v);
        raw(tag, b);
    }
    void cert(const std::optional<Certificate>& c) {
        if (c) {
            raw(kCert, c->encode());
        }
    }
    void zeros(Field tag, std::size_t n) {
        out_.push_back(tag);
        put_u16(out_, static_cast<std::uint16_t>(n));
        out_.resize(out_.size() + n, 0);
    }

    Bytes finish() {
        const auto body = out_.size() - 3;
        if (body > 0xffff) {
            throw Error(Errc::MalformedMessage, "message body too large");
        }
        out_[1] = static_cast<std::uint8_t>(body >> 8);
        out_[2] = static_cast<std::uint8_t>(body);
        return std::move(out_);
    }

private:
    Bytes out_;
};

class FieldReader {
public:
    FieldReader(ByteView body) {
        std::size_t pos = 0;
        while (pos < body.size()) {
            if (body.size() - pos < 3) {
                fail("truncated field header");
            }
            const auto tag = body[pos];
            const auto len = get_u16(body.subspan(pos + 1, 2));
            pos += 3;
            if (body.size() - pos < len) {
                fail("truncated field value");
            }
            if (!fields_.emplace(tag, body.subspan(pos, len)).second) {
                fail("duplicate field");
            }
            pos += len;
        }
    }

    bool has(Field tag) const { return fields_.contains(tag); }

    ByteView raw(Field tag, std::size_t expected_len) const {
        const auto it = fields_.find(tag);
        if (it == fields_.end()) {
            fail("missing field " + std::to_string(tag));
        }
        if (it->second.size() != expected_len) {
            fail("field " + std::to_string(tag) + " has wrong length");
        }
        return it->second;
    }

    template <std::size_t N>
    std::array<std::uint8_t, N> array(Field tag) const {
        const auto v = raw(tag, N);
        std::array<std::uint8_t, N> out;
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }

    std::uint8_t u8(Field tag) const { return raw(tag, 1)[0]; }
    std::uint32_t u32(Field tag) const { return get_u32(raw(tag, 4)); }

    bool flag(Field tag) const {
        const auto v = u8(tag);
        if (v > 1) {
            fail("flag out of range");
        }
        return v == 1;
    }

    std::optional<Certificate> cert() const {
        if (!has(kCert)) {
            return std::nullopt;
        }
        return Certificate::decode(raw(kCert, Certificate::kEncodedSize));
    }

    std::size_t length(Field tag) const {
        const auto it = fields_.find(tag);
        if (it == fields_.end()) {
            fail("missing field " + std::to_string(tag));
        }
        return it->second.size();
    }

    void expect_only(std::initializer_list<Field> allowed) const {
        for (const auto& [tag, value] : fields_) {
            if (std::find(allowed.begin(), allowed.end(), tag) == allowed.end()) {
                fail("unexpected field " + std::to_string(tag));
            }
        }
    }

    [[noreturn]] static void fail(const std::string& what) { throw Error(Errc::MalformedMessage, what); }

private:
    std::map<std::uint8_t, ByteView> fields_;
};

Bytes ticket_bytes(const Ticket& t) {
    Bytes out;
    out.push_back(to_underlying(t.service));
    put_u16(out, t.counter);
    append(out, t.mac);
    return out;
}

Ticket ticket_from(ByteView b) {
    Ticket t;
    t.service = ServiceId{b[0]};
    t.counter = get_u16(b.subspan(1, 2));
    std::copy_n(b.begin() + 3, t.mac.size(), t.mac.begin());
    return t;
}

constexpr std::size_t kTicketSize = 1 + 2 + 8;

struct Encoder {
    Bytes operator()(const MsgA& m) const {
        FieldWriter w(MsgType::A);
        w.u32(kRequester, to_underlying(m.requester));
        w.raw(kNonce1, m.n1);
        w.u8(kFlag, m.want_cert ? 1 : 0);
        return w.finish();
    }
    Bytes operator()(const MsgB& m) const {
        FieldWriter w(MsgType::B);
        w.raw(kNonce2, m.n2);
        w.u8(kFlag, m.want_cert ? 1 : 0);
        w.cert(m.backend_cert);
        w.raw(kSig, m.sig);
        return w.finish();
    }
    Bytes operator()(const MsgC& m) const {
        FieldWriter w(MsgType::C);
        w.u8(kService, to_underlying(m.service));
        w.u32(kProvider, to_underlying(m.provider));
        w.raw(kSig, m.sig);
        w.cert(m.requester_cert);
        return w.finish();
    }
    Bytes operator()(const MsgD& m) const { return encode_request(m); }
    Bytes operator()(const MsgC2& m) const {
        FieldWriter w(MsgType::C2);
        w.u32(kProvider, to_underlying(m.provider));
        w.u8(kService, to_underlying(m.service));
        w.raw(kNonce3, m.n3);
        w.raw(kHash, m.h);
        w.cert(m.requester_cert);
        w.raw(kSig, m.sig);
        return w.finish();
    }
    Bytes operator()(const MsgD2& m) const {
        FieldWriter w(MsgType::D2);
        w.raw(kTicket, ticket_bytes(m.ticket));
        w.raw(kSig, m.sig);
        return w.finish();
    }
    Bytes operator()(const MsgE& m) const { return encode_request(m); }
    Bytes operator()(const MsgDenied& m) const {
        FieldWriter w(MsgType::Denied);
        w.u8(kService, to_underlying(m.service));
        return w.finish();
    }
    Bytes operator()(const AsymRequest& m) const {
        FieldWriter w(MsgType::Asym);
        w.u8(kService, to_underlying(m.service));
        w.u32(kProvider, to_underlying(m.provider));
        w.u32(kCounter, m.counter);
        w.raw(kCert, m.cert.encode());
        w.raw(kSig, m.sig);
        w.zeros(kPadding, m.padding);
        return w.finish();
    }
};

} // namespace

std::string_view message_name(const Message& m) {
    static constexpr std::string_view names[] = {"MsgA",  "MsgB",  "MsgC",      "MsgD",       "MsgC2",
                                                 "MsgD2", "MsgE",  "MsgDenied", "AsymRequest"};
    return names[m.index()];
}

Bytes encode_request(const MsgD& msg) {
    Bytes out;
    out.reserve(kMsgDWireSize);
    out.push_back(to_underlying(msg.service));
    append(out, msg.mac);
    return out;
}

Bytes encode_request(const MsgE& msg) {
    Bytes out;
    out.reserve(kMsgEWireSize);
    append(out, msg.r);
    append(out, ticket_bytes(msg.ticket));
    return out;
}

MsgD decode_msg_d(ByteView bytes) {
    if (bytes.size() != kMsgDWireSize) {
        throw Error(Errc::WrongLength, "MsgD must be 9 bytes, got " + std::to_string(bytes.size()));
    }
    MsgD m;
    m.service = ServiceId{bytes[0]};
    std::copy_n(bytes.begin() + 1, m.mac.size(), m.mac.begin());
    return m;
}

MsgE decode_msg_e(ByteView bytes) {
    if (bytes.size() != kMsgEWireSize) {
        throw Error(Errc::WrongLength, "MsgE must be 15 bytes, got " + std::to_string(bytes.size()));
    }
    MsgE m;
    std::copy_n(bytes.begin(), m.r.size(), m.r.begin());
    m.ticket = ticket_from(bytes.subspan(4));
    return m;
}

std::variant<MsgD, MsgE> decode_request(ByteView bytes) {
    if (bytes.size() == kMsgDWireSize) {
        return decode_msg_d(bytes);
    }
    if (bytes.size() == kMsgEWireSize) {
        return decode_msg_e(bytes);
    }
    throw Error(Errc::WrongLength, "request must be 9 or 15 bytes, got " + std::to_string(bytes.size()));
}

Bytes encode(const Message& msg) { return std::visit(Encoder{}, msg); }

Message decode(ByteView bytes) {
    if (bytes.size() < 3) {
        throw Error(Errc::MalformedMessage, "shorter than header");
    }
    const auto body_len = get_u16(bytes.subspan(1, 2));
    if (bytes.size() != 3u + body_len) {
        throw Error(Errc::MalformedMessage, "length prefix does not match");
    }
    const FieldReader f(bytes.subspan(3));
    switch (static_cast<MsgType>(bytes[0])) {
    case MsgType::A:
        f.expect_only({kRequester, kNonce1, kFlag});
        return MsgA{RequesterId{f.u32(kRequester)}, f.array<16>(kNonce1), f.flag(kFlag)};
    case MsgType::B:
        f.expect_only({kNonce2, kFlag, kCert, kSig});
        return MsgB{f.array<16>(kNonce2), f.flag(kFlag), f.cert(), f.array<64>(kSig)};
    case MsgType::C:
        f.expect_only({kService, kProvider, kSig, kCert});
        return MsgC{ServiceId{f.u8(kService)}, ProviderId{f.u32(kProvider)}, f.array<64>(kSig), f.cert()};
    case MsgType::C2:
        f.expect_only({kProvider, kService, kNonce3, kHash, kCert, kSig});
        return MsgC2{ProviderId{f.u32(kProvider)}, ServiceId{f.u8(kService)}, f.array<16>(kNonce3),
                     f.array<16>(kHash), f.cert(), f.array<64>(kSig)};
    case MsgType::D2:
        f.expect_only({kTicket, kSig});
        return MsgD2{ticket_from(f.raw(kTicket, kTicketSize)), f.array<64>(kSig)};
    case MsgType::Denied:
        f.expect_only({kService});
        return MsgDenied{ServiceId{f.u8(kService)}};
    case MsgType::Asym: {
        f.expect_only({kService, kProvider, kCounter, kCert, kSig, kPadding});
        AsymRequest m;
        m.service = ServiceId{f.u8(kService)};
        m.provider = ProviderId{f.u32(kProvider)};
        m.counter = f.u32(kCounter);
        m.cert = Certificate::decode(f.raw(kCert, Certificate::kEncodedSize));
        m.sig = f.array<64>(kSig);
        m.padding = static_cast<std::uint32_t>(f.length(kPadding));
        return m;
    }
    }
    throw Error(Errc::MalformedMessage, "unknown message type " + std::to_string(bytes[0]));
}

Bytes signed_nonces(const Nonce& n1, const Nonce& n2) {
    Bytes out{0x10};
    append(out, n1);
    append(out, n2);
    return out;
}

Bytes signed_p1_request(ServiceId service, ProviderId provider, const Nonce& n2) {
    Bytes out{0x11, to_underlying(service)};
    put_u32(out, to_underlying(provider));
    append(out, n2);
    return out;
}

Bytes signed_p2_request(ProviderId provider, ServiceId service, const Nonce& n2, const Nonce& n3, const Digest& h) {
    Bytes out{0x12};
    put_u32(out, to_underlying(provider));
    out.push_back(to_underlying(service));
    append(out, n2);
    append(out, n3);
    append(out, h);
    return out;
}

Bytes signed_ticket(const Ticket& ticket, const Nonce& n3) {
    Bytes out{0x13};
    append(out, ticket_bytes(ticket));
    append(out, n3);
    return out;
}

Bytes signed_asym_request(ServiceId service, ProviderId provider, std::uint32_t counter) {
    Bytes out{0x14, to_underlying(service)};
    put_u32(out, to_underlying(provider));
    put_u32(out, counter);
    return out;
}

Bytes p1_mac_input(ServiceId service, ProviderId provider, std::uint16_t counter) {
    Bytes out{0x01, 7, to_underlying(service)};
    put_u32(out, to_underlying(provider));
    put_u16(out, counter);
    return out;
}

Bytes p2_mac_input(ProviderId provider, ServiceId service, const Digest& h, std::uint16_t counter) {
    Bytes out{0x02, 23};
    put_u32(out, to_underlying(provider));
    out.push_back(to_underlying(service));
    append(out, h);
    put_u16(out, counter);
    return out;
}

} // namespace drainguard
