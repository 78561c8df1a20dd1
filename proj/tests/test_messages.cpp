#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"

#include "drainguard/error.hpp"
#include "drainguard/messages.hpp"

using namespace drainguard;
using drainguard::testing::MessageGen;

TEST_CASE("request messages have the listed sizes and layout") {
    const MsgD d{ServiceId{0x2a}, Mac8{1, 2, 3, 4, 5, 6, 7, 8}};
    const auto wire_d = encode_request(d);
    CHECK(wire_d.size() == 9);
    CHECK(to_hex(wire_d) == "2a0102030405060708");

    const MsgE e{{0xde, 0xad, 0xbe, 0xef}, Ticket{ServiceId{1}, 0x0102, Mac8{9, 9, 9, 9, 9, 9, 9, 9}}};
    const auto wire_e = encode_request(e);
    CHECK(wire_e.size() == 15);
    CHECK(to_hex(wire_e) == "deadbeef0101020909090909090909");
    CHECK(encode(Message{e}) == wire_e);
    CHECK(encode(Message{d}) == wire_d);
}

TEST_CASE("request codec round trip") {
    MessageGen gen(1);
    for (int i = 0; i < 2000; ++i) {
        const auto d = gen.msg_d();
        const auto e = gen.msg_e();
        REQUIRE(decode_msg_d(encode_request(d)) == d);
        REQUIRE(decode_msg_e(encode_request(e)) == e);
        REQUIRE(std::get<MsgD>(decode_request(encode_request(d))) == d);
        REQUIRE(std::get<MsgE>(decode_request(encode_request(e))) == e);
    }
}

TEST_CASE("request decoding requires the exact length") {
    for (const std::size_t n : {0, 1, 8, 10, 14, 16, 532}) {
        CHECK_THROWS_AS(decode_request(Bytes(n)), Error);
    }
    try {
        decode_msg_d(Bytes(10));
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::WrongLength);
    }
    CHECK_THROWS_AS(decode_msg_e(Bytes(9)), Error);
}

TEST_CASE("self-describing codec round trip") {
    MessageGen gen(2);
    for (int i = 0; i < 3000; ++i) {
        const auto m = gen.any();
        const auto wire = encode(m);
        if (const auto* d = std::get_if<MsgD>(&m)) {
            REQUIRE(std::get<MsgD>(decode_request(wire)) == *d);
            continue;
        }
        if (const auto* e = std::get_if<MsgE>(&m)) {
            REQUIRE(std::get<MsgE>(decode_request(wire)) == *e);
            continue;
        }
        REQUIRE(decode(wire) == m);
    }
}

TEST_CASE("self-describing codec rejects damage") {
    MessageGen gen(3);
    int rejected = 0;
    int total = 0;
    for (int i = 0; i < 500; ++i) {
        const auto m = gen.any();
        if (std::holds_alternative<MsgD>(m) || std::holds_alternative<MsgE>(m)) {
            continue;
        }
        auto wire = encode(m);
        // Every strict prefix is malformed.
        const auto cut = gen.rng().engine()() % wire.size();
        ++total;
        try {
            decode(ByteView(wire.data(), cut));
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MalformedMessage);
            ++rejected;
        }
        wire.push_back(0);
        CHECK_THROWS_AS(decode(wire), Error);
    }
    CHECK(rejected == total);
    CHECK_THROWS_AS(decode(Bytes{0xee, 0x00, 0x00}), Error);
}

TEST_CASE("asymmetric request padding reaches the configured size") {
    MessageGen gen(4);
    for (int i = 0; i < 20; ++i) {
        auto m = gen.any();
        while (!std::holds_alternative<AsymRequest>(m)) {
            m = gen.any();
        }
        auto req = std::get<AsymRequest>(m);
        req.padding = 0;
        const auto base = encode(req).size();
        req.padding = 532 - static_cast<std::uint32_t>(base);
        CHECK(encode(req).size() == 532);
        CHECK(decode(encode(req)) == Message{req});
    }
}

TEST_CASE("MAC inputs are fixed length and domain separated") {
    const Digest h{};
    CHECK(p1_mac_input(ServiceId{1}, ProviderId{2}, 3).size() == 9);
    CHECK(p2_mac_input(ProviderId{2}, ServiceId{1}, h, 3).size() == 25);
    CHECK(p1_mac_input(ServiceId{1}, ProviderId{2}, 3)[0] != p2_mac_input(ProviderId{2}, ServiceId{1}, h, 3)[0]);
    CHECK(to_hex(p1_mac_input(ServiceId{1}, ProviderId{0x0a0b0c0d}, 0x0102)) == "0107010a0b0c0d0102");
}

TEST_CASE("message names") {
    CHECK(message_name(Message{MsgDenied{}}) == "MsgDenied");
    CHECK(message_name(Message{MsgA{}}) == "MsgA");
}
