// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dronecast/rng.hpp"
#include "dronecast/tesla.hpp"

using namespace dronecast;

namespace {

std::vector<std::uint8_t> payload_bytes(const char* text) {
    return std::vector<std::uint8_t>(text, text + std::string(text).size());
}

TeslaVerifier verifier_for(const KeyChain& chain, double skew = 0.01) {
    return TeslaVerifier(chain.anchor, chain.length, chain.interval_duration_s,
                         chain.disclosure_delay, chain.start_time_s, skew);
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    // Empty string and "abc" (FIPS 180-4 examples).
    const Digest empty = sha256(nullptr, 0);
    CHECK(empty[0] == 0xe3);
    CHECK(empty[1] == 0xb0);
    CHECK(empty[31] == 0x55);
    const auto abc = payload_bytes("abc");
    const Digest d = sha256(abc);
    CHECK(d[0] == 0xba);
    CHECK(d[1] == 0x78);
    CHECK(d[31] == 0xad);
}

TEST_CASE("hmac-sha256 known vector (RFC 4231 case 2)") {
    const auto key = payload_bytes("Jefe");
    const auto data = payload_bytes("what do ya want for nothing?");
    const Digest mac = hmac_sha256(key.data(), key.size(), data.data(), data.size());
    CHECK(mac[0] == 0x5b);
    CHECK(mac[1] == 0xdc);
    CHECK(mac[2] == 0xc1);
    CHECK(mac[31] == 0x43);
}

TEST_CASE("keychain: anchor is the N-fold hash of the chain tip") {
    const auto one = keychain_generate(7, 1, 1.0, 1, 0.0);
    CHECK(one.anchor == sha256(one.keys[1]));

    const auto chain = keychain_generate(1234, 100, 1.0, 2, 0.0);
    Digest walked = chain.keys[100];
    for (int i = 0; i < 100; ++i) walked = sha256(walked);
    CHECK(walked == chain.anchor);
    // Every link hashes into the previous one.
    for (std::uint32_t i = 0; i < 100; ++i) CHECK(chain.keys[i] == sha256(chain.keys[i + 1]));
}

TEST_CASE("keychain: different seeds diverge") {
    CHECK(keychain_generate(1, 50, 1.0, 2, 0.0).anchor !=
          keychain_generate(2, 50, 1.0, 2, 0.0).anchor);
}

TEST_CASE("signing: interval selection, disclosure and error statuses") {
    const auto chain = keychain_generate(99, 20, 1.0, 2, 0.0);
    AuthenticatedMessage msg;

    // At the first usable interval the disclosed key is the anchor itself.
    CHECK(sign_message(payload_bytes("x"), 2.0, chain, msg) == SignStatus::kOk);
    CHECK(msg.interval_index == 2);
    CHECK(msg.disclosed_key == chain.anchor);

    // Two messages in the same interval share the key and MAC key.
    AuthenticatedMessage again;
    CHECK(sign_message(payload_bytes("x"), 2.7, chain, again) == SignStatus::kOk);
    CHECK(again.interval_index == msg.interval_index);
    CHECK(again.disclosed_key == msg.disclosed_key);
    CHECK(again.mac_tag == msg.mac_tag);

    CHECK(sign_message(payload_bytes("x"), 0.5, chain, msg) == SignStatus::kTooEarly);
    CHECK(sign_message(payload_bytes("x"), 25.0, chain, msg) == SignStatus::kChainExhausted);
}

TEST_CASE("wire format round trip and malformed rejection") {
    const auto chain = keychain_generate(5, 10, 1.0, 2, 0.0);
    AuthenticatedMessage msg;
    REQUIRE(sign_message(payload_bytes("hello gbas"), 3.3, chain, msg) == SignStatus::kOk);
    const auto bytes = encode_auth_message(msg);
    const auto decoded = decode_auth_message(bytes);
    REQUIRE(decoded.has_value());
    CHECK(decoded->interval_index == msg.interval_index);
    CHECK(decoded->payload == msg.payload);
    CHECK(decoded->mac_tag == msg.mac_tag);
    CHECK(decoded->disclosed_key == msg.disclosed_key);

    auto bad = bytes;
    bad.pop_back();
    CHECK_FALSE(decode_auth_message(bad).has_value());
}

TEST_CASE("verify: authentic messages buffer, then accept once the key discloses") {
    const auto chain = keychain_generate(77, 100, 1.0, 2, 0.0);
    auto verifier = verifier_for(chain);

    AuthenticatedMessage m1, m2;
    REQUIRE(sign_message(payload_bytes("first"), 3.2, chain, m1) == SignStatus::kOk);  // i=3
    REQUIRE(sign_message(payload_bytes("second"), 5.4, chain, m2) == SignStatus::kOk); // i=5

    auto ev1 = verifier.on_message(m1, 3.25, 1);
    REQUIRE(ev1.size() == 1);
    CHECK(ev1[0].result == VerifyResult::kBuffered);

    // m2 disclosed K_3, which verifies m1.
    auto ev2 = verifier.on_message(m2, 5.45, 2);
    REQUIRE(ev2.size() == 2);
    CHECK(ev2[0].result == VerifyResult::kBuffered);
    CHECK(ev2[0].tag == 2);
    CHECK(ev2[1].result == VerifyResult::kAccept);
    CHECK(ev2[1].tag == 1);
    CHECK(verifier.newest_verified_interval() == 3);
}

TEST_CASE("verify: forged payload and forged key are rejected") {
    const auto chain = keychain_generate(13, 100, 1.0, 2, 0.0);
    auto verifier = verifier_for(chain);

    AuthenticatedMessage forged;
    REQUIRE(sign_message(payload_bytes("pay"), 4.0, chain, forged) == SignStatus::kOk);
    forged.payload[0] ^= 0x01;
    auto ev = verifier.on_message(forged, 4.05, 1);
    CHECK(ev[0].result == VerifyResult::kBuffered);

    AuthenticatedMessage discloser;
    REQUIRE(sign_message(payload_bytes("next"), 6.0, chain, discloser) == SignStatus::kOk);
    ev = verifier.on_message(discloser, 6.05, 2);
    bool rejected_tag1 = false;
    for (const auto& e : ev)
        if (e.tag == 1 && e.result == VerifyResult::kReject) rejected_tag1 = true;
    CHECK(rejected_tag1);

    // A message whose disclosed key does not walk back to the anchor.
    AuthenticatedMessage bad_key;
    REQUIRE(sign_message(payload_bytes("zzz"), 8.0, chain, bad_key) == SignStatus::kOk);
    bad_key.disclosed_key[5] ^= 0x80;
    ev = verifier.on_message(bad_key, 8.05, 3);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].result == VerifyResult::kReject);
}

TEST_CASE("verify: safety condition rejects messages once their key may be public") {
    const auto chain = keychain_generate(5, 100, 1.0, 2, 0.0);
    auto verifier = verifier_for(chain, 0.01);

    AuthenticatedMessage msg;
    REQUIRE(sign_message(payload_bytes("late"), 4.0, chain, msg) == SignStatus::kOk); // i=4
    // K_4 is disclosed at t=6; delivery at 6.2 is unsafe.
    auto ev = verifier.on_message(msg, 6.2, 1);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].result == VerifyResult::kReject);

    // Same message delivered in time is fine.
    auto verifier2 = verifier_for(chain, 0.01);
    ev = verifier2.on_message(msg, 4.1, 2);
    CHECK(ev[0].result == VerifyResult::kBuffered);
}

TEST_CASE("verify: chain verification cost is bounded and the index is monotone") {
    const auto chain = keychain_generate(31, 200, 1.0, 2, 0.0);
    auto verifier = verifier_for(chain);
    std::uint32_t last = 0;
    for (double t : {2.5, 7.5, 30.1, 100.9, 101.5}) {
        AuthenticatedMessage msg;
        REQUIRE(sign_message(payload_bytes("tick"), t, chain, msg) == SignStatus::kOk);
        verifier.on_message(msg, t + 0.05, static_cast<std::uint64_t>(t * 10));
        CHECK(verifier.newest_verified_interval() >= last);
        last = verifier.newest_verified_interval();
    }
    CHECK(last == 99);
}

TEST_CASE("verify: random single-bit tamperings never authenticate") {
    const auto chain = keychain_generate(555, 60, 1.0, 2, 0.0);
    Rng rng(1);
    int accepted_forgeries = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        auto verifier = verifier_for(chain);
        AuthenticatedMessage msg;
        const double t = 3.0 + rng.uniform(0.0, 40.0);
        REQUIRE(sign_message(payload_bytes("authentic payload"), t, chain, msg) ==
                SignStatus::kOk);
        auto bytes = encode_auth_message(msg);
        const std::size_t bit = rng.below(bytes.size() * 8);
        bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        const auto tampered = decode_auth_message(bytes);
        if (!tampered) continue; // malformed on the wire
        auto ev = verifier.on_message(*tampered, t + 0.05, 1);
        // Force resolution with a later authentic message.
        AuthenticatedMessage late;
        if (sign_message(payload_bytes("later"), t + 2.5, chain, late) == SignStatus::kOk) {
            auto more = verifier.on_message(late, t + 2.55, 2);
            ev.insert(ev.end(), more.begin(), more.end());
        }
        for (const auto& e : ev)
            if (e.tag == 1 && e.result == VerifyResult::kAccept) ++accepted_forgeries;
    }
    CHECK(accepted_forgeries == 0);
}
