// SPDX-License-Identifier: Apache-2.0
//
// Delayed key disclosure broadcast authentication. Keys form a one-way hash
// chain walked backwards from a seed; each message is MACed with the key of
// its time interval and discloses the key of the interval d steps earlier.
// Receivers buffer messages until the key becomes public, then verify the
// disclosed key against the authenticated chain anchor and check the MAC.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "dronecast/sha256.hpp"

namespace dronecast {

struct KeyChain {
    std::uint32_t length = 0;        // N: last usable interval index
    double interval_duration_s = 1.0;
    std::uint32_t disclosure_delay = 2; // d, intervals
    double start_time_s = 0.0;
    Digest anchor{};                 // K_0 = H^N(K_N), published authentically
    std::vector<Digest> keys;        // K_0 .. K_N
};

KeyChain keychain_generate(std::uint64_t seed, std::uint32_t chain_length,
                           double interval_duration_s, std::uint32_t disclosure_delay,
                           double start_time_s);

struct AuthenticatedMessage {
    std::vector<std::uint8_t> payload;
    std::uint32_t interval_index = 0;
    std::array<std::uint8_t, 16> mac_tag{};
    Digest disclosed_key{}; // key of interval i - d
};

enum class SignStatus : std::uint8_t { kOk = 0, kChainExhausted, kTooEarly };

SignStatus sign_message(const std::vector<std::uint8_t>& payload, double t, const KeyChain& chain,
                        AuthenticatedMessage& out);

// Wire format: payload_len u16 | payload | interval u32 | mac 16 B | key 32 B.
std::vector<std::uint8_t> encode_auth_message(const AuthenticatedMessage& msg);
std::optional<AuthenticatedMessage> decode_auth_message(const std::vector<std::uint8_t>& bytes);

enum class VerifyResult : std::uint8_t { kAccept = 0, kBuffered, kReject };

const char* verify_result_name(VerifyResult result);

struct VerifyEvent {
    std::uint64_t tag = 0; // caller-supplied message handle
    VerifyResult result = VerifyResult::kReject;
    double t = 0.0;
};

// Receiver side. Owns the authenticated chain state (newest verified key) and
// the buffer of not-yet-verifiable messages.
class TeslaVerifier {
public:
    TeslaVerifier(const Digest& anchor, std::uint32_t chain_length, double interval_duration_s,
                  std::uint32_t disclosure_delay, double start_time_s, double max_clock_skew_s);

    // Feeds one received message; returns the verdict events it produced: the
    // new message's own REJECT/BUFFERED plus any buffered messages resolved
    // by the key this message disclosed.
    std::vector<VerifyEvent> on_message(const AuthenticatedMessage& msg, double t_rx,
                                        std::uint64_t tag);

    std::uint32_t newest_verified_interval() const { return newest_index_; }
    std::size_t buffered_count() const { return buffer_.size(); }

private:
    struct Pending {
        AuthenticatedMessage msg;
        std::uint64_t tag;
    };

    bool advance_chain(const Digest& candidate, std::uint32_t index);
    Digest key_for_interval(std::uint32_t interval) const;
    void resolve_buffer(double t, std::vector<VerifyEvent>& events);

    Digest newest_key_;
    std::uint32_t newest_index_ = 0;
    std::uint32_t chain_length_;
    double interval_duration_s_;
    std::uint32_t disclosure_delay_;
    double start_time_s_;
    double max_clock_skew_s_;
    std::vector<Pending> buffer_;
};

// MAC key for one interval, domain separated from the chain itself.
Digest tesla_mac_key(const Digest& interval_key);

std::array<std::uint8_t, 16> tesla_mac_tag(const Digest& interval_key,
                                           const std::vector<std::uint8_t>& payload,
                                           std::uint32_t interval_index);

}  // namespace dronecast
