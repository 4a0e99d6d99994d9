// SPDX-License-Identifier: Apache-2.0

#include "dronecast/tesla.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace dronecast {

KeyChain keychain_generate(std::uint64_t seed, std::uint32_t chain_length,
                           double interval_duration_s, std::uint32_t disclosure_delay,
                           double start_time_s) {
    if (chain_length < 1) chain_length = 1;
    KeyChain chain;
    chain.length = chain_length;
    chain.interval_duration_s = interval_duration_s;
    chain.disclosure_delay = std::max<std::uint32_t>(1, disclosure_delay);
    chain.start_time_s = start_time_s;
    chain.keys.resize(chain_length + 1);

    std::uint8_t seed_bytes[8];
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    chain.keys[chain_length] = sha256(seed_bytes, sizeof(seed_bytes));
    for (std::uint32_t i = chain_length; i-- > 0;) chain.keys[i] = sha256(chain.keys[i + 1]);
    chain.anchor = chain.keys[0];
    return chain;
}

Digest tesla_mac_key(const Digest& interval_key) {
    std::uint8_t buf[33];
    std::memcpy(buf, interval_key.data(), 32);
    buf[32] = 0x01;
    return sha256(buf, sizeof(buf));
}

std::array<std::uint8_t, 16> tesla_mac_tag(const Digest& interval_key,
                                           const std::vector<std::uint8_t>& payload,
                                           std::uint32_t interval_index) {
    const Digest mac_key = tesla_mac_key(interval_key);
    std::vector<std::uint8_t> data;
    data.reserve(payload.size() + 4);
    data.insert(data.end(), payload.begin(), payload.end());
    for (int i = 0; i < 4; ++i)
        data.push_back(static_cast<std::uint8_t>(interval_index >> (8 * i)));
    const Digest full = hmac_sha256(mac_key.data(), mac_key.size(), data.data(), data.size());
    std::array<std::uint8_t, 16> tag;
    std::memcpy(tag.data(), full.data(), 16);
    return tag;
}

SignStatus sign_message(const std::vector<std::uint8_t>& payload, double t, const KeyChain& chain,
                        AuthenticatedMessage& out) {
    const double rel = t - chain.start_time_s;
    const auto interval = static_cast<long long>(std::floor(rel / chain.interval_duration_s));
    if (interval < static_cast<long long>(chain.disclosure_delay)) return SignStatus::kTooEarly;
    if (interval > static_cast<long long>(chain.length)) return SignStatus::kChainExhausted;
    const auto i = static_cast<std::uint32_t>(interval);
    out.payload = payload;
    out.interval_index = i;
    out.mac_tag = tesla_mac_tag(chain.keys[i], payload, i);
    out.disclosed_key = chain.keys[i - chain.disclosure_delay];
    return SignStatus::kOk;
}

std::vector<std::uint8_t> encode_auth_message(const AuthenticatedMessage& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(2 + msg.payload.size() + 4 + 16 + 32);
    const auto len = static_cast<std::uint16_t>(msg.payload.size());
    out.push_back(static_cast<std::uint8_t>(len & 0xff));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(msg.interval_index >> (8 * i)));
    out.insert(out.end(), msg.mac_tag.begin(), msg.mac_tag.end());
    out.insert(out.end(), msg.disclosed_key.begin(), msg.disclosed_key.end());
    return out;
}

std::optional<AuthenticatedMessage> decode_auth_message(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2) return std::nullopt;
    const std::uint16_t len =
        static_cast<std::uint16_t>(bytes[0]) | (static_cast<std::uint16_t>(bytes[1]) << 8);
    if (bytes.size() != 2u + len + 4u + 16u + 32u) return std::nullopt;
    AuthenticatedMessage msg;
    msg.payload.assign(bytes.begin() + 2, bytes.begin() + 2 + len);
    std::size_t off = 2 + len;
    msg.interval_index = 0;
    for (int i = 0; i < 4; ++i)
        msg.interval_index |= static_cast<std::uint32_t>(bytes[off + i]) << (8 * i);
    off += 4;
    std::memcpy(msg.mac_tag.data(), &bytes[off], 16);
    off += 16;
    std::memcpy(msg.disclosed_key.data(), &bytes[off], 32);
    return msg;
}

const char* verify_result_name(VerifyResult result) {
    switch (result) {
        case VerifyResult::kAccept: return "ACCEPT";
        case VerifyResult::kBuffered: return "BUFFERED";
        case VerifyResult::kReject: return "REJECT";
    }
    return "UNKNOWN";
}

TeslaVerifier::TeslaVerifier(const Digest& anchor, std::uint32_t chain_length,
                             double interval_duration_s, std::uint32_t disclosure_delay,
                             double start_time_s, double max_clock_skew_s)
    : newest_key_(anchor),
      newest_index_(0),
      chain_length_(chain_length),
      interval_duration_s_(interval_duration_s),
      disclosure_delay_(disclosure_delay),
      start_time_s_(start_time_s),
      max_clock_skew_s_(max_clock_skew_s) {}

bool TeslaVerifier::advance_chain(const Digest& candidate, std::uint32_t index) {
    if (index <= newest_index_) {
        // Already authenticated this far; the candidate must match exactly.
        return key_for_interval(index) == candidate;
    }
    Digest walked = candidate;
    for (std::uint32_t k = index; k > newest_index_; --k) walked = sha256(walked);
    if (walked != newest_key_) return false;
    newest_key_ = candidate;
    newest_index_ = index;
    return true;
}

Digest TeslaVerifier::key_for_interval(std::uint32_t interval) const {
    Digest key = newest_key_;
    for (std::uint32_t k = newest_index_; k > interval; --k) key = sha256(key);
    return key;
}

void TeslaVerifier::resolve_buffer(double t, std::vector<VerifyEvent>& events) {
    std::vector<Pending> keep;
    keep.reserve(buffer_.size());
    for (auto& pending : buffer_) {
        if (pending.msg.interval_index > newest_index_) {
            keep.push_back(std::move(pending));
            continue;
        }
        const Digest key = key_for_interval(pending.msg.interval_index);
        const auto expected =
            tesla_mac_tag(key, pending.msg.payload, pending.msg.interval_index);
        const VerifyResult result = expected == pending.msg.mac_tag ? VerifyResult::kAccept
                                                                    : VerifyResult::kReject;
        events.push_back({pending.tag, result, t});
    }
    buffer_ = std::move(keep);
}

std::vector<VerifyEvent> TeslaVerifier::on_message(const AuthenticatedMessage& msg, double t_rx,
                                                   std::uint64_t tag) {
    std::vector<VerifyEvent> events;
    const std::uint32_t i = msg.interval_index;
    if (i > chain_length_ || i < disclosure_delay_) {
        events.push_back({tag, VerifyResult::kReject, t_rx});
        return events;
    }

    // Safety condition: the MAC key of interval i must still be secret. It is
    // disclosed at the start of interval i + d, so with bounded clock skew the
    // message is only trustworthy if that instant is still in the future.
    const double disclosure_time =
        start_time_s_ + static_cast<double>(i + disclosure_delay_) * interval_duration_s_;
    if (t_rx + max_clock_skew_s_ >= disclosure_time) {
        events.push_back({tag, VerifyResult::kReject, t_rx});
        return events;
    }

    // The disclosed key authenticates older intervals; a bogus key makes the
    // whole message untrustworthy.
    const std::uint32_t disclosed_index = i - disclosure_delay_;
    if (!advance_chain(msg.disclosed_key, disclosed_index)) {
        events.push_back({tag, VerifyResult::kReject, t_rx});
        return events;
    }

    buffer_.push_back({msg, tag});
    events.push_back({tag, VerifyResult::kBuffered, t_rx});
    resolve_buffer(t_rx, events);
    return events;
}

}  // namespace dronecast
