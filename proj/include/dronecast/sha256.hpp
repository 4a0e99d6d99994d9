// SPDX-License-Identifier: Apache-2.0
//
// Self-contained SHA-256 and HMAC-SHA256 (FIPS 180-4 / RFC 2104). Kept local
// so the build has no crypto library dependency.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dronecast {

using Digest = std::array<std::uint8_t, 32>;

class Sha256 {
public:
    Sha256();
    void update(const std::uint8_t* data, std::size_t len);
    void update(const std::vector<std::uint8_t>& data) { update(data.data(), data.size()); }
    Digest finish();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t total_len_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
};

Digest sha256(const std::uint8_t* data, std::size_t len);
Digest sha256(const std::vector<std::uint8_t>& data);
Digest sha256(const Digest& data);

Digest hmac_sha256(const std::uint8_t* key, std::size_t key_len, const std::uint8_t* data,
                   std::size_t len);

}  // namespace dronecast
