// SPDX-License-Identifier: Apache-2.0
//
// Link budget and packet delivery model. The receiver decodes inside an SNR
// window: below it the signal is too weak, above it the front end overdrives
// unless automatic gain control is present. Both edges are logistic with a
// configurable steepness, matching bench behaviour of the two radio setups.

#pragma once

#include <cstdint>

#include "dronecast/rng.hpp"

namespace dronecast {

struct RadioProfile {
    double tx_power_dbm = 2.0;
    double amp_gain_db = 21.0;
    double noise_figure_db = 7.0;
    double bandwidth_hz = 5e6;
    double snr_decode_min_db = 8.0;
    double snr_overdrive_start_db = 38.0;
    double edge_steepness_db = 1.5;
    bool agc = false;
    int beacon_payload_bytes = 125;
    double beacon_rate_hz = 10.0;
};

// SDR with external amplifier, no active AGC: bounded reception window.
RadioProfile experimental_radio_profile();

// Commercial 802.11p unit: AGC, sharp sensitivity edge, no overdrive.
RadioProfile cots_radio_profile();

void validate_profile(const RadioProfile& profile); // throws on bad invariants

enum class LossReason : std::uint8_t {
    kNone = 0,
    kWeakSignal,
    kOverdrive,
    kMacCollision,
    kMalformed,
};

const char* loss_reason_name(LossReason reason);

struct PacketOutcome {
    bool delivered = false;
    LossReason loss_reason = LossReason::kNone;
    double snr_db = 0.0;
};

double received_power_dbm(const RadioProfile& profile, double channel_power_db);

double noise_floor_dbm(const RadioProfile& profile);

double snr_db(double rx_power_dbm, const RadioProfile& profile);

// Probability that a packet at the given SNR decodes.
double packet_success_probability(const RadioProfile& profile, double snr_db);

PacketOutcome packet_outcome(const RadioProfile& profile, double snr_db, Rng& rng);

}  // namespace dronecast
