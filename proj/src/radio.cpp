// SPDX-License-Identifier: Apache-2.0

#include "dronecast/radio.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dronecast {

RadioProfile experimental_radio_profile() {
    RadioProfile p;
    p.tx_power_dbm = 2.0;
    p.amp_gain_db = 21.0;
    p.noise_figure_db = 7.0;
    p.bandwidth_hz = 5e6;
    p.snr_decode_min_db = 8.0;
    p.snr_overdrive_start_db = 38.0;
    p.edge_steepness_db = 1.5;
    p.agc = false;
    return p;
}

RadioProfile cots_radio_profile() {
    RadioProfile p;
    p.tx_power_dbm = 23.0;
    p.amp_gain_db = 0.0;
    p.noise_figure_db = 2.0;
    p.bandwidth_hz = 10e6;
    p.snr_decode_min_db = 5.0;
    p.snr_overdrive_start_db = 60.0; // unused with AGC
    p.edge_steepness_db = 0.32;
    p.agc = true;
    return p;
}

void validate_profile(const RadioProfile& profile) {
    if (profile.bandwidth_hz <= 0.0) throw std::runtime_error("radio: bandwidth must be positive");
    if (profile.edge_steepness_db <= 0.0)
        throw std::runtime_error("radio: edge steepness must be positive");
    if (profile.beacon_payload_bytes < 0 || profile.beacon_payload_bytes > 125)
        throw std::runtime_error("radio: beacon payload must be at most 125 bytes");
    if (!profile.agc && profile.snr_decode_min_db >= profile.snr_overdrive_start_db)
        throw std::runtime_error("radio: decode window is empty");
    if (profile.beacon_rate_hz <= 0.0)
        throw std::runtime_error("radio: beacon rate must be positive");
}

const char* loss_reason_name(LossReason reason) {
    switch (reason) {
        case LossReason::kNone: return "NONE";
        case LossReason::kWeakSignal: return "WEAK_SIGNAL";
        case LossReason::kOverdrive: return "OVERDRIVE";
        case LossReason::kMacCollision: return "MAC_COLLISION";
        case LossReason::kMalformed: return "MALFORMED";
    }
    return "UNKNOWN";
}

double received_power_dbm(const RadioProfile& profile, double channel_power_db) {
    return profile.tx_power_dbm + profile.amp_gain_db + channel_power_db;
}

double noise_floor_dbm(const RadioProfile& profile) {
    return -174.0 + 10.0 * std::log10(profile.bandwidth_hz) + profile.noise_figure_db;
}

double snr_db(double rx_power_dbm, const RadioProfile& profile) {
    return rx_power_dbm - noise_floor_dbm(profile);
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double packet_success_probability(const RadioProfile& profile, double snr_db) {
    if (std::isinf(snr_db) && snr_db < 0.0) return 0.0;
    double p = logistic((snr_db - profile.snr_decode_min_db) / profile.edge_steepness_db);
    if (!profile.agc)
        p *= logistic((profile.snr_overdrive_start_db - snr_db) / profile.edge_steepness_db);
    return p;
}

PacketOutcome packet_outcome(const RadioProfile& profile, double snr_db, Rng& rng) {
    PacketOutcome out;
    out.snr_db = snr_db;
    const double p = packet_success_probability(profile, snr_db);
    if (rng.uniform01() < p) {
        out.delivered = true;
        out.loss_reason = LossReason::kNone;
        return out;
    }
    out.delivered = false;
    const double midpoint =
        (profile.snr_decode_min_db + profile.snr_overdrive_start_db) / 2.0;
    out.loss_reason =
        (!std::isinf(snr_db) && snr_db > midpoint) ? LossReason::kOverdrive
                                                   : LossReason::kWeakSignal;
    return out;
}

}  // namespace dronecast
