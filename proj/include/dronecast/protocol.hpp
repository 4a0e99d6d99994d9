// SPDX-License-Identifier: Apache-2.0
//
// Beaconing protocol: the fixed little-endian broadcast payload (identity,
// state vector, short trajectory), CSMA medium access with capture, the
// cooperative collision-avoidance state machine and ground-station tracking.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dronecast/environment.hpp"
#include "dronecast/geom.hpp"

namespace dronecast {

enum class DroneStatus : std::uint8_t { kCruise = 0, kHolding = 1, kEmergency = 2 };

// Fixed local tangent-plane origin; positions go onto the wire as
// lat/lon x 1e-7 deg and altitude in millimeters.
struct GeodeticOrigin {
    double lat_deg = 48.0;
    double lon_deg = 11.0;
};

struct GeoPosition {
    std::int32_t lat_1e7deg = 0;
    std::int32_t lon_1e7deg = 0;
    std::int32_t alt_mm = 0;
};

GeoPosition to_geodetic(const GeodeticOrigin& origin, const Vec3& local);
Vec3 to_local(const GeodeticOrigin& origin, const GeoPosition& geo);

constexpr std::size_t kBeaconHeaderBytes = 36;
constexpr std::size_t kBeaconMaxWaypoints = 7;
constexpr std::size_t kBeaconMaxBytes = kBeaconHeaderBytes + 12 * kBeaconMaxWaypoints;

struct BeaconMessage {
    std::uint32_t drone_id = 0;
    std::uint32_t seq = 0;
    std::uint64_t time_ms = 0;
    GeoPosition position;
    std::int16_t velocity_cm_s[3] = {0, 0, 0};
    DroneStatus status = DroneStatus::kCruise;
    std::vector<GeoPosition> waypoints; // at most 7

    std::size_t encoded_size() const { return kBeaconHeaderBytes + 12 * waypoints.size(); }
};

std::vector<std::uint8_t> encode_beacon(const BeaconMessage& msg);

// Returns nothing for malformed input (bad size, too many waypoints, bad
// status byte); decoding never throws.
std::optional<BeaconMessage> decode_beacon(const std::vector<std::uint8_t>& bytes);

// ---------------------------------------------------------------------------
// Medium access

struct Transmission {
    std::uint32_t tx_id = 0;
    double start_s = 0.0;
    double duration_s = 0.0;
};

enum class MacVerdict { kClear, kCollided };

struct MacConfig {
    double carrier_sense_dbm = -85.0;
    double capture_margin_db = 10.0;
};

struct MacResult {
    std::vector<MacVerdict> verdicts;   // per input transmission
    std::vector<double> actual_start_s; // after carrier-sense deferrals
};

// CSMA abstraction: a transmitter defers while it senses an ongoing
// transmission above the carrier-sense threshold at its own position;
// receptions that still overlap at the receiver all collide unless one of
// them beats every overlapping rival by the capture margin.
//
// sense_dbm(i, j): power of transmission i as heard at transmitter j.
// rx_power_dbm[i]: power of transmission i at the receiver being arbitrated.
MacResult mac_arbitrate(const std::vector<Transmission>& transmissions,
                        const std::vector<double>& rx_power_dbm,
                        const std::function<double(std::size_t, std::size_t)>& sense_dbm,
                        const MacConfig& config);

// ---------------------------------------------------------------------------
// Collision avoidance

struct SeparationPrediction {
    double d_min_m = 0.0;
    double t_at_min_s = 0.0;
};

// Minimum 3D distance between two trajectories sampled over
// [t0, t0 + horizon] at step dt; ties resolve to the earliest time.
SeparationPrediction predict_min_separation(const Trajectory& a, const Trajectory& b, double t0,
                                            double horizon_s, double dt_s);

enum class CaMode : std::uint8_t { kCruise = 0, kConflict, kHolding, kResume };

const char* ca_mode_name(CaMode mode);

struct CAState {
    CaMode mode = CaMode::kCruise;
    std::optional<std::uint32_t> conflict_partner;
    std::optional<double> hold_since_s;
    std::optional<double> clear_since_s; // hysteresis dwell bookkeeping
};

struct CaConfig {
    double threshold_m = 20.0;
    double horizon_s = 10.0;
    double dt_s = 0.1;
    double hysteresis_m = 5.0;
    double dwell_s = 2.0;
    bool hold_both = true; // false: lower id holds first, the other only if
                           // re-prediction against the held partner still conflicts
};

struct CaCommands {
    bool hold = false;      // stop and hold position now
    bool resume = false;    // continue the mission
    bool emergency = false; // send one emergency message to the ground
    std::optional<std::uint32_t> partner;
    double predicted_min_m = 0.0;
};

// A neighbour as reconstructed from its last beacon.
struct PartnerTrack {
    std::uint32_t drone_id = 0;
    Trajectory trajectory;
    DroneStatus status = DroneStatus::kCruise;
};

std::pair<CAState, CaCommands> ca_step(const CAState& state, std::uint32_t own_id,
                                       const Trajectory& own_plan, double own_plan_time,
                                       const std::vector<PartnerTrack>& partners, double t,
                                       const CaConfig& config);

// Straight-line continuation of a beaconed state vector plus its broadcast
// waypoints, used as the partner model for conflict prediction.
Trajectory trajectory_from_beacon(const BeaconMessage& msg, const GeodeticOrigin& origin,
                                  double fallback_speed_mps = 5.0);

// ---------------------------------------------------------------------------
// Ground-station tracking

enum class TrackStatus : std::uint8_t { kLive = 0, kStale, kLost };

const char* track_status_name(TrackStatus status);

struct TrackTableConfig {
    double stale_after_s = 1.0;
    double lost_after_s = 5.0;
};

struct TrackEntry {
    BeaconMessage last_beacon;
    double last_heard_s = 0.0;
    TrackStatus status = TrackStatus::kLive;
};

class TrackTable {
public:
    explicit TrackTable(TrackTableConfig config = {}) : config_(config) {}

    // Fresh beacon; out-of-order sequence numbers are ignored.
    void update(const BeaconMessage& msg, double t);

    // Degrades track statuses by age.
    void age(double t);

    const std::map<std::uint32_t, TrackEntry>& entries() const { return entries_; }

private:
    TrackTableConfig config_;
    std::map<std::uint32_t, TrackEntry> entries_;
};

}  // namespace dronecast
