// SPDX-License-Identifier: Apache-2.0
//
// Deterministic fixed-step simulation loop binding the scene, channel, radio,
// beaconing protocol, collision avoidance, ground tracking and broadcast
// authentication, plus the calibrated mission and density presets.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dronecast/channel.hpp"
#include "dronecast/environment.hpp"
#include "dronecast/protocol.hpp"
#include "dronecast/radio.hpp"
#include "dronecast/tesla.hpp"

namespace dronecast {

struct DroneSpec {
    std::uint32_t id = 0;
    Trajectory trajectory;
    RadioProfile radio;
    AirframeShadowMask mask;
};

enum class StationRole : std::uint8_t { kMonitor = 0, kGbas };

struct GroundStation {
    std::uint32_t id = 0;
    Vec3 position;
    StationRole role = StationRole::kMonitor;
    RadioProfile radio;
};

struct MultilinkConfig {
    bool enabled = false;
    double availability = 0.99;
    double latency_s = 0.150;
};

struct ProtocolSimConfig {
    bool ca_enabled = true;
    CaConfig ca;
    TrackTableConfig tracking;
    MacConfig mac;
};

struct TeslaSimConfig {
    bool enabled = false;
    double interval_s = 1.0;
    std::uint32_t disclosure_delay = 2;
    std::uint32_t chain_length = 3600;
    double max_clock_skew_s = 0.010;
    double injected_skew_s = 0.0;
    double rate_hz = 2.0;
    int payload_bytes = 64;
};

struct Scenario {
    std::string name = "scenario";
    UrbanScene scene;
    std::optional<P1410Params> p1410; // generated into the scene before the run
    std::vector<DroneSpec> drones;
    std::vector<GroundStation> ground_stations;
    ChannelConfig channel;
    ProtocolSimConfig protocol;
    TeslaSimConfig tesla;
    MultilinkConfig multilink;
    GeodeticOrigin origin;
    double carrier_hz = 5050e6;
    double bitrate_bps = 6e6;
    double preamble_s = 40e-6;
    double nav_jitter_sigma_m = 0.0;
    double duration_s = 60.0;
    double time_step_s = 0.01;
    std::uint64_t seed = 0;
};

// Throws std::runtime_error with a descriptive message on the first violated
// invariant (duplicate ids, bad step size, invalid radio profiles, ...).
void validate_scenario(const Scenario& scenario);

struct PacketRecord {
    double t = 0.0;
    std::uint32_t tx_id = 0;
    std::uint32_t rx_id = 0;
    std::uint32_t seq = 0;
    double snr_db = 0.0;
    double channel_db = 0.0;
    bool delivered = false;
    LossReason reason = LossReason::kNone;
    double distance_m = 0.0;
};

struct SnrSample {
    double t = 0.0;
    std::uint32_t tx_id = 0;
    std::uint32_t rx_id = 0;
    double channel_power_db = 0.0;
    double snr_db = 0.0;
    int n_components = 0;
};

struct CaEventRecord {
    double t = 0.0;
    std::uint32_t drone_id = 0;
    std::string transition;
    std::uint32_t partner = 0;
    double d_min_pred_m = 0.0;
};

struct TrackRecord {
    double t = 0.0;
    std::uint32_t station_id = 0;
    std::uint32_t drone_id = 0;
    TrackStatus status = TrackStatus::kLive;
    double age_s = 0.0;
};

struct TeslaEventRecord {
    double t = 0.0;
    std::uint32_t rx_id = 0;
    std::uint64_t tag = 0;
    VerifyResult result = VerifyResult::kBuffered;
};

struct LinkStats {
    std::uint64_t transmissions = 0;
    std::uint64_t delivered = 0;
    std::uint64_t weak = 0;
    std::uint64_t overdrive = 0;
    std::uint64_t collided = 0;
    std::uint64_t malformed = 0;

    std::uint64_t losses() const { return weak + overdrive + collided + malformed; }
    double per() const {
        return transmissions == 0 ? 0.0
                                  : static_cast<double>(losses()) /
                                        static_cast<double>(transmissions);
    }
};

struct SimulationReport {
    std::vector<PacketRecord> packets;
    std::vector<SnrSample> snr_trace;
    std::vector<CaEventRecord> ca_events;
    std::vector<TrackRecord> track_samples;
    std::vector<TeslaEventRecord> tesla_events;
    std::map<std::pair<std::uint32_t, std::uint32_t>, LinkStats> links;
    double min_separation_m = 0.0; // across drone pairs; -1 with fewer than 2 drones
    std::map<std::uint32_t, double> tracker_availability; // per monitor station
    std::uint64_t tesla_accept = 0;
    std::uint64_t tesla_reject = 0;
    std::uint64_t tesla_buffered = 0;
    double beacon_age_p95_s = 0.0;
    double mac_collision_rate = 0.0;
    double duration_s = 0.0;
    std::uint64_t seed = 0;
};

SimulationReport run(const Scenario& scenario);

enum class RadioKind { kExperimental, kCots };

// The calibrated replication scenarios for the three flight missions.
Scenario mission_scenario(int id, RadioKind kind, std::uint64_t seed);
SimulationReport replicate_mission(int id, RadioKind kind, std::uint64_t seed);

// n drones on disjoint lawnmower strips over the given area, beaconing at
// full rate; exercises medium access at scale.
Scenario density_scenario(int n_drones, double area_km2, double duration_s, std::uint64_t seed);
SimulationReport density_stress(int n_drones, double area_km2, double duration_s,
                                std::uint64_t seed);

// packets.csv, snr.csv, ca_events.csv, tracks.jsonl, tesla_events.csv,
// buildings.csv, elements.csv and report.json under out_dir.
void write_outputs(const SimulationReport& report, const Scenario& scenario,
                   const std::string& out_dir);

// Human-readable run summary (PER per link and loss reason, separation, CA
// and authentication counters), values rounded to three significant digits.
std::string summary_text(const SimulationReport& report);

}  // namespace dronecast
