// SPDX-License-Identifier: Apache-2.0

#include "dronecast/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dronecast {

namespace {

constexpr double kEarthRadiusM = 6371000.0;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

void put_i16(std::vector<std::uint8_t>& out, std::int16_t v) {
    put_u16(out, static_cast<std::uint16_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::int32_t get_i32(const std::uint8_t* p) { return static_cast<std::int32_t>(get_u32(p)); }

std::int16_t get_i16(const std::uint8_t* p) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                     (static_cast<std::uint16_t>(p[1]) << 8));
}

}  // namespace

GeoPosition to_geodetic(const GeodeticOrigin& origin, const Vec3& local) {
    GeoPosition geo;
    const double lat = origin.lat_deg + (local.y / kEarthRadiusM) * 180.0 / kPi;
    const double coslat = std::cos(deg2rad(origin.lat_deg));
    const double lon = origin.lon_deg + (local.x / (kEarthRadiusM * coslat)) * 180.0 / kPi;
    geo.lat_1e7deg = static_cast<std::int32_t>(std::llround(lat * 1e7));
    geo.lon_1e7deg = static_cast<std::int32_t>(std::llround(lon * 1e7));
    geo.alt_mm = static_cast<std::int32_t>(std::llround(local.z * 1000.0));
    return geo;
}

Vec3 to_local(const GeodeticOrigin& origin, const GeoPosition& geo) {
    const double lat = static_cast<double>(geo.lat_1e7deg) * 1e-7;
    const double lon = static_cast<double>(geo.lon_1e7deg) * 1e-7;
    const double coslat = std::cos(deg2rad(origin.lat_deg));
    Vec3 local;
    local.y = deg2rad(lat - origin.lat_deg) * kEarthRadiusM;
    local.x = deg2rad(lon - origin.lon_deg) * kEarthRadiusM * coslat;
    local.z = static_cast<double>(geo.alt_mm) / 1000.0;
    return local;
}

std::vector<std::uint8_t> encode_beacon(const BeaconMessage& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(msg.encoded_size());
    put_u32(out, msg.drone_id);
    put_u32(out, msg.seq);
    put_u64(out, msg.time_ms);
    put_i32(out, msg.position.lat_1e7deg);
    put_i32(out, msg.position.lon_1e7deg);
    put_i32(out, msg.position.alt_mm);
    for (int i = 0; i < 3; ++i) put_i16(out, msg.velocity_cm_s[i]);
    out.push_back(static_cast<std::uint8_t>(msg.status));
    out.push_back(static_cast<std::uint8_t>(msg.waypoints.size()));
    for (const auto& wp : msg.waypoints) {
        put_i32(out, wp.lat_1e7deg);
        put_i32(out, wp.lon_1e7deg);
        put_i32(out, wp.alt_mm);
    }
    return out;
}

std::optional<BeaconMessage> decode_beacon(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kBeaconHeaderBytes) return std::nullopt;
    const std::uint8_t n = bytes[35];
    if (n > kBeaconMaxWaypoints) return std::nullopt;
    if (bytes.size() != kBeaconHeaderBytes + 12u * n) return std::nullopt;
    const std::uint8_t status = bytes[34];
    if (status > 2) return std::nullopt;

    BeaconMessage msg;
    msg.drone_id = get_u32(&bytes[0]);
    msg.seq = get_u32(&bytes[4]);
    msg.time_ms = get_u64(&bytes[8]);
    msg.position.lat_1e7deg = get_i32(&bytes[16]);
    msg.position.lon_1e7deg = get_i32(&bytes[20]);
    msg.position.alt_mm = get_i32(&bytes[24]);
    for (int i = 0; i < 3; ++i) msg.velocity_cm_s[i] = get_i16(&bytes[28 + 2 * i]);
    msg.status = static_cast<DroneStatus>(status);
    msg.waypoints.resize(n);
    for (std::uint8_t i = 0; i < n; ++i) {
        const std::size_t off = kBeaconHeaderBytes + 12u * i;
        msg.waypoints[i].lat_1e7deg = get_i32(&bytes[off]);
        msg.waypoints[i].lon_1e7deg = get_i32(&bytes[off + 4]);
        msg.waypoints[i].alt_mm = get_i32(&bytes[off + 8]);
    }
    return msg;
}

MacResult mac_arbitrate(const std::vector<Transmission>& transmissions,
                        const std::vector<double>& rx_power_dbm,
                        const std::function<double(std::size_t, std::size_t)>& sense_dbm,
                        const MacConfig& config) {
    const std::size_t n = transmissions.size();
    MacResult result;
    result.verdicts.assign(n, MacVerdict::kClear);
    result.actual_start_s.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.actual_start_s[i] = transmissions[i].start_s;

    // Carrier sense: in chronological order, push a start past any ongoing
    // transmission the sender can hear. Repeat until stable since a deferral
    // can create a new overlap.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (transmissions[a].start_s != transmissions[b].start_s)
            return transmissions[a].start_s < transmissions[b].start_s;
        return transmissions[a].tx_id < transmissions[b].tx_id;
    });
    bool moved = true;
    for (int pass = 0; pass < 8 && moved; ++pass) {
        moved = false;
        for (std::size_t oi = 0; oi < n; ++oi) {
            const std::size_t i = order[oi];
            for (std::size_t oj = 0; oj < n; ++oj) {
                const std::size_t j = order[oj];
                if (i == j) continue;
                const double j_end = result.actual_start_s[j] + transmissions[j].duration_s;
                const bool ongoing = result.actual_start_s[j] < result.actual_start_s[i] &&
                                     j_end > result.actual_start_s[i];
                if (!ongoing) continue;
                if (sense_dbm(j, i) < config.carrier_sense_dbm) continue;
                result.actual_start_s[i] = j_end;
                moved = true;
            }
        }
    }

    // Residual overlaps at the receiver: capture or collide.
    for (std::size_t i = 0; i < n; ++i) {
        double strongest_rival = -std::numeric_limits<double>::infinity();
        bool overlapped = false;
        const double si = result.actual_start_s[i];
        const double ei = si + transmissions[i].duration_s;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double sj = result.actual_start_s[j];
            const double ej = sj + transmissions[j].duration_s;
            if (si < ej && sj < ei) {
                overlapped = true;
                strongest_rival = std::max(strongest_rival, rx_power_dbm[j]);
            }
        }
        if (overlapped && rx_power_dbm[i] < strongest_rival + config.capture_margin_db)
            result.verdicts[i] = MacVerdict::kCollided;
    }
    return result;
}

SeparationPrediction predict_min_separation(const Trajectory& a, const Trajectory& b, double t0,
                                            double horizon_s, double dt_s) {
    SeparationPrediction best;
    best.d_min_m = std::numeric_limits<double>::infinity();
    best.t_at_min_s = t0;
    const long steps = static_cast<long>(std::floor(horizon_s / dt_s));
    for (long k = 0; k <= steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt_s;
        const double d = distance(a.state_at(t).position, b.state_at(t).position);
        if (d < best.d_min_m) {
            best.d_min_m = d;
            best.t_at_min_s = t;
        }
    }
    return best;
}

const char* ca_mode_name(CaMode mode) {
    switch (mode) {
        case CaMode::kCruise: return "CRUISE";
        case CaMode::kConflict: return "CONFLICT";
        case CaMode::kHolding: return "HOLDING";
        case CaMode::kResume: return "RESUME";
    }
    return "UNKNOWN";
}

Trajectory trajectory_from_beacon(const BeaconMessage& msg, const GeodeticOrigin& origin,
                                  double fallback_speed_mps) {
    const Vec3 pos = to_local(origin, msg.position);
    const Vec3 vel{msg.velocity_cm_s[0] / 100.0, msg.velocity_cm_s[1] / 100.0,
                   msg.velocity_cm_s[2] / 100.0};
    const double speed = norm(vel);

    std::vector<Waypoint> wps;
    if (msg.status == DroneStatus::kHolding || (speed < 0.05 && msg.waypoints.empty())) {
        wps.push_back({pos, 0.0, 0.0});
        return Trajectory(std::move(wps), false);
    }
    const double leg_speed = speed > 0.05 ? speed : fallback_speed_mps;
    wps.push_back({pos, leg_speed, 0.0});
    Vec3 prev = pos;
    for (const auto& wp : msg.waypoints) {
        const Vec3 p = to_local(origin, wp);
        if (distance(prev, p) < 1e-9) continue;
        wps.push_back({p, leg_speed, 0.0});
        prev = p;
    }
    if (wps.size() == 1) {
        // No usable waypoints: extrapolate the state vector across a long leg.
        const Vec3 dir = speed > 0.05 ? normalized(vel) : Vec3{1.0, 0.0, 0.0};
        wps.push_back({pos + 3600.0 * leg_speed * dir, leg_speed, 0.0});
    }
    return Trajectory(std::move(wps), false);
}

namespace {

// Minimum predicted distance between the own plan (evaluated from its mission
// clock) and a partner model whose trajectory starts at the beacon instant.
double predicted_separation(const Trajectory& own_plan, double own_plan_time,
                            const Trajectory& partner, double horizon_s, double dt_s) {
    double d_min = std::numeric_limits<double>::infinity();
    const long steps = static_cast<long>(std::floor(horizon_s / dt_s));
    for (long k = 0; k <= steps; ++k) {
        const double tau = static_cast<double>(k) * dt_s;
        const double d = distance(own_plan.state_at(own_plan_time + tau).position,
                                  partner.state_at(tau).position);
        d_min = std::min(d_min, d);
    }
    return d_min;
}

}  // namespace

std::pair<CAState, CaCommands> ca_step(const CAState& state, std::uint32_t own_id,
                                       const Trajectory& own_plan, double own_plan_time,
                                       const std::vector<PartnerTrack>& partners, double t,
                                       const CaConfig& config) {
    CAState next = state;
    CaCommands cmd;

    const auto closest_conflict = [&]() -> std::pair<std::optional<std::uint32_t>, double> {
        std::optional<std::uint32_t> who;
        double d_min = std::numeric_limits<double>::infinity();
        for (const auto& p : partners) {
            const double d = predicted_separation(own_plan, own_plan_time, p.trajectory,
                                                  config.horizon_s, config.dt_s);
            if (d < d_min) {
                d_min = d;
                who = p.drone_id;
            }
        }
        return {who, d_min};
    };

    switch (state.mode) {
        case CaMode::kCruise: {
            if (partners.empty()) break;
            const auto [who, d_min] = closest_conflict();
            if (who && d_min < config.threshold_m) {
                next.mode = CaMode::kConflict;
                next.conflict_partner = who;
                cmd.partner = who;
                cmd.predicted_min_m = d_min;
            }
            break;
        }
        case CaMode::kConflict: {
            const auto [who, d_min] = closest_conflict();
            cmd.predicted_min_m = d_min;
            if (!who || d_min >= config.threshold_m) {
                next.mode = CaMode::kCruise;
                next.conflict_partner.reset();
                break;
            }
            next.conflict_partner = who;
            cmd.partner = who;
            bool hold_now = config.hold_both || own_id < *who;
            if (!hold_now) {
                // Higher id yields first to the partner's hold; it only stops
                // if the conflict persists against the partner's latest state.
                const auto partner = std::find_if(
                    partners.begin(), partners.end(),
                    [&](const PartnerTrack& p) { return p.drone_id == *who; });
                hold_now = partner == partners.end() ||
                           partner->status != DroneStatus::kHolding || d_min < config.threshold_m;
                if (partner != partners.end() && partner->status == DroneStatus::kHolding) {
                    hold_now = predicted_separation(own_plan, own_plan_time, partner->trajectory,
                                                    config.horizon_s, config.dt_s) <
                               config.threshold_m;
                }
            }
            if (hold_now) {
                next.mode = CaMode::kHolding;
                next.hold_since_s = t;
                next.clear_since_s.reset();
                cmd.hold = true;
                cmd.emergency = true;
            } else {
                next.mode = CaMode::kCruise;
                next.conflict_partner.reset();
            }
            break;
        }
        case CaMode::kHolding: {
            const auto [who, d_min] = closest_conflict();
            cmd.predicted_min_m = d_min;
            cmd.partner = state.conflict_partner;
            const bool clear =
                partners.empty() || d_min > config.threshold_m + config.hysteresis_m;
            if (clear) {
                if (!next.clear_since_s) next.clear_since_s = t;
                if (t - *next.clear_since_s >= config.dwell_s) {
                    next.mode = CaMode::kResume;
                    next.conflict_partner.reset();
                }
            } else {
                next.clear_since_s.reset();
                if (who) next.conflict_partner = who;
            }
            break;
        }
        case CaMode::kResume: {
            cmd.resume = true;
            next.mode = CaMode::kCruise;
            next.conflict_partner.reset();
            next.hold_since_s.reset();
            next.clear_since_s.reset();
            break;
        }
    }
    return {next, cmd};
}

const char* track_status_name(TrackStatus status) {
    switch (status) {
        case TrackStatus::kLive: return "LIVE";
        case TrackStatus::kStale: return "STALE";
        case TrackStatus::kLost: return "LOST";
    }
    return "UNKNOWN";
}

void TrackTable::update(const BeaconMessage& msg, double t) {
    auto it = entries_.find(msg.drone_id);
    if (it != entries_.end() && msg.seq <= it->second.last_beacon.seq) return;
    TrackEntry entry;
    entry.last_beacon = msg;
    entry.last_heard_s = t;
    entry.status = TrackStatus::kLive;
    entries_[msg.drone_id] = std::move(entry);
}

void TrackTable::age(double t) {
    for (auto& [id, entry] : entries_) {
        const double age = t - entry.last_heard_s;
        if (age > config_.lost_after_s)
            entry.status = TrackStatus::kLost;
        else if (age > config_.stale_after_s)
            entry.status = TrackStatus::kStale;
        else
            entry.status = TrackStatus::kLive;
    }
}

}  // namespace dronecast
