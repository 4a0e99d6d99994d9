// SPDX-License-Identifier: Apache-2.0

#include "dronecast/environment.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace dronecast {

namespace {

bool footprints_overlap(const Building& a, const Building& b) {
    return a.footprint_min.x < b.footprint_max.x && a.footprint_max.x > b.footprint_min.x &&
           a.footprint_min.y < b.footprint_max.y && a.footprint_max.y > b.footprint_min.y;
}

// Slab test of the open segment against a closed box. Touching a face in a
// set of measure zero does not count as an intersection, so paths that start
// or end exactly on a wall (scatterer anchors) are not self-occluded.
bool segment_intersects_box(const Vec3& p1, const Vec3& p2, const Vec3& lo, const Vec3& hi) {
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[3] = {p1.x, p1.y, p1.z};
    const double d[3] = {p2.x - p1.x, p2.y - p1.y, p2.z - p1.z};
    const double bl[3] = {lo.x, lo.y, lo.z};
    const double bh[3] = {hi.x, hi.y, hi.z};
    for (int i = 0; i < 3; ++i) {
        if (d[i] == 0.0) {
            if (p[i] < bl[i] || p[i] > bh[i]) return false;
            continue;
        }
        double ta = (bl[i] - p[i]) / d[i];
        double tb = (bh[i] - p[i]) / d[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1) return false;
    }
    return true;
}

}  // namespace

std::vector<Building> generate_buildings(const P1410Params& params, const Rect2& area,
                                         std::uint64_t rng_seed) {
    if (area.width() <= 0.0 || area.depth() <= 0.0)
        throw std::runtime_error("generate_buildings: area extent must be positive");
    if (params.buildings_per_km2 < 0.0 || params.height_scale_m <= 0.0)
        throw std::runtime_error("generate_buildings: invalid density parameters");
    if (params.buildings_per_km2 == 0.0) return {};
    if (params.built_fraction <= 0.0 || params.built_fraction >= 1.0)
        throw std::runtime_error("generate_buildings: built fraction must be in (0,1)");

    const double area_km2 = area.area() / 1e6;
    // Square footprints with side sqrt(alpha/beta) reproduce the built
    // fraction exactly at the expected count.
    const double side = 1000.0 * std::sqrt(params.built_fraction / params.buildings_per_km2);
    if (side > area.width() || side > area.depth())
        throw std::runtime_error("generate_buildings: building footprint exceeds area extent");

    Rng rng(rng_seed);
    const int target = rng.poisson(params.buildings_per_km2 * area_km2);

    std::vector<Building> placed;
    placed.reserve(static_cast<std::size_t>(target));
    const long max_attempts = 200L * std::max(target, 1);
    long attempts = 0;
    while (static_cast<int>(placed.size()) < target) {
        if (++attempts > max_attempts)
            throw std::runtime_error(
                "generate_buildings: density infeasible, rejection budget exhausted");
        const double cx = rng.uniform(area.lo.x + side / 2.0, area.hi.x - side / 2.0);
        const double cy = rng.uniform(area.lo.y + side / 2.0, area.hi.y - side / 2.0);
        Building b;
        b.footprint_min = {cx - side / 2.0, cy - side / 2.0};
        b.footprint_max = {cx + side / 2.0, cy + side / 2.0};
        b.height = 0.0;
        bool overlaps = false;
        for (const auto& other : placed) {
            if (footprints_overlap(b, other)) {
                overlaps = true;
                break;
            }
        }
        if (overlaps) continue;
        placed.push_back(b);
    }
    for (auto& b : placed) b.height = rng.rayleigh(params.height_scale_m);
    return placed;
}

bool segment_occluded(const Vec3& p1, const Vec3& p2, const UrbanScene& scene) {
    for (const auto& b : scene.buildings) {
        const Vec3 lo{b.footprint_min.x, b.footprint_min.y, 0.0};
        const Vec3 hi{b.footprint_max.x, b.footprint_max.y, b.height};
        if (segment_intersects_box(p1, p2, lo, hi)) return true;
    }
    return false;
}

std::vector<std::size_t> occluding_buildings(const Vec3& p1, const Vec3& p2,
                                             const UrbanScene& scene) {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
        const auto& b = scene.buildings[i];
        const Vec3 lo{b.footprint_min.x, b.footprint_min.y, 0.0};
        const Vec3 hi{b.footprint_max.x, b.footprint_max.y, b.height};
        if (segment_intersects_box(p1, p2, lo, hi)) hits.push_back(i);
    }
    return hits;
}

void write_buildings_csv(std::ostream& os, const std::vector<Building>& buildings) {
    os << "xmin,ymin,xmax,ymax,height\n";
    char line[160];
    for (const auto& b : buildings) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f,%.6f\n", b.footprint_min.x,
                      b.footprint_min.y, b.footprint_max.x, b.footprint_max.y, b.height);
        os << line;
    }
}

namespace {

double heading_of(const Vec3& from, const Vec3& to, double fallback) {
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    if (dx * dx + dy * dy < 1e-18) return fallback;
    return wrap_angle(std::atan2(dy, dx));
}

}  // namespace

Trajectory::Trajectory(std::vector<Waypoint> waypoints, bool loop)
    : waypoints_(std::move(waypoints)), loop_(loop) {
    if (waypoints_.empty()) throw std::invalid_argument("Trajectory: needs at least one waypoint");
    for (std::size_t i = 0; i < waypoints_.size(); ++i) {
        const auto& w = waypoints_[i];
        if (w.speed_to_next < 0.0 || w.hold_duration < 0.0)
            throw std::invalid_argument("Trajectory: negative speed or hold duration");
        if (i + 1 < waypoints_.size()) {
            if (distance(w.position, waypoints_[i + 1].position) < 1e-12 && w.hold_duration <= 0.0)
                throw std::invalid_argument(
                    "Trajectory: duplicate consecutive positions need a hold duration");
        }
    }

    const std::size_t n = waypoints_.size();
    double t = 0.0;
    double last_heading = 0.0;
    // Seed the heading with the first horizontal displacement, if any.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = heading_of(waypoints_[i].position, waypoints_[i + 1].position, -1.0);
        if (h >= 0.0) {
            last_heading = h;
            break;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& w = waypoints_[i];
        const std::size_t next = (i + 1) % n;
        const bool has_leg = loop_ ? true : (i + 1 < n);
        if (w.hold_duration > 0.0) {
            Segment hold;
            hold.t_start = t;
            hold.t_end = t + w.hold_duration;
            hold.from = hold.to = w.position;
            hold.speed = 0.0;
            hold.heading =
                has_leg ? heading_of(w.position, waypoints_[next].position, last_heading)
                        : last_heading;
            hold.next_waypoint = has_leg ? next : i;
            last_heading = hold.heading;
            segments_.push_back(hold);
            t = hold.t_end;
        }
        if (!has_leg) break;
        const Vec3 from = w.position;
        const Vec3 to = waypoints_[next].position;
        const double len = distance(from, to);
        if (len < 1e-12) continue; // coincident ring closure
        if (w.speed_to_next <= 0.0)
            throw std::invalid_argument("Trajectory: zero speed on a moving leg");
        Segment move;
        move.t_start = t;
        move.t_end = t + len / w.speed_to_next;
        move.from = from;
        move.to = to;
        move.speed = w.speed_to_next;
        move.heading = heading_of(from, to, last_heading);
        move.next_waypoint = next;
        last_heading = move.heading;
        max_speed_ = std::max(max_speed_, move.speed);
        segments_.push_back(move);
        t = move.t_end;
    }
    total_time_ = t;
    if (loop_ && total_time_ <= 0.0)
        throw std::invalid_argument("Trajectory: looping trajectory needs positive duration");
}

DroneState Trajectory::state_at(double t) const {
    DroneState state;
    if (segments_.empty()) {
        // single waypoint, no hold: permanent hover
        state.position = waypoints_.front().position;
        state.velocity = {0.0, 0.0, 0.0};
        state.heading = 0.0;
        return state;
    }
    double tau = t;
    if (loop_) {
        tau = std::fmod(t, total_time_);
        if (tau < 0.0) tau += total_time_;
    } else if (tau >= total_time_) {
        const auto& last = segments_.back();
        state.position = last.to;
        state.velocity = {0.0, 0.0, 0.0};
        state.heading = last.heading;
        return state;
    }

    // Find the segment with t_start <= tau < t_end.
    std::size_t lo = 0;
    std::size_t hi = segments_.size();
    while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (segments_[mid].t_start <= tau)
            lo = mid;
        else
            hi = mid;
    }
    const auto& seg = segments_[lo];
    state.heading = seg.heading;
    if (seg.speed <= 0.0 || seg.t_end <= seg.t_start) {
        state.position = seg.from;
        state.velocity = {0.0, 0.0, 0.0};
        return state;
    }
    const double frac = std::clamp((tau - seg.t_start) / (seg.t_end - seg.t_start), 0.0, 1.0);
    state.position = seg.from + frac * (seg.to - seg.from);
    state.velocity = seg.speed * normalized(seg.to - seg.from);
    return state;
}

DroneState trajectory_state(const Trajectory& traj, double t) { return traj.state_at(t); }

std::vector<Vec3> Trajectory::upcoming_waypoints(double t, std::size_t max_count) const {
    std::vector<Vec3> out;
    if (segments_.empty() || max_count == 0) return out;
    double tau = t;
    if (loop_) {
        tau = std::fmod(t, total_time_);
        if (tau < 0.0) tau += total_time_;
    } else if (tau >= total_time_) {
        return out;
    }
    std::size_t lo = 0;
    std::size_t hi = segments_.size();
    while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (segments_[mid].t_start <= tau)
            lo = mid;
        else
            hi = mid;
    }
    std::size_t wp = segments_[lo].next_waypoint;
    const std::size_t n = waypoints_.size();
    for (std::size_t k = 0; k < max_count; ++k) {
        out.push_back(waypoints_[wp].position);
        if (wp + 1 >= n && !loop_) break;
        wp = (wp + 1) % n;
    }
    return out;
}

Trajectory with_waypoint_jitter(const Trajectory& traj, double sigma_m, Rng& rng) {
    std::vector<Waypoint> wps = traj.waypoints();
    for (auto& w : wps) {
        w.position.x += rng.normal(0.0, sigma_m);
        w.position.y += rng.normal(0.0, sigma_m);
        w.position.z += rng.normal(0.0, sigma_m);
    }
    return Trajectory(std::move(wps), traj.loops());
}

namespace {

// One orbit lap appended as circle_segments waypoints at the given height.
void append_lap(std::vector<Waypoint>& wps, const MissionConfig& cfg, double height) {
    const int n = cfg.circle_segments;
    for (int k = 0; k < n; ++k) {
        const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        Waypoint w;
        w.position = {cfg.circle_radius_m * std::cos(theta), cfg.circle_radius_m * std::sin(theta),
                      height};
        w.speed_to_next = cfg.speed_mps;
        w.hold_duration = 0.0;
        wps.push_back(w);
    }
}

Trajectory make_orbit(const MissionConfig& cfg) {
    std::vector<Waypoint> wps;
    wps.reserve(static_cast<std::size_t>(cfg.circle_segments) * cfg.circle_heights_m.size());
    for (double h : cfg.circle_heights_m) append_lap(wps, cfg, h);
    return Trajectory(std::move(wps), /*loop=*/true);
}

Trajectory make_hover(Vec3 position) {
    return Trajectory({Waypoint{position, 0.0, 0.0}}, /*loop=*/false);
}

}  // namespace

MissionTrajectories make_mission_preset(int id, const MissionConfig& cfg) {
    switch (id) {
        case 1: {
            Trajectory tx = make_hover({0.0, 0.0, cfg.hover_height_m});
            return {std::move(tx), make_orbit(cfg)};
        }
        case 2: {
            const Vec3 hover{cfg.m2_tx_distance_m * std::cos(cfg.m2_tx_azimuth_rad),
                             cfg.m2_tx_distance_m * std::sin(cfg.m2_tx_azimuth_rad),
                             cfg.hover_height_m};
            return {make_hover(hover), make_orbit(cfg)};
        }
        case 3: {
            const double dy = cfg.m3_lateral_separation_m;
            const double track =
                std::sqrt(cfg.m3_max_distance_m * cfg.m3_max_distance_m - dy * dy);
            const double z = cfg.m3_height_m;
            Trajectory tx(
                {Waypoint{{0.0, 0.0, z}, cfg.speed_mps, 0.0},
                 Waypoint{{track, 0.0, z}, cfg.speed_mps, 0.0}},
                /*loop=*/true);
            Trajectory rx(
                {Waypoint{{track, dy, z}, cfg.speed_mps, 0.0},
                 Waypoint{{0.0, dy, z}, cfg.speed_mps, 0.0}},
                /*loop=*/true);
            return {std::move(tx), std::move(rx)};
        }
        default:
            throw std::invalid_argument("make_mission_preset: id must be 1, 2 or 3");
    }
}

}  // namespace dronecast
