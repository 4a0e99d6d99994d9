// SPDX-License-Identifier: Apache-2.0
//
// Urban scene and drone kinematics: axis-aligned extruded buildings, a
// statistical building-layout generator, waypoint trajectories with holds,
// line-of-sight occlusion tests and the three flight mission presets.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dronecast/geom.hpp"
#include "dronecast/rng.hpp"

namespace dronecast {

struct Building {
    Vec2 footprint_min;
    Vec2 footprint_max;
    double height = 0.0;

    bool contains(Vec3 p) const {
        return p.x >= footprint_min.x && p.x <= footprint_max.x && p.y >= footprint_min.y &&
               p.y <= footprint_max.y && p.z >= 0.0 && p.z <= height;
    }
};

struct Rect2 {
    Vec2 lo;
    Vec2 hi;
    double width() const { return hi.x - lo.x; }
    double depth() const { return hi.y - lo.y; }
    double area() const { return width() * depth(); }
};

// Statistical building-layout parameters: built-up area fraction, building
// count per square kilometer and the Rayleigh scale of building heights.
struct P1410Params {
    double built_fraction = 0.1;      // alpha, in (0,1)
    double buildings_per_km2 = 100.0; // beta
    double height_scale_m = 15.0;     // gamma
};

struct UrbanScene {
    std::vector<Building> buildings;
    Rect2 extent{{0.0, 0.0}, {1000.0, 1000.0}};
};

// Uniform non-overlapping placement of square-footprint buildings so that the
// built fraction and density hold in expectation. Throws std::runtime_error
// when the requested density cannot be placed within the rejection budget.
std::vector<Building> generate_buildings(const P1410Params& params, const Rect2& area,
                                         std::uint64_t rng_seed);

// True iff the open segment (p1, p2) passes through the interior of any
// building volume. Symmetric in its endpoints.
bool segment_occluded(const Vec3& p1, const Vec3& p2, const UrbanScene& scene);

// Buildings intersected by the open segment, in scene order.
std::vector<std::size_t> occluding_buildings(const Vec3& p1, const Vec3& p2,
                                             const UrbanScene& scene);

void write_buildings_csv(std::ostream& os, const std::vector<Building>& buildings);

struct Waypoint {
    Vec3 position;
    double speed_to_next = 0.0; // m/s
    double hold_duration = 0.0; // s
};

struct DroneState {
    Vec3 position;
    Vec3 velocity;
    double heading = 0.0; // yaw toward next waypoint, [0, 2*pi)
};

// Piecewise-linear waypoint path with per-segment speeds and holds. Immutable
// after construction; the segment table is compiled once so state lookups are
// O(log n) in the waypoint count.
class Trajectory {
public:
    Trajectory(std::vector<Waypoint> waypoints, bool loop);

    // Kinematic state at time t >= 0. A non-looping trajectory holds its last
    // position forever; a looping one wraps at period().
    DroneState state_at(double t) const;

    // Time of one full cycle (loop) or time to reach and finish the last
    // waypoint (no loop).
    double period() const { return total_time_; }

    bool loops() const { return loop_; }
    const std::vector<Waypoint>& waypoints() const { return waypoints_; }

    // Upcoming waypoint positions strictly after time t, at most max_count.
    std::vector<Vec3> upcoming_waypoints(double t, std::size_t max_count) const;

    double max_speed() const { return max_speed_; }

private:
    struct Segment {
        double t_start = 0.0;
        double t_end = 0.0;
        Vec3 from;
        Vec3 to;
        double speed = 0.0;   // 0 during holds
        double heading = 0.0;
        std::size_t next_waypoint = 0; // index of the waypoint this segment heads to
    };

    std::vector<Waypoint> waypoints_;
    bool loop_ = false;
    std::vector<Segment> segments_;
    double total_time_ = 0.0;
    double max_speed_ = 0.0;
};

DroneState trajectory_state(const Trajectory& traj, double t);

// Perturbs every waypoint with zero-mean Gaussian noise; mimics the scatter of
// real flown tracks around the planned mission.
Trajectory with_waypoint_jitter(const Trajectory& traj, double sigma_m, Rng& rng);

struct MissionConfig {
    double circle_radius_m = 30.0;
    std::vector<double> circle_heights_m = {10.0, 15.0, 20.0, 15.0};
    int circle_segments = 16384; // waypoints per lap; dense enough that the
                                 // chord sagitta stays below 1e-6 m
    double speed_mps = 5.0;
    double hover_height_m = 15.0;
    double m2_tx_distance_m = 70.0;
    double m2_tx_azimuth_rad = 0.0;
    double m3_height_m = 20.0;
    double m3_lateral_separation_m = 10.0;
    double m3_max_distance_m = 60.0;
};

struct MissionTrajectories {
    Trajectory tx;
    Trajectory rx;
};

// Flight geometry of missions 1-3: hover-and-orbit, displaced hover-and-orbit
// and the parallel-track closing/opening shuttle.
MissionTrajectories make_mission_preset(int id, const MissionConfig& config = {});

}  // namespace dronecast
