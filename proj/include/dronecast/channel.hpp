// SPDX-License-Identifier: Apache-2.0
//
// Geometrical-statistical channel model. Point scatterers and reflection
// surfaces are drawn once per scenario onto building faces and the ground;
// each snapshot then collects the line-of-sight, scattered and reflected
// paths between a drone pair and superimposes them into a narrowband gain.

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "dronecast/environment.hpp"
#include "dronecast/geom.hpp"
#include "dronecast/rng.hpp"

namespace dronecast {

struct PointScatterer {
    Vec3 position;
    Vec3 surface_normal;       // unit
    double opening_angle = 0.0; // half-angle of the visibility cone, (0, pi/2]
    double scattering_loss_db = 0.0;
};

struct ReflectionSurface {
    Vec3 center;
    Vec3 normal;       // unit
    Vec2 half_extents; // in-plane, meters
    double reflection_loss_db = 0.0;
};

enum class PathType { kLos, kScatter, kReflect };

struct MultipathComponent {
    double delay_s = 0.0;
    std::complex<double> amplitude; // linear voltage gain, antenna independent
    PathType path_type = PathType::kLos;
    Vec3 departure_dir; // unit, from TX toward the first interaction
    Vec3 arrival_dir;   // unit, from RX toward the last interaction
};

struct ChannelSnapshot {
    double t = 0.0;
    std::uint32_t tx_id = 0;
    std::uint32_t rx_id = 0;
    std::vector<MultipathComponent> components; // sorted by delay
};

// Direction-dependent attenuation of the own airframe: an azimuthal arm-lobe
// pattern plus a body cap above the belly-mounted antenna.
struct AirframeShadowMask {
    int lobe_count = 6;
    double lobe_depth_db = 0.0;
    double cap_elevation_rad = kPi / 3.0;
    double cap_depth_db = 0.0;
};

double airframe_attenuation(const AirframeShadowMask& mask, double azimuth_rad,
                            double elevation_rad);

// A drone end of a link: kinematic state plus its shadow mask.
struct Terminal {
    DroneState state;
    AirframeShadowMask mask;
};

struct ChannelConfig {
    double scatterer_density_per_m2 = 0.005; // on building faces
    double ground_scatterer_density_per_m2 = 0.0;
    double opening_angle_min_rad = deg2rad(20.0);
    double opening_angle_max_rad = deg2rad(80.0);
    double scattering_loss_min_db = 10.0;
    double scattering_loss_max_db = 25.0;
    double reflection_loss_min_db = 6.0;
    double reflection_loss_max_db = 15.0;
    double reflector_fraction_min = 0.4; // reflector size as fraction of its face
    double reflector_fraction_max = 0.9;
    bool ground_reflector = false;
    double ground_reflection_loss_db = 3.0;
    // Knife-edge fallback: when the direct path is blocked by exactly one
    // building and passes within this clearance of its roof line, the path is
    // kept with the penalty instead of being dropped.
    bool diffraction_enabled = true;
    double diffraction_clearance_m = 3.0;
    double diffraction_penalty_db = 20.0;
    // Constant implementation/antenna loss applied to every path.
    double system_loss_db = 0.0;
};

struct ChannelElements {
    std::vector<PointScatterer> scatterers;
    std::vector<ReflectionSurface> reflectors;
};

ChannelElements place_channel_elements(const UrbanScene& scene, const ChannelConfig& config,
                                       std::uint64_t rng_seed);

void write_elements_csv(std::ostream& os, const ChannelElements& elements);

double free_space_path_loss_db(double distance_m, double carrier_hz);

std::optional<MultipathComponent> los_component(const Terminal& tx, const Terminal& rx,
                                                const UrbanScene& scene, double carrier_hz,
                                                const ChannelConfig& config = {});

std::optional<MultipathComponent> scatter_component(const PointScatterer& s, const Terminal& tx,
                                                    const Terminal& rx, const UrbanScene& scene,
                                                    double carrier_hz,
                                                    const ChannelConfig& config = {});

std::optional<MultipathComponent> reflection_component(const ReflectionSurface& r,
                                                       const Terminal& tx, const Terminal& rx,
                                                       const UrbanScene& scene, double carrier_hz,
                                                       const ChannelConfig& config = {});

ChannelSnapshot channel_snapshot(const Terminal& tx, const Terminal& rx, const UrbanScene& scene,
                                 const ChannelElements& elements, double t, double carrier_hz,
                                 const ChannelConfig& config = {}, std::uint32_t tx_id = 0,
                                 std::uint32_t rx_id = 0);

struct NarrowbandGain {
    std::complex<double> gain;
    double power_db = 0.0; // -inf for an empty snapshot
};

NarrowbandGain narrowband_gain(const ChannelSnapshot& snapshot);

}  // namespace dronecast
