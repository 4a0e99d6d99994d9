// SPDX-License-Identifier: Apache-2.0

#include "dronecast/channel.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>

namespace dronecast {

double airframe_attenuation(const AirframeShadowMask& mask, double azimuth_rad,
                            double elevation_rad) {
    const double c = std::cos(static_cast<double>(mask.lobe_count) * azimuth_rad);
    const double lobe = std::max(0.0, c);
    double att = mask.lobe_depth_db * lobe * lobe;
    if (elevation_rad > mask.cap_elevation_rad) att += mask.cap_depth_db;
    return att;
}

double free_space_path_loss_db(double distance_m, double carrier_hz) {
    return 20.0 * std::log10(4.0 * kPi * distance_m * carrier_hz / kSpeedOfLight);
}

namespace {

// Attenuation seen by one terminal for a path leaving/arriving along dir
// (unit vector pointing away from the terminal).
double terminal_attenuation(const Terminal& term, const Vec3& dir) {
    const double az = wrap_angle(std::atan2(dir.y, dir.x) - term.state.heading);
    const double el = std::asin(std::clamp(dir.z, -1.0, 1.0));
    return airframe_attenuation(term.mask, az, el);
}

MultipathComponent make_component(PathType type, double path_length_m, double loss_db,
                                  const Terminal& tx, const Terminal& rx, const Vec3& departure,
                                  const Vec3& arrival, double carrier_hz,
                                  const ChannelConfig& config) {
    MultipathComponent mpc;
    mpc.path_type = type;
    mpc.delay_s = path_length_m / kSpeedOfLight;
    mpc.departure_dir = departure;
    mpc.arrival_dir = arrival;
    const double total_db = free_space_path_loss_db(path_length_m, carrier_hz) + loss_db +
                            terminal_attenuation(tx, departure) +
                            terminal_attenuation(rx, arrival) + config.system_loss_db;
    const double mag = std::pow(10.0, -total_db / 20.0);
    const double phase = -kTwoPi * carrier_hz * path_length_m / kSpeedOfLight;
    mpc.amplitude = std::polar(mag, phase);
    return mpc;
}

// In-plane basis of a reflection surface; v points up for vertical faces.
void surface_basis(const Vec3& normal, Vec3& u, Vec3& v) {
    if (std::abs(normal.z) < 0.99) {
        u = normalized(cross(Vec3{0.0, 0.0, 1.0}, normal));
        v = cross(normal, u);
    } else {
        u = {1.0, 0.0, 0.0};
        v = {0.0, 1.0, 0.0};
    }
}

struct Face {
    Vec3 center;
    Vec3 normal;
    Vec2 half; // (horizontal, vertical) for walls, (x, y) for the roof
};

std::vector<Face> building_faces(const Building& b) {
    const double hx = (b.footprint_max.x - b.footprint_min.x) / 2.0;
    const double hy = (b.footprint_max.y - b.footprint_min.y) / 2.0;
    const double cx = (b.footprint_min.x + b.footprint_max.x) / 2.0;
    const double cy = (b.footprint_min.y + b.footprint_max.y) / 2.0;
    const double hz = b.height / 2.0;
    return {
        {{b.footprint_max.x, cy, hz}, {1.0, 0.0, 0.0}, {hy, hz}},
        {{b.footprint_min.x, cy, hz}, {-1.0, 0.0, 0.0}, {hy, hz}},
        {{cx, b.footprint_max.y, hz}, {0.0, 1.0, 0.0}, {hx, hz}},
        {{cx, b.footprint_min.y, hz}, {0.0, -1.0, 0.0}, {hx, hz}},
        {{cx, cy, b.height}, {0.0, 0.0, 1.0}, {hx, hy}}, // roof
    };
}

}  // namespace

ChannelElements place_channel_elements(const UrbanScene& scene, const ChannelConfig& config,
                                       std::uint64_t rng_seed) {
    ChannelElements out;
    for (std::size_t bi = 0; bi < scene.buildings.size(); ++bi) {
        const auto faces = building_faces(scene.buildings[bi]);
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            const Face& face = faces[fi];
            Vec3 u, v;
            surface_basis(face.normal, u, v);
            const double area = 4.0 * face.half.x * face.half.y;

            Rng scat_rng = derive_rng(rng_seed, "scatter/b" + std::to_string(bi) + "/f" +
                                                    std::to_string(fi));
            const int count = scat_rng.poisson(config.scatterer_density_per_m2 * area);
            for (int k = 0; k < count; ++k) {
                PointScatterer s;
                const double du = scat_rng.uniform(-face.half.x, face.half.x);
                const double dv = scat_rng.uniform(-face.half.y, face.half.y);
                s.position = face.center + du * u + dv * v;
                s.surface_normal = face.normal;
                s.opening_angle =
                    scat_rng.uniform(config.opening_angle_min_rad, config.opening_angle_max_rad);
                s.scattering_loss_db =
                    scat_rng.uniform(config.scattering_loss_min_db, config.scattering_loss_max_db);
                out.scatterers.push_back(s);
            }

            if (fi < 4) { // one reflector candidate per vertical face
                Rng refl_rng = derive_rng(rng_seed, "reflect/b" + std::to_string(bi) + "/f" +
                                                        std::to_string(fi));
                ReflectionSurface r;
                const double fu =
                    refl_rng.uniform(config.reflector_fraction_min, config.reflector_fraction_max);
                const double fv =
                    refl_rng.uniform(config.reflector_fraction_min, config.reflector_fraction_max);
                r.half_extents = {fu * face.half.x, fv * face.half.y};
                const double su = face.half.x - r.half_extents.x;
                const double sv = face.half.y - r.half_extents.y;
                const double cu = refl_rng.uniform(-su, su);
                const double cv = refl_rng.uniform(-sv, sv);
                r.center = face.center + cu * u + cv * v;
                r.normal = face.normal;
                r.reflection_loss_db =
                    refl_rng.uniform(config.reflection_loss_min_db, config.reflection_loss_max_db);
                out.reflectors.push_back(r);
            }
        }
    }

    if (config.ground_scatterer_density_per_m2 > 0.0) {
        Rng ground_rng = derive_rng(rng_seed, "scatter/ground");
        const int count =
            ground_rng.poisson(config.ground_scatterer_density_per_m2 * scene.extent.area());
        for (int k = 0; k < count; ++k) {
            PointScatterer s;
            s.position = {ground_rng.uniform(scene.extent.lo.x, scene.extent.hi.x),
                          ground_rng.uniform(scene.extent.lo.y, scene.extent.hi.y), 0.0};
            bool inside = false;
            for (const auto& b : scene.buildings) {
                if (s.position.x >= b.footprint_min.x && s.position.x <= b.footprint_max.x &&
                    s.position.y >= b.footprint_min.y && s.position.y <= b.footprint_max.y) {
                    inside = true;
                    break;
                }
            }
            if (inside) continue;
            s.surface_normal = {0.0, 0.0, 1.0};
            s.opening_angle =
                ground_rng.uniform(config.opening_angle_min_rad, config.opening_angle_max_rad);
            s.scattering_loss_db =
                ground_rng.uniform(config.scattering_loss_min_db, config.scattering_loss_max_db);
            out.scatterers.push_back(s);
        }
    }

    if (config.ground_reflector) {
        ReflectionSurface ground;
        ground.center = {(scene.extent.lo.x + scene.extent.hi.x) / 2.0,
                         (scene.extent.lo.y + scene.extent.hi.y) / 2.0, 0.0};
        ground.normal = {0.0, 0.0, 1.0};
        ground.half_extents = {scene.extent.width() / 2.0, scene.extent.depth() / 2.0};
        ground.reflection_loss_db = config.ground_reflection_loss_db;
        out.reflectors.push_back(ground);
    }
    return out;
}

void write_elements_csv(std::ostream& os, const ChannelElements& elements) {
    os << "kind,x,y,z,nx,ny,nz,param1,loss_db\n";
    char line[220];
    for (const auto& s : elements.scatterers) {
        std::snprintf(line, sizeof(line), "scatterer,%.4f,%.4f,%.4f,%.3f,%.3f,%.3f,%.5f,%.3f\n",
                      s.position.x, s.position.y, s.position.z, s.surface_normal.x,
                      s.surface_normal.y, s.surface_normal.z, s.opening_angle,
                      s.scattering_loss_db);
        os << line;
    }
    for (const auto& r : elements.reflectors) {
        std::snprintf(line, sizeof(line), "reflector,%.4f,%.4f,%.4f,%.3f,%.3f,%.3f,%.3fx%.3f,%.3f\n",
                      r.center.x, r.center.y, r.center.z, r.normal.x, r.normal.y, r.normal.z,
                      r.half_extents.x, r.half_extents.y, r.reflection_loss_db);
        os << line;
    }
}

std::optional<MultipathComponent> los_component(const Terminal& tx, const Terminal& rx,
                                                const UrbanScene& scene, double carrier_hz,
                                                const ChannelConfig& config) {
    const Vec3 a = tx.state.position;
    const Vec3 b = rx.state.position;
    const double d = distance(a, b);
    if (d < 1e-9) return std::nullopt;
    if (segment_occluded(a, b, scene)) return std::nullopt;
    const Vec3 departure = normalized(b - a);
    const Vec3 arrival = normalized(a - b);
    return make_component(PathType::kLos, d, 0.0, tx, rx, departure, arrival, carrier_hz, config);
}

namespace {

// Knife-edge fallback for a direct path blocked by a single building close
// under its roof line.
std::optional<MultipathComponent> diffracted_component(const Terminal& tx, const Terminal& rx,
                                                       const UrbanScene& scene, double carrier_hz,
                                                       const ChannelConfig& config) {
    if (!config.diffraction_enabled) return std::nullopt;
    const auto hits = occluding_buildings(tx.state.position, rx.state.position, scene);
    if (hits.size() != 1) return std::nullopt;
    const Building& b = scene.buildings[hits.front()];

    // Clip the segment against the footprint slab to find the crossing, then
    // measure how far below the roof the path runs there.
    const Vec3 a = tx.state.position;
    const Vec3 c = rx.state.position;
    double t0 = 0.0, t1 = 1.0;
    const double p[2] = {a.x, a.y};
    const double d2[2] = {c.x - a.x, c.y - a.y};
    const double lo2[2] = {b.footprint_min.x, b.footprint_min.y};
    const double hi2[2] = {b.footprint_max.x, b.footprint_max.y};
    for (int i = 0; i < 2; ++i) {
        if (d2[i] == 0.0) continue;
        double ta = (lo2[i] - p[i]) / d2[i];
        double tb = (hi2[i] - p[i]) / d2[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 >= t1) return std::nullopt;
    const auto z_at = [&](double t) { return a.z + t * (c.z - a.z); };
    const double depth = b.height - std::max(z_at(t0), z_at(t1));
    if (depth > config.diffraction_clearance_m) return std::nullopt;

    const double d = distance(a, c);
    const Vec3 departure = normalized(c - a);
    const Vec3 arrival = normalized(a - c);
    return make_component(PathType::kLos, d, config.diffraction_penalty_db, tx, rx, departure,
                          arrival, carrier_hz, config);
}

}  // namespace

std::optional<MultipathComponent> scatter_component(const PointScatterer& s, const Terminal& tx,
                                                    const Terminal& rx, const UrbanScene& scene,
                                                    double carrier_hz,
                                                    const ChannelConfig& config) {
    const Vec3 to_tx = normalized(tx.state.position - s.position);
    const Vec3 to_rx = normalized(rx.state.position - s.position);
    const double cone_cos = std::cos(s.opening_angle);
    if (dot(to_tx, s.surface_normal) < cone_cos) return std::nullopt;
    if (dot(to_rx, s.surface_normal) < cone_cos) return std::nullopt;
    if (segment_occluded(tx.state.position, s.position, scene)) return std::nullopt;
    if (segment_occluded(s.position, rx.state.position, scene)) return std::nullopt;
    const double d1 = distance(tx.state.position, s.position);
    const double d2 = distance(s.position, rx.state.position);
    if (d1 < 1e-9 || d2 < 1e-9) return std::nullopt;
    const Vec3 departure = normalized(s.position - tx.state.position);
    const Vec3 arrival = normalized(s.position - rx.state.position);
    return make_component(PathType::kScatter, d1 + d2, s.scattering_loss_db, tx, rx, departure,
                          arrival, carrier_hz, config);
}

std::optional<MultipathComponent> reflection_component(const ReflectionSurface& r,
                                                       const Terminal& tx, const Terminal& rx,
                                                       const UrbanScene& scene, double carrier_hz,
                                                       const ChannelConfig& config) {
    const Vec3 a = tx.state.position;
    const Vec3 b = rx.state.position;
    const double side_tx = dot(a - r.center, r.normal);
    const double side_rx = dot(b - r.center, r.normal);
    if (side_tx <= 0.0 || side_rx <= 0.0) return std::nullopt;

    // Image method: mirror TX about the surface plane, intersect with RX ray.
    const Vec3 mirrored = a - 2.0 * side_tx * r.normal;
    const double denom = dot(b - mirrored, r.normal);
    if (denom <= 0.0) return std::nullopt;
    const double t = dot(r.center - mirrored, r.normal) / denom;
    if (t <= 0.0 || t >= 1.0) return std::nullopt;
    const Vec3 specular = mirrored + t * (b - mirrored);

    Vec3 u, v;
    surface_basis(r.normal, u, v);
    const Vec3 rel = specular - r.center;
    if (std::abs(dot(rel, u)) > r.half_extents.x) return std::nullopt;
    if (std::abs(dot(rel, v)) > r.half_extents.y) return std::nullopt;

    if (segment_occluded(a, specular, scene)) return std::nullopt;
    if (segment_occluded(specular, b, scene)) return std::nullopt;

    const double d_total = distance(a, specular) + distance(specular, b);
    const Vec3 departure = normalized(specular - a);
    const Vec3 arrival = normalized(specular - b);
    return make_component(PathType::kReflect, d_total, r.reflection_loss_db, tx, rx, departure,
                          arrival, carrier_hz, config);
}

ChannelSnapshot channel_snapshot(const Terminal& tx, const Terminal& rx, const UrbanScene& scene,
                                 const ChannelElements& elements, double t, double carrier_hz,
                                 const ChannelConfig& config, std::uint32_t tx_id,
                                 std::uint32_t rx_id) {
    ChannelSnapshot snap;
    snap.t = t;
    snap.tx_id = tx_id;
    snap.rx_id = rx_id;

    if (auto los = los_component(tx, rx, scene, carrier_hz, config)) {
        snap.components.push_back(*los);
    } else if (auto diff = diffracted_component(tx, rx, scene, carrier_hz, config)) {
        snap.components.push_back(*diff);
    }
    for (const auto& s : elements.scatterers) {
        if (auto mpc = scatter_component(s, tx, rx, scene, carrier_hz, config))
            snap.components.push_back(*mpc);
    }
    for (const auto& r : elements.reflectors) {
        if (auto mpc = reflection_component(r, tx, rx, scene, carrier_hz, config))
            snap.components.push_back(*mpc);
    }
    std::stable_sort(snap.components.begin(), snap.components.end(),
                     [](const MultipathComponent& x, const MultipathComponent& y) {
                         return x.delay_s < y.delay_s;
                     });
    return snap;
}

NarrowbandGain narrowband_gain(const ChannelSnapshot& snapshot) {
    NarrowbandGain out;
    out.gain = {0.0, 0.0};
    for (const auto& c : snapshot.components) out.gain += c.amplitude;
    const double mag = std::abs(out.gain);
    out.power_db =
        mag > 0.0 ? 20.0 * std::log10(mag) : -std::numeric_limits<double>::infinity();
    if (snapshot.components.empty())
        out.power_db = -std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace dronecast
