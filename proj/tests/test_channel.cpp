// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dronecast/channel.hpp"

using namespace dronecast;

namespace {

constexpr double kFc = 5050e6;

Terminal at(Vec3 position, double heading = 0.0, AirframeShadowMask mask = {}) {
    Terminal t;
    t.state.position = position;
    t.state.heading = heading;
    t.mask = mask;
    return t;
}

}  // namespace

TEST_CASE("free-space path loss at 100 m and 5050 MHz") {
    CHECK(free_space_path_loss_db(100.0, kFc) == doctest::Approx(86.51).epsilon(0.0012));
}

TEST_CASE("line-of-sight component follows the free-space law") {
    UrbanScene scene;
    const auto los = los_component(at({0, 0, 10}), at({100, 0, 10}), scene, kFc);
    REQUIRE(los.has_value());
    const double loss_db = -20.0 * std::log10(std::abs(los->amplitude));
    CHECK(loss_db == doctest::Approx(86.51).epsilon(0.0012));
    CHECK(los->delay_s == doctest::Approx(100.0 / kSpeedOfLight));
    CHECK(los->path_type == PathType::kLos);

    // Doubling the distance halves the amplitude.
    const auto far = los_component(at({0, 0, 10}), at({200, 0, 10}), scene, kFc);
    REQUIRE(far.has_value());
    CHECK(std::abs(los->amplitude) / std::abs(far->amplitude) == doctest::Approx(2.0));
}

TEST_CASE("line-of-sight vanishes behind a building") {
    UrbanScene scene;
    scene.buildings.push_back({{40, -10}, {60, 10}, 50.0});
    ChannelConfig cfg;
    cfg.diffraction_enabled = false;
    CHECK_FALSE(los_component(at({0, 0, 10}), at({100, 0, 10}), scene, kFc, cfg).has_value());
}

TEST_CASE("airframe attenuation: lobes, gaps, cap and periodicity") {
    AirframeShadowMask mask;
    mask.lobe_count = 6;
    mask.lobe_depth_db = 12.0;
    mask.cap_elevation_rad = deg2rad(30.0);
    mask.cap_depth_db = 7.0;

    AirframeShadowMask neutral;
    CHECK(airframe_attenuation(neutral, 1.23, 0.45) == 0.0);

    CHECK(airframe_attenuation(mask, 0.0, 0.0) == doctest::Approx(12.0));
    // Between lobes the cosine is negative and clamps to zero.
    CHECK(airframe_attenuation(mask, kPi / 6.0, 0.0) == doctest::Approx(0.0));
    CHECK(airframe_attenuation(mask, 0.3, deg2rad(35.0)) ==
          doctest::Approx(airframe_attenuation(mask, 0.3, 0.0) + 7.0));
    for (double az : {0.1, 0.9, 2.5}) {
        CHECK(airframe_attenuation(mask, az + kTwoPi / 6.0, 0.0) ==
              doctest::Approx(airframe_attenuation(mask, az, 0.0)).epsilon(1e-9));
    }
}

TEST_CASE("scatterer: cone visibility and occlusion gates") {
    UrbanScene scene;
    PointScatterer s;
    s.position = {50, 0, 10};
    s.surface_normal = {-1, 0, 0};
    s.opening_angle = kPi / 2.0;
    s.scattering_loss_db = 0.0;

    // Receiver behind the scatterer's surface.
    CHECK_FALSE(
        scatter_component(s, at({0, 0, 10}), at({80, 0, 10}), scene, kFc).has_value());

    // Loss-free, fully open scatterer on a collinear unobstructed path has
    // exactly the free-space magnitude over the total path length.
    const auto mpc = scatter_component(s, at({0, 0, 10}), at({20, 0, 10}), scene, kFc);
    REQUIRE(mpc.has_value());
    const double total = 50.0 + 30.0;
    CHECK(std::abs(mpc->amplitude) ==
          doctest::Approx(std::pow(10.0, -free_space_path_loss_db(total, kFc) / 20.0)));
    CHECK(mpc->delay_s == doctest::Approx(total / kSpeedOfLight));

    // Blocking the first sub-segment removes the path.
    UrbanScene blocked = scene;
    blocked.buildings.push_back({{24, -5}, {30, 5}, 40.0});
    CHECK_FALSE(
        scatter_component(s, at({0, 0, 10}), at({20, 0, 10}), blocked, kFc).has_value());
    // Narrow cone rejects oblique arrivals.
    s.opening_angle = deg2rad(10.0);
    CHECK_FALSE(
        scatter_component(s, at({0, 40, 10}), at({20, 0, 10}), scene, kFc).has_value());
}

TEST_CASE("reflection: image-method symmetry on a large wall") {
    UrbanScene scene;
    ReflectionSurface wall;
    wall.center = {0, 50, 10};
    wall.normal = {0, -1, 0};
    wall.half_extents = {100, 10};
    wall.reflection_loss_db = 3.0;

    // TX and RX symmetric about the wall's midplane.
    const auto mpc = reflection_component(wall, at({-30, 0, 10}), at({30, 0, 10}), scene, kFc);
    REQUIRE(mpc.has_value());
    const Vec3 mirrored{-30, 100, 10};
    const double expect = distance(mirrored, {30, 0, 10});
    CHECK(mpc->delay_s * kSpeedOfLight == doctest::Approx(expect).epsilon(1e-12));
    // Specular point at the midpoint projection on the wall.
    CHECK(mpc->departure_dir.x == doctest::Approx((0.0 - (-30.0)) / (expect / 2.0) * 0.5).epsilon(0.2));

    // Specular point (x = -10 for this pair) outside the surface extents.
    wall.half_extents = {5, 10};
    CHECK_FALSE(
        reflection_component(wall, at({-60, 0, 10}), at({40, 0, 10}), scene, kFc).has_value());
}

TEST_CASE("reflection: mirror-image identity over random configurations") {
    Rng rng(2024);
    UrbanScene scene;
    int produced = 0;
    for (int i = 0; i < 1000; ++i) {
        ReflectionSurface wall;
        const double az = rng.uniform(0, kTwoPi);
        wall.normal = {std::cos(az), std::sin(az), 0.0};
        wall.center = {rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(5, 15)};
        wall.half_extents = {rng.uniform(20, 60), rng.uniform(10, 30)};
        wall.reflection_loss_db = rng.uniform(0, 10);

        const Vec3 offset_a = (rng.uniform(5, 60) * wall.normal);
        const Vec3 offset_b = (rng.uniform(5, 60) * wall.normal);
        const Terminal tx = at(wall.center + offset_a +
                               Vec3{rng.uniform(-20, 20), rng.uniform(-20, 20), 0});
        const Terminal rx = at(wall.center + offset_b +
                               Vec3{rng.uniform(-20, 20), rng.uniform(-20, 20), 0});
        const auto mpc = reflection_component(wall, tx, rx, scene, kFc);
        if (!mpc) continue;
        ++produced;
        const double side = dot(tx.state.position - wall.center, wall.normal);
        const Vec3 mirrored = tx.state.position - 2.0 * side * wall.normal;
        CHECK(mpc->delay_s * kSpeedOfLight ==
              doctest::Approx(distance(mirrored, rx.state.position)).epsilon(1e-11));
    }
    CHECK(produced > 300);
}

TEST_CASE("element placement: densities follow the face areas") {
    UrbanScene scene;
    scene.extent = {{-50, -50}, {50, 50}};
    scene.buildings.push_back({{-5, -5}, {5, 5}, 20.0}); // 4 x 10 x 20 walls + 10 x 10 roof

    ChannelConfig cfg;
    cfg.scatterer_density_per_m2 = 0.01; // expected 9 scatterers

    // Sum over 100 seeds ~ Poisson(900); 99% two-sided bounds.
    int total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        total += static_cast<int>(place_channel_elements(scene, cfg, seed).scatterers.size());
    CHECK(total > 823);
    CHECK(total < 978);

    // One reflector candidate per vertical face.
    const auto elements = place_channel_elements(scene, cfg, 1);
    CHECK(elements.reflectors.size() == 4);
    for (const auto& r : elements.reflectors) {
        CHECK(std::abs(r.normal.z) < 1e-12);
        CHECK(r.half_extents.x > 0.0);
        CHECK(r.reflection_loss_db >= cfg.reflection_loss_min_db);
        CHECK(r.reflection_loss_db <= cfg.reflection_loss_max_db);
    }

    // Determinism per seed.
    const auto again = place_channel_elements(scene, cfg, 1);
    REQUIRE(again.scatterers.size() == elements.scatterers.size());
    for (std::size_t i = 0; i < again.scatterers.size(); ++i)
        CHECK(distance(again.scatterers[i].position, elements.scatterers[i].position) == 0.0);

    // Empty scene with zero ground density -> nothing.
    UrbanScene empty;
    cfg.ground_scatterer_density_per_m2 = 0.0;
    const auto none = place_channel_elements(empty, cfg, 3);
    CHECK(none.scatterers.empty());
    CHECK(none.reflectors.empty());
}

TEST_CASE("snapshot: single clear path, blocked path, exhaustive element oracle") {
    UrbanScene scene;
    scene.extent = {{-100, -100}, {200, 200}};
    ChannelConfig cfg;
    ChannelElements no_elements;

    const auto clear =
        channel_snapshot(at({0, 0, 10}), at({60, 0, 10}), scene, no_elements, 0.0, kFc, cfg);
    CHECK(clear.components.size() == 1);

    UrbanScene blocked = scene;
    blocked.buildings.push_back({{20, -30}, {40, 30}, 80.0}); // far deeper than any clearance
    const auto empty =
        channel_snapshot(at({0, 0, 10}), at({60, 0, 10}), blocked, no_elements, 0.0, kFc, cfg);
    CHECK(empty.components.empty());

    // Component count equals evaluating every element independently.
    UrbanScene city;
    city.extent = {{-100, -100}, {200, 200}};
    Rng rng(31);
    for (int i = 0; i < 6; ++i) {
        const double x = rng.uniform(-60, 120);
        const double y = rng.uniform(-60, 120);
        city.buildings.push_back(
            {{x, y}, {x + rng.uniform(8, 20), y + rng.uniform(8, 20)}, rng.uniform(8, 16)});
    }
    cfg.scatterer_density_per_m2 = 0.02;
    cfg.ground_scatterer_density_per_m2 = 0.001;
    cfg.ground_reflector = true;
    cfg.opening_angle_min_rad = deg2rad(60.0);
    cfg.opening_angle_max_rad = deg2rad(90.0);
    const auto elements = place_channel_elements(city, cfg, 77);
    const Terminal tx = at({-40, -40, 22});
    const Terminal rx = at({150, 150, 20});
    const auto snap = channel_snapshot(tx, rx, city, elements, 0.0, kFc, cfg);

    std::size_t expected = los_component(tx, rx, city, kFc, cfg).has_value() ? 1 : 0;
    for (const auto& s : elements.scatterers)
        if (scatter_component(s, tx, rx, city, kFc, cfg)) ++expected;
    for (const auto& r : elements.reflectors)
        if (reflection_component(r, tx, rx, city, kFc, cfg)) ++expected;
    CHECK(snap.components.size() == expected);
    CHECK(expected > 1); // the scene actually produced multipath

    // Sorted by delay, and every non-LOS path is longer than the direct one.
    const double direct_delay = distance(tx.state.position, rx.state.position) / kSpeedOfLight;
    for (std::size_t i = 0; i < snap.components.size(); ++i) {
        if (i > 0) CHECK(snap.components[i].delay_s >= snap.components[i - 1].delay_s);
        if (snap.components[i].path_type != PathType::kLos)
            CHECK(snap.components[i].delay_s > direct_delay);
    }
}

TEST_CASE("snapshot: diffraction keeps a penalized path near the roof line") {
    UrbanScene scene;
    scene.buildings.push_back({{20, -10}, {30, 10}, 22.0});
    ChannelConfig cfg;
    cfg.diffraction_enabled = true;
    cfg.diffraction_clearance_m = 3.0;
    cfg.diffraction_penalty_db = 12.0;
    ChannelElements none;

    // Path at z=20 dips 2 m below the roof: diffracted, 12 dB down.
    const auto snap = channel_snapshot(at({0, 0, 20}), at({60, 0, 20}), scene, none, 0, kFc, cfg);
    REQUIRE(snap.components.size() == 1);
    const double fspl = free_space_path_loss_db(60.0, kFc);
    CHECK(-20.0 * std::log10(std::abs(snap.components[0].amplitude)) ==
          doctest::Approx(fspl + 12.0).epsilon(1e-9));

    // Path at z=10 is 12 m under the roof: gone.
    const auto deep = channel_snapshot(at({0, 0, 10}), at({60, 0, 10}), scene, none, 0, kFc, cfg);
    CHECK(deep.components.empty());

    // Two buildings in the way: no single-edge fallback.
    UrbanScene two = scene;
    two.buildings.push_back({{40, -10}, {50, 10}, 22.0});
    const auto none2 = channel_snapshot(at({0, 0, 20}), at({60, 0, 20}), two, none, 0, kFc, cfg);
    CHECK(none2.components.empty());
}

TEST_CASE("narrowband gain: superposition, cancellation and the triangle bound") {
    ChannelSnapshot snap;
    MultipathComponent a;
    a.amplitude = std::polar(0.5, 0.3);
    snap.components.push_back(a);
    auto g = narrowband_gain(snap);
    CHECK(g.power_db == doctest::Approx(20.0 * std::log10(0.5)));

    MultipathComponent b = a;
    b.amplitude = std::polar(0.5, 0.3 + kPi);
    snap.components.push_back(b);
    g = narrowband_gain(snap);
    CHECK(std::abs(g.gain) < 1e-12);

    ChannelSnapshot empty;
    CHECK(std::isinf(narrowband_gain(empty).power_db));
    CHECK(narrowband_gain(empty).power_db < 0.0);

    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        ChannelSnapshot random_snap;
        double magnitude_sum = 0.0;
        const int n = 1 + static_cast<int>(rng.below(6));
        for (int i = 0; i < n; ++i) {
            MultipathComponent c;
            c.amplitude = std::polar(rng.uniform(0.0, 1.0), rng.uniform(0.0, kTwoPi));
            magnitude_sum += std::abs(c.amplitude);
            random_snap.components.push_back(c);
        }
        CHECK(std::abs(narrowband_gain(random_snap).gain) <= magnitude_sum + 1e-12);
    }
}

TEST_CASE("total power is invariant under global translation and rotation") {
    // 90-degree rotation about z keeps buildings axis-aligned.
    auto rot = [](Vec3 p) { return Vec3{-p.y, p.x, p.z}; };
    const Vec3 shift{37.0, -12.0, 4.0};

    UrbanScene scene;
    scene.extent = {{-100, -100}, {100, 100}};
    scene.buildings.push_back({{10, -20}, {30, 0}, 18.0});
    ChannelConfig cfg;
    cfg.scatterer_density_per_m2 = 0.02;
    const auto elements = place_channel_elements(scene, cfg, 5);

    UrbanScene moved;
    moved.extent = {{-200, -200}, {200, 200}};
    for (const auto& b : scene.buildings) {
        const Vec3 lo = rot({b.footprint_min.x, b.footprint_min.y, 0}) + shift;
        const Vec3 hi = rot({b.footprint_max.x, b.footprint_max.y, 0}) + shift;
        Building nb;
        nb.footprint_min = {std::min(lo.x, hi.x), std::min(lo.y, hi.y)};
        nb.footprint_max = {std::max(lo.x, hi.x), std::max(lo.y, hi.y)};
        nb.height = b.height;
        moved.buildings.push_back(nb);
    }
    ChannelElements moved_elements;
    for (auto s : elements.scatterers) {
        s.position = rot(s.position) + Vec3{shift.x, shift.y, 0};
        s.surface_normal = rot(s.surface_normal);
        moved_elements.scatterers.push_back(s);
    }
    for (auto r : elements.reflectors) {
        r.center = rot(r.center) + Vec3{shift.x, shift.y, 0};
        r.normal = rot(r.normal);
        moved_elements.reflectors.push_back(r);
    }

    const double heading = 0.4;
    const Terminal tx1 = at({-30, 5, 12}, heading);
    const Terminal rx1 = at({60, 25, 16}, heading + 1.0);
    Terminal tx2 = at(rot({-30, 5, 12}) + Vec3{shift.x, shift.y, 0}, heading + kPi / 2);
    Terminal rx2 = at(rot({60, 25, 16}) + Vec3{shift.x, shift.y, 0}, heading + 1.0 + kPi / 2);

    const auto p1 = narrowband_gain(
        channel_snapshot(tx1, rx1, scene, elements, 0, kFc, cfg));
    const auto p2 = narrowband_gain(
        channel_snapshot(tx2, rx2, moved, moved_elements, 0, kFc, cfg));
    CHECK(p1.power_db == doctest::Approx(p2.power_db).epsilon(1e-9));
}

TEST_CASE("snapshot power never rises when a scatterer gets lossier") {
    UrbanScene scene;
    PointScatterer s;
    s.position = {40, 10, 12};
    s.surface_normal = normalized(Vec3{-1, -0.2, 0});
    s.opening_angle = kPi / 2;
    const Terminal tx = at({0, 0, 10});
    const Terminal rx = at({10, 30, 10});

    double previous = 1e9;
    for (double loss = 0.0; loss <= 30.0; loss += 5.0) {
        s.scattering_loss_db = loss;
        const auto mpc = scatter_component(s, tx, rx, scene, kFc);
        REQUIRE(mpc.has_value());
        ChannelSnapshot snap;
        snap.components.push_back(*mpc);
        const double power = narrowband_gain(snap).power_db;
        CHECK(power < previous);
        previous = power;
    }
}

TEST_CASE("elements export as CSV") {
    ChannelElements e;
    PointScatterer s;
    s.position = {1, 2, 3};
    s.surface_normal = {0, 0, 1};
    s.opening_angle = 0.5;
    s.scattering_loss_db = 12.0;
    e.scatterers.push_back(s);
    std::ostringstream os;
    write_elements_csv(os, e);
    CHECK(os.str().find("scatterer,1.0000,2.0000,3.0000") != std::string::npos);
}
