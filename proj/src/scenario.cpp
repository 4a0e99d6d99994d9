// SPDX-License-Identifier: Apache-2.0

#include "dronecast/scenario.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace dronecast {

namespace {

struct Line {
    int number = 0;
    std::string section;    // lower-case section name
    std::string section_id; // optional id token after the name
    std::string key;
    std::vector<std::string> values;
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string token;
    while (is >> token) out.push_back(token);
    return out;
}

class Parser {
public:
    Parser(const std::string& text, const std::string& name) : name_(name) {
        std::istringstream is(text);
        std::string raw;
        int number = 0;
        std::string section, section_id;
        while (std::getline(is, raw)) {
            ++number;
            std::string line = raw;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(number, "unterminated section header");
                const auto tokens = split(line.substr(1, line.size() - 2));
                if (tokens.empty()) fail(number, "empty section header");
                section = lower(tokens[0]);
                section_id = tokens.size() > 1 ? tokens[1] : "";
                if (tokens.size() > 2) fail(number, "section header has too many tokens");
                sections_.push_back({number, section, section_id, "", {}});
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(number, "expected 'key = value'");
            Line entry;
            entry.number = number;
            entry.section = section;
            entry.section_id = section_id;
            entry.key = lower(trim(line.substr(0, eq)));
            entry.values = split(trim(line.substr(eq + 1)));
            if (entry.key.empty()) fail(number, "empty key");
            if (entry.values.empty()) fail(number, "missing value for '" + entry.key + "'");
            if (section.empty()) fail(number, "key outside any section");
            lines_.push_back(std::move(entry));
        }
    }

    [[noreturn]] void fail(int line, const std::string& message) const {
        throw ConfigError(name_, line, message);
    }

    double number(const Line& l, std::size_t idx) const {
        if (idx >= l.values.size()) fail(l.number, "'" + l.key + "' needs more values");
        try {
            std::size_t pos = 0;
            const double v = std::stod(l.values[idx], &pos);
            if (pos != l.values[idx].size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            fail(l.number, "'" + l.key + "': not a number: '" + l.values[idx] + "'");
        }
    }

    bool boolean(const Line& l, std::size_t idx = 0) const {
        if (idx >= l.values.size()) fail(l.number, "'" + l.key + "' needs a value");
        const std::string v = lower(l.values[idx]);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        fail(l.number, "'" + l.key + "': not a boolean: '" + l.values[idx] + "'");
    }

    const std::vector<Line>& lines() const { return lines_; }
    const std::vector<Line>& sections() const { return sections_; }

private:
    std::string name_;
    std::vector<Line> lines_;
    std::vector<Line> sections_;
};

RadioProfile named_radio(const Parser& p, const Line& l) {
    const std::string which = lower(l.values[0]);
    if (which == "experimental") return experimental_radio_profile();
    if (which == "cots") return cots_radio_profile();
    p.fail(l.number, "'radio': expected 'experimental' or 'cots', got '" + l.values[0] + "'");
}

struct DroneBuilder {
    std::uint32_t id = 0;
    std::string section_id;
    int first_line = 0;
    RadioProfile radio = experimental_radio_profile();
    AirframeShadowMask mask;
    std::vector<Waypoint> waypoints;
    bool loop = false;
};

struct StationBuilder {
    std::uint32_t id = 0;
    std::string section_id;
    int first_line = 0;
    StationRole role = StationRole::kMonitor;
    RadioProfile radio = cots_radio_profile();
    Vec3 position;
};

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& name) {
    Parser p(text, name);
    Scenario sc;
    sc.name = name;

    std::vector<DroneBuilder> drones;
    std::vector<StationBuilder> stations;
    bool has_p1410 = false;
    P1410Params p1410;

    auto builder_for = [&](const Line& l) -> DroneBuilder& {
        for (auto& d : drones)
            if (d.section_id == l.section_id) return d;
        p.fail(l.number, "internal: drone section not registered");
    };
    auto station_for = [&](const Line& l) -> StationBuilder& {
        for (auto& s : stations)
            if (s.section_id == l.section_id) return s;
        p.fail(l.number, "internal: ground section not registered");
    };

    for (const auto& s : p.sections()) {
        if (s.section == "drone" || s.section == "ground") {
            if (s.section_id.empty())
                p.fail(s.number, "[" + s.section + "] needs an id, e.g. [" + s.section + " 1]");
            std::uint32_t id = 0;
            try {
                id = static_cast<std::uint32_t>(std::stoul(s.section_id));
            } catch (const std::exception&) {
                p.fail(s.number, "invalid id '" + s.section_id + "'");
            }
            if (s.section == "drone") {
                DroneBuilder b;
                b.id = id;
                b.section_id = s.section_id;
                b.first_line = s.number;
                drones.push_back(b);
            } else {
                StationBuilder b;
                b.id = id;
                b.section_id = s.section_id;
                b.first_line = s.number;
                stations.push_back(b);
            }
        } else if (s.section != "sim" && s.section != "scene" && s.section != "p1410" &&
                   s.section != "channel" && s.section != "protocol" && s.section != "tesla" &&
                   s.section != "multilink") {
            p.fail(s.number, "unknown section [" + s.section + "]");
        }
    }

    for (const auto& l : p.lines()) {
        if (l.section == "sim") {
            if (l.key == "name") sc.name = l.values[0];
            else if (l.key == "duration") sc.duration_s = p.number(l, 0);
            else if (l.key == "time_step") sc.time_step_s = p.number(l, 0);
            else if (l.key == "seed") sc.seed = static_cast<std::uint64_t>(p.number(l, 0));
            else if (l.key == "carrier_hz") sc.carrier_hz = p.number(l, 0);
            else if (l.key == "bitrate_bps") sc.bitrate_bps = p.number(l, 0);
            else if (l.key == "preamble_s") sc.preamble_s = p.number(l, 0);
            else if (l.key == "nav_jitter_sigma") sc.nav_jitter_sigma_m = p.number(l, 0);
            else if (l.key == "origin") {
                sc.origin.lat_deg = p.number(l, 0);
                sc.origin.lon_deg = p.number(l, 1);
            } else p.fail(l.number, "unknown key '" + l.key + "' in [sim]");
        } else if (l.section == "scene") {
            if (l.key == "extent") {
                sc.scene.extent = {{p.number(l, 0), p.number(l, 1)},
                                   {p.number(l, 2), p.number(l, 3)}};
                if (sc.scene.extent.width() <= 0 || sc.scene.extent.depth() <= 0)
                    p.fail(l.number, "'extent': needs xmin ymin xmax ymax with positive size");
            } else if (l.key == "building") {
                Building b;
                b.footprint_min = {p.number(l, 0), p.number(l, 1)};
                b.footprint_max = {p.number(l, 2), p.number(l, 3)};
                b.height = p.number(l, 4);
                if (b.footprint_min.x >= b.footprint_max.x ||
                    b.footprint_min.y >= b.footprint_max.y || b.height <= 0)
                    p.fail(l.number, "'building': degenerate box");
                sc.scene.buildings.push_back(b);
            } else p.fail(l.number, "unknown key '" + l.key + "' in [scene]");
        } else if (l.section == "p1410") {
            has_p1410 = true;
            if (l.key == "alpha") p1410.built_fraction = p.number(l, 0);
            else if (l.key == "beta") p1410.buildings_per_km2 = p.number(l, 0);
            else if (l.key == "gamma") p1410.height_scale_m = p.number(l, 0);
            else p.fail(l.number, "unknown key '" + l.key + "' in [p1410]");
        } else if (l.section == "channel") {
            auto& ch = sc.channel;
            if (l.key == "scatterer_density") ch.scatterer_density_per_m2 = p.number(l, 0);
            else if (l.key == "ground_scatterer_density")
                ch.ground_scatterer_density_per_m2 = p.number(l, 0);
            else if (l.key == "opening_angle_deg") {
                ch.opening_angle_min_rad = deg2rad(p.number(l, 0));
                ch.opening_angle_max_rad = deg2rad(p.number(l, 1));
            } else if (l.key == "scattering_loss_db") {
                ch.scattering_loss_min_db = p.number(l, 0);
                ch.scattering_loss_max_db = p.number(l, 1);
            } else if (l.key == "reflection_loss_db") {
                ch.reflection_loss_min_db = p.number(l, 0);
                ch.reflection_loss_max_db = p.number(l, 1);
            } else if (l.key == "reflector_fraction") {
                ch.reflector_fraction_min = p.number(l, 0);
                ch.reflector_fraction_max = p.number(l, 1);
            } else if (l.key == "ground_reflector") ch.ground_reflector = p.boolean(l);
            else if (l.key == "ground_reflection_loss_db")
                ch.ground_reflection_loss_db = p.number(l, 0);
            else if (l.key == "diffraction") ch.diffraction_enabled = p.boolean(l);
            else if (l.key == "diffraction_clearance_m")
                ch.diffraction_clearance_m = p.number(l, 0);
            else if (l.key == "diffraction_penalty_db")
                ch.diffraction_penalty_db = p.number(l, 0);
            else if (l.key == "system_loss_db") ch.system_loss_db = p.number(l, 0);
            else p.fail(l.number, "unknown key '" + l.key + "' in [channel]");
        } else if (l.section == "protocol") {
            auto& pr = sc.protocol;
            if (l.key == "ca_enabled") pr.ca_enabled = p.boolean(l);
            else if (l.key == "ca_threshold_m") pr.ca.threshold_m = p.number(l, 0);
            else if (l.key == "ca_horizon_s") pr.ca.horizon_s = p.number(l, 0);
            else if (l.key == "ca_dt_s") pr.ca.dt_s = p.number(l, 0);
            else if (l.key == "ca_hysteresis_m") pr.ca.hysteresis_m = p.number(l, 0);
            else if (l.key == "ca_dwell_s") pr.ca.dwell_s = p.number(l, 0);
            else if (l.key == "ca_hold_both") pr.ca.hold_both = p.boolean(l);
            else if (l.key == "stale_after_s") pr.tracking.stale_after_s = p.number(l, 0);
            else if (l.key == "lost_after_s") pr.tracking.lost_after_s = p.number(l, 0);
            else if (l.key == "carrier_sense_dbm") pr.mac.carrier_sense_dbm = p.number(l, 0);
            else if (l.key == "capture_margin_db") pr.mac.capture_margin_db = p.number(l, 0);
            else p.fail(l.number, "unknown key '" + l.key + "' in [protocol]");
        } else if (l.section == "tesla") {
            auto& ts = sc.tesla;
            if (l.key == "enabled") ts.enabled = p.boolean(l);
            else if (l.key == "interval_s") ts.interval_s = p.number(l, 0);
            else if (l.key == "disclosure_delay")
                ts.disclosure_delay = static_cast<std::uint32_t>(p.number(l, 0));
            else if (l.key == "chain_length")
                ts.chain_length = static_cast<std::uint32_t>(p.number(l, 0));
            else if (l.key == "max_clock_skew_s") ts.max_clock_skew_s = p.number(l, 0);
            else if (l.key == "injected_skew_s") ts.injected_skew_s = p.number(l, 0);
            else if (l.key == "rate_hz") ts.rate_hz = p.number(l, 0);
            else if (l.key == "payload_bytes")
                ts.payload_bytes = static_cast<int>(p.number(l, 0));
            else p.fail(l.number, "unknown key '" + l.key + "' in [tesla]");
        } else if (l.section == "multilink") {
            auto& ml = sc.multilink;
            if (l.key == "enabled") ml.enabled = p.boolean(l);
            else if (l.key == "availability") ml.availability = p.number(l, 0);
            else if (l.key == "latency_s") ml.latency_s = p.number(l, 0);
            else p.fail(l.number, "unknown key '" + l.key + "' in [multilink]");
        } else if (l.section == "drone") {
            auto& d = builder_for(l);
            if (l.key == "radio") d.radio = named_radio(p, l);
            else if (l.key == "tx_power_dbm") d.radio.tx_power_dbm = p.number(l, 0);
            else if (l.key == "amp_gain_db") d.radio.amp_gain_db = p.number(l, 0);
            else if (l.key == "noise_figure_db") d.radio.noise_figure_db = p.number(l, 0);
            else if (l.key == "bandwidth_hz") d.radio.bandwidth_hz = p.number(l, 0);
            else if (l.key == "snr_decode_min_db") d.radio.snr_decode_min_db = p.number(l, 0);
            else if (l.key == "snr_overdrive_start_db")
                d.radio.snr_overdrive_start_db = p.number(l, 0);
            else if (l.key == "edge_steepness_db") d.radio.edge_steepness_db = p.number(l, 0);
            else if (l.key == "agc") d.radio.agc = p.boolean(l);
            else if (l.key == "beacon_rate_hz") d.radio.beacon_rate_hz = p.number(l, 0);
            else if (l.key == "beacon_payload_bytes")
                d.radio.beacon_payload_bytes = static_cast<int>(p.number(l, 0));
            else if (l.key == "mask") {
                d.mask.lobe_count = static_cast<int>(p.number(l, 0));
                d.mask.lobe_depth_db = p.number(l, 1);
                d.mask.cap_elevation_rad = p.number(l, 2);
                d.mask.cap_depth_db = p.number(l, 3);
            } else if (l.key == "loop") d.loop = p.boolean(l);
            else if (l.key == "waypoint") {
                Waypoint w;
                w.position = {p.number(l, 0), p.number(l, 1), p.number(l, 2)};
                w.speed_to_next = p.number(l, 3);
                w.hold_duration = l.values.size() > 4 ? p.number(l, 4) : 0.0;
                d.waypoints.push_back(w);
            } else p.fail(l.number, "unknown key '" + l.key + "' in [drone]");
        } else if (l.section == "ground") {
            auto& g = station_for(l);
            if (l.key == "role") {
                const std::string role = lower(l.values[0]);
                if (role == "monitor") g.role = StationRole::kMonitor;
                else if (role == "gbas") g.role = StationRole::kGbas;
                else p.fail(l.number, "'role': expected monitor or gbas");
            } else if (l.key == "radio") g.radio = named_radio(p, l);
            else if (l.key == "position")
                g.position = {p.number(l, 0), p.number(l, 1), p.number(l, 2)};
            else p.fail(l.number, "unknown key '" + l.key + "' in [ground]");
        }
    }

    if (has_p1410) sc.p1410 = p1410;
    for (auto& d : drones) {
        if (d.waypoints.empty())
            throw ConfigError(name, d.first_line,
                              "drone " + std::to_string(d.id) + " has no waypoints");
        Trajectory traj = [&]() {
            try {
                return Trajectory(d.waypoints, d.loop);
            } catch (const std::exception& e) {
                throw ConfigError(name, d.first_line,
                                  "drone " + std::to_string(d.id) + ": " + e.what());
            }
        }();
        sc.drones.push_back({d.id, std::move(traj), d.radio, d.mask});
    }
    for (auto& g : stations) sc.ground_stations.push_back({g.id, g.position, g.role, g.radio});
    if (sc.drones.empty())
        throw ConfigError(name, 1, "scenario defines no drones");
    try {
        validate_scenario(sc);
    } catch (const std::exception& e) {
        throw ConfigError(name, 1, e.what());
    }
    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError(path, 0, "cannot open file");
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return parse_scenario(buffer.str(), path);
}

}  // namespace dronecast
