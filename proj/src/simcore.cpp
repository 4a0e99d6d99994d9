// SPDX-License-Identifier: Apache-2.0

#include "dronecast/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dronecast {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

// Three significant digits for console summaries.
std::string sig3(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

void validate_scenario(const Scenario& scenario) {
    if (scenario.duration_s < 0.0) throw std::runtime_error("scenario: duration must be >= 0");
    if (scenario.time_step_s <= 0.0)
        throw std::runtime_error("scenario: time step must be positive");
    if (scenario.carrier_hz <= 0.0)
        throw std::runtime_error("scenario: carrier frequency must be positive");
    std::set<std::uint32_t> ids;
    for (const auto& d : scenario.drones) {
        if (!ids.insert(d.id).second)
            throw std::runtime_error("scenario: duplicate id " + std::to_string(d.id));
        validate_profile(d.radio);
        if (scenario.time_step_s > 1.0 / d.radio.beacon_rate_hz + 1e-12)
            throw std::runtime_error(
                "scenario: time step exceeds the beacon interval of drone " +
                std::to_string(d.id));
    }
    for (const auto& g : scenario.ground_stations) {
        if (!ids.insert(g.id).second)
            throw std::runtime_error("scenario: duplicate id " + std::to_string(g.id));
        validate_profile(g.radio);
    }
    for (const auto& b : scenario.scene.buildings) {
        if (b.footprint_min.x >= b.footprint_max.x || b.footprint_min.y >= b.footprint_max.y ||
            b.height <= 0.0)
            throw std::runtime_error("scenario: degenerate building");
    }
    if (scenario.p1410) {
        const auto& p = *scenario.p1410;
        if (p.built_fraction <= 0.0 || p.built_fraction >= 1.0 || p.buildings_per_km2 < 0.0 ||
            p.height_scale_m <= 0.0)
            throw std::runtime_error("scenario: invalid statistical building parameters");
    }
    if (scenario.tesla.enabled) {
        if (scenario.tesla.interval_s <= 0.0 || scenario.tesla.chain_length < 1 ||
            scenario.tesla.disclosure_delay < 1)
            throw std::runtime_error("scenario: invalid tesla parameters");
    }
}

namespace {

struct NodeRef {
    bool is_drone = false;
    std::size_t index = 0; // into drones or stations
};

struct StepTransmission {
    std::size_t node = 0; // unified node index
    std::uint32_t sender_id = 0;
    std::uint32_t seq = 0;
    bool is_beacon = true;
    BeaconMessage beacon;
    AuthenticatedMessage auth;
    std::uint64_t auth_tag = 0;
    double start_s = 0.0;
    double duration_s = 0.0;
};

struct DroneRuntime {
    DroneRuntime(const DroneSpec* s, Trajectory t) : spec(s), trajectory(std::move(t)) {}

    const DroneSpec* spec;
    Trajectory trajectory;
    double plan_time = 0.0;
    bool holding = false;
    Vec3 hold_position;
    double hold_heading = 0.0;
    DroneState state;
    DroneStatus status = DroneStatus::kCruise;
    bool pending_emergency = false;
    CAState ca;
    std::uint32_t next_seq = 1;
    std::map<std::uint32_t, PartnerTrack> partners;
    std::map<std::uint32_t, double> partner_rx_time;
    bool beacon_received = false;
    long beacon_phase = 0;
    long steps_per_beacon = 1;
    double clock_skew_s = 0.0;
    std::map<std::uint32_t, TeslaVerifier> verifiers; // per GBAS station
};

struct StationRuntime {
    const GroundStation* spec = nullptr;
    TrackTable tracks;
    std::optional<KeyChain> chain;
    long gbas_phase = 0;
    long steps_per_msg = 1;
    std::uint64_t msg_counter = 0;

    StationRuntime(const GroundStation* s, TrackTableConfig cfg) : spec(s), tracks(cfg) {}
};

struct BackupDelivery {
    double deliver_t = 0.0;
    std::size_t station = 0;
    BeaconMessage beacon;
};

class Simulation {
public:
    explicit Simulation(const Scenario& scenario) : sc_(scenario) {}

    SimulationReport execute() {
        prepare();
        const long steps =
            static_cast<long>(std::llround(sc_.duration_s / sc_.time_step_s));
        for (long k = 0; k < steps; ++k) step(k);
        finalize();
        return std::move(report_);
    }

    const UrbanScene& scene() const { return scene_; }
    const ChannelElements& elements() const { return elements_; }

private:
    void prepare() {
        validate_scenario(sc_);
        scene_ = sc_.scene;
        if (sc_.p1410) {
            auto generated = generate_buildings(*sc_.p1410, scene_.extent,
                                                derive_seed(sc_.seed, "p1410"));
            scene_.buildings.insert(scene_.buildings.end(), generated.begin(), generated.end());
        }
        elements_ = place_channel_elements(scene_, sc_.channel, derive_seed(sc_.seed, "elements"));

        for (std::size_t i = 0; i < sc_.drones.size(); ++i) {
            const auto& spec = sc_.drones[i];
            Trajectory traj = spec.trajectory;
            if (sc_.nav_jitter_sigma_m > 0.0) {
                Rng jitter = derive_rng(sc_.seed, "jitter/" + std::to_string(spec.id));
                traj = with_waypoint_jitter(spec.trajectory, sc_.nav_jitter_sigma_m, jitter);
            }
            DroneRuntime rt(&spec, std::move(traj));
            rt.steps_per_beacon = std::max<long>(
                1, std::lround(1.0 / (spec.radio.beacon_rate_hz * sc_.time_step_s)));
            // Round-robin slot assignment spreads beacon epochs; contention
            // within a slot is resolved by carrier sense and in-slot jitter.
            rt.beacon_phase = static_cast<long>(
                (i * static_cast<std::size_t>(rt.steps_per_beacon)) / sc_.drones.size());
            if (sc_.tesla.enabled && sc_.tesla.injected_skew_s > 0.0) {
                Rng skew = derive_rng(sc_.seed, "skew/" + std::to_string(spec.id));
                rt.clock_skew_s = skew.uniform(-sc_.tesla.injected_skew_s,
                                               sc_.tesla.injected_skew_s);
            }
            drones_.push_back(std::move(rt));
        }

        for (const auto& g : sc_.ground_stations) {
            StationRuntime rt(&g, sc_.protocol.tracking);
            if (g.role == StationRole::kGbas && sc_.tesla.enabled) {
                rt.chain = keychain_generate(
                    derive_seed(sc_.seed, "tesla/" + std::to_string(g.id)),
                    sc_.tesla.chain_length, sc_.tesla.interval_s, sc_.tesla.disclosure_delay,
                    0.0);
                rt.steps_per_msg = std::max<long>(
                    1, std::lround(1.0 / (sc_.tesla.rate_hz * sc_.time_step_s)));
                rt.gbas_phase = static_cast<long>(
                    derive_seed(sc_.seed, "gbasphase/" + std::to_string(g.id)) %
                    static_cast<std::uint64_t>(rt.steps_per_msg));
            }
            stations_.push_back(std::move(rt));
        }

        // Verifiers know each chain's public anchor a priori.
        if (sc_.tesla.enabled) {
            for (auto& d : drones_) {
                for (const auto& st : stations_) {
                    if (!st.chain) continue;
                    d.verifiers.emplace(
                        st.spec->id,
                        TeslaVerifier(st.chain->anchor, st.chain->length,
                                      st.chain->interval_duration_s, st.chain->disclosure_delay,
                                      st.chain->start_time_s, sc_.tesla.max_clock_skew_s));
                }
            }
        }

        tx_jitter_ = std::make_unique<Rng>(derive_seed(sc_.seed, "txjitter"));
        backup_rng_ = std::make_unique<Rng>(derive_seed(sc_.seed, "backup"));
        gbas_payload_rng_ = std::make_unique<Rng>(derive_seed(sc_.seed, "gbaspayload"));
        report_.duration_s = sc_.duration_s;
        report_.seed = sc_.seed;
        report_.min_separation_m =
            sc_.drones.size() >= 2 ? std::numeric_limits<double>::infinity() : -1.0;
        track_sample_stride_ = std::max<long>(1, std::lround(1.0 / sc_.time_step_s));
        age_histogram_.assign(6001, 0); // 10 ms bins up to 60 s
    }

    Rng& link_rng(std::uint32_t tx, std::uint32_t rx) {
        const auto key = std::make_pair(tx, rx);
        auto it = link_rngs_.find(key);
        if (it == link_rngs_.end()) {
            it = link_rngs_
                     .emplace(key, Rng(derive_seed(sc_.seed, "pkt/" + std::to_string(tx) + "/" +
                                                                 std::to_string(rx))))
                     .first;
        }
        return it->second;
    }

    std::size_t node_count() const { return drones_.size() + stations_.size(); }

    Terminal node_terminal(std::size_t node) const {
        if (node < drones_.size()) {
            return Terminal{drones_[node].state, drones_[node].spec->mask};
        }
        const auto& st = stations_[node - drones_.size()];
        DroneState s;
        s.position = st.spec->position;
        return Terminal{s, AirframeShadowMask{}};
    }

    const RadioProfile& node_profile(std::size_t node) const {
        return node < drones_.size() ? drones_[node].spec->radio
                                     : stations_[node - drones_.size()].spec->radio;
    }

    std::uint32_t node_id(std::size_t node) const {
        return node < drones_.size() ? drones_[node].spec->id
                                     : stations_[node - drones_.size()].spec->id;
    }

    void update_kinematics() {
        for (auto& d : drones_) {
            if (d.holding) {
                d.state.position = d.hold_position;
                d.state.velocity = {0.0, 0.0, 0.0};
                d.state.heading = d.hold_heading;
            } else {
                d.state = d.trajectory.state_at(d.plan_time);
            }
        }
        if (drones_.size() >= 2) {
            for (std::size_t i = 0; i < drones_.size(); ++i) {
                for (std::size_t j = i + 1; j < drones_.size(); ++j) {
                    const double d =
                        distance(drones_[i].state.position, drones_[j].state.position);
                    report_.min_separation_m = std::min(report_.min_separation_m, d);
                }
            }
        }

    }

    double packet_air_time(int payload_bytes) const {
        return sc_.preamble_s + static_cast<double>(payload_bytes) * 8.0 / sc_.bitrate_bps;
    }

    std::vector<StepTransmission> collect_transmissions(long k, double t) {
        std::vector<StepTransmission> txs;
        for (std::size_t i = 0; i < drones_.size(); ++i) {
            auto& d = drones_[i];
            if (k % d.steps_per_beacon != d.beacon_phase) continue;
            StepTransmission tx;
            tx.node = i;
            tx.sender_id = d.spec->id;
            tx.is_beacon = true;
            tx.seq = d.next_seq++;

            BeaconMessage msg;
            msg.drone_id = d.spec->id;
            msg.seq = tx.seq;
            msg.time_ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));
            msg.position = to_geodetic(sc_.origin, d.state.position);
            for (int a = 0; a < 3; ++a) {
                const double v[3] = {d.state.velocity.x, d.state.velocity.y, d.state.velocity.z};
                const double cm = std::clamp(v[a] * 100.0, -32767.0, 32767.0);
                msg.velocity_cm_s[a] = static_cast<std::int16_t>(std::llround(cm));
            }
            msg.status = d.pending_emergency ? DroneStatus::kEmergency
                         : d.holding          ? DroneStatus::kHolding
                                              : DroneStatus::kCruise;
            d.pending_emergency = false;
            for (const auto& wp :
                 d.trajectory.upcoming_waypoints(d.plan_time, kBeaconMaxWaypoints))
                msg.waypoints.push_back(to_geodetic(sc_.origin, wp));
            tx.beacon = msg;

            tx.duration_s = packet_air_time(d.spec->radio.beacon_payload_bytes);
            const double slack = std::max(0.0, sc_.time_step_s - tx.duration_s);
            tx.start_s = t + tx_jitter_->uniform(0.0, slack);
            txs.push_back(std::move(tx));
        }

        for (std::size_t s = 0; s < stations_.size(); ++s) {
            auto& st = stations_[s];
            if (!st.chain) continue;
            if (k % st.steps_per_msg != st.gbas_phase) continue;
            std::vector<std::uint8_t> payload(static_cast<std::size_t>(sc_.tesla.payload_bytes));
            for (auto& b : payload)
                b = static_cast<std::uint8_t>(gbas_payload_rng_->below(256));
            AuthenticatedMessage msg;
            const SignStatus status = sign_message(payload, t, *st.chain, msg);
            if (status != SignStatus::kOk) continue;
            StepTransmission tx;
            tx.node = drones_.size() + s;
            tx.sender_id = st.spec->id;
            tx.is_beacon = false;
            tx.seq = static_cast<std::uint32_t>(st.msg_counter);
            tx.auth = std::move(msg);
            tx.auth_tag = (static_cast<std::uint64_t>(st.spec->id) << 32) | st.msg_counter;
            ++st.msg_counter;
            tx.duration_s = packet_air_time(
                static_cast<int>(2 + payload.size() + 4 + 16 + 32));
            const double slack = std::max(0.0, sc_.time_step_s - tx.duration_s);
            tx.start_s = t + tx_jitter_->uniform(0.0, slack);
            txs.push_back(std::move(tx));
        }
        return txs;
    }

    void step(long k) {
        const double t = static_cast<double>(k) * sc_.time_step_s;
        update_kinematics();
        for (auto& d : drones_) d.beacon_received = false;

        // Backup-link deliveries that have matured.
        while (!backup_queue_.empty() && backup_queue_.front().deliver_t <= t) {
            const auto& item = backup_queue_.front();
            stations_[item.station].tracks.update(item.beacon, item.deliver_t);
            backup_queue_.erase(backup_queue_.begin());
        }

        auto txs = collect_transmissions(k, t);
        if (!txs.empty()) deliver(txs, t);

        if (sc_.protocol.ca_enabled) run_ca(t);

        if (k % track_sample_stride_ == 0) sample_tracks(t);

        for (auto& d : drones_) {
            if (!d.holding) d.plan_time += sc_.time_step_s;
        }
    }

    void deliver(const std::vector<StepTransmission>& txs, double t) {
        // Channel gain between every transmitting node and every node, memoized
        // for this step and committed in deterministic (tx, rx) order.
        const std::size_t nodes = node_count();
        std::map<std::pair<std::size_t, std::size_t>, std::pair<NarrowbandGain, int>> gains;
        auto gain_between = [&](std::size_t a, std::size_t b) {
            const auto key = std::make_pair(a, b);
            auto it = gains.find(key);
            if (it == gains.end()) {
                const auto snap =
                    channel_snapshot(node_terminal(a), node_terminal(b), scene_, elements_, t,
                                     sc_.carrier_hz, sc_.channel, node_id(a), node_id(b));
                it = gains.emplace(key, std::make_pair(narrowband_gain(snap),
                                                       static_cast<int>(snap.components.size())))
                         .first;
            }
            return it->second;
        };

        std::vector<Transmission> mac_txs;
        mac_txs.reserve(txs.size());
        for (const auto& tx : txs)
            mac_txs.push_back({tx.sender_id, tx.start_s, tx.duration_s});
        auto sense = [&](std::size_t i, std::size_t j) {
            if (txs[i].node == txs[j].node) return 0.0; // own transmission
            const auto g = gain_between(txs[i].node, txs[j].node);
            return received_power_dbm(node_profile(txs[i].node), g.first.power_db);
        };

        for (std::size_t rx_node = 0; rx_node < nodes; ++rx_node) {
            const bool rx_is_drone = rx_node < drones_.size();
            std::vector<double> rx_powers(txs.size());
            for (std::size_t i = 0; i < txs.size(); ++i) {
                const auto g = gain_between(txs[i].node, rx_node);
                rx_powers[i] = received_power_dbm(node_profile(txs[i].node), g.first.power_db);
            }
            const auto mac =
                mac_arbitrate(mac_txs, rx_powers, sense, sc_.protocol.mac);

            for (std::size_t i = 0; i < txs.size(); ++i) {
                const auto& tx = txs[i];
                if (tx.node == rx_node) continue;
                const bool wants = tx.is_beacon ? true : rx_is_drone; // stations ignore GBAS
                if (!wants) continue;

                const auto g = gain_between(tx.node, rx_node);
                const auto& rx_profile = node_profile(rx_node);
                const double snr = snr_db(rx_powers[i], rx_profile);
                const std::uint32_t rx_id = node_id(rx_node);

                PacketOutcome outcome;
                if (mac.verdicts[i] == MacVerdict::kCollided) {
                    outcome.delivered = false;
                    outcome.loss_reason = LossReason::kMacCollision;
                    outcome.snr_db = snr;
                } else {
                    outcome = packet_outcome(rx_profile, snr, link_rng(tx.sender_id, rx_id));
                }

                bool malformed = false;
                if (outcome.delivered) {
                    if (tx.is_beacon) {
                        const auto decoded = decode_beacon(encode_beacon(tx.beacon));
                        if (!decoded) {
                            malformed = true;
                        } else if (rx_is_drone) {
                            on_drone_beacon(rx_node, *decoded, t);
                        } else {
                            stations_[rx_node - drones_.size()].tracks.update(*decoded, t);
                        }
                    } else if (rx_is_drone) {
                        const auto decoded = decode_auth_message(encode_auth_message(tx.auth));
                        if (!decoded)
                            malformed = true;
                        else
                            on_drone_gbas(rx_node, tx.sender_id, *decoded, tx.auth_tag, t);
                    }
                }
                if (malformed) {
                    outcome.delivered = false;
                    outcome.loss_reason = LossReason::kMalformed;
                }

                // Monitoring feed falls back to the infrastructure link.
                if (!outcome.delivered && tx.is_beacon && !rx_is_drone &&
                    stations_[rx_node - drones_.size()].spec->role == StationRole::kMonitor &&
                    sc_.multilink.enabled) {
                    if (backup_rng_->bernoulli(sc_.multilink.availability)) {
                        backup_queue_.push_back({t + sc_.multilink.latency_s,
                                                 rx_node - drones_.size(), tx.beacon});
                        std::stable_sort(backup_queue_.begin(), backup_queue_.end(),
                                         [](const BackupDelivery& a, const BackupDelivery& b) {
                                             return a.deliver_t < b.deliver_t;
                                         });
                    }
                }

                auto& stats = report_.links[{tx.sender_id, rx_id}];
                ++stats.transmissions;
                ++reception_attempts_;
                if (outcome.delivered) {
                    ++stats.delivered;
                } else {
                    switch (outcome.loss_reason) {
                        case LossReason::kWeakSignal: ++stats.weak; break;
                        case LossReason::kOverdrive: ++stats.overdrive; break;
                        case LossReason::kMacCollision:
                            ++stats.collided;
                            ++collided_receptions_;
                            break;
                        case LossReason::kMalformed: ++stats.malformed; break;
                        case LossReason::kNone: break;
                    }
                }

                PacketRecord rec;
                rec.t = t;
                rec.tx_id = tx.sender_id;
                rec.rx_id = rx_id;
                rec.seq = tx.seq;
                rec.snr_db = snr;
                rec.channel_db = g.first.power_db;
                rec.delivered = outcome.delivered;
                rec.reason = outcome.loss_reason;
                rec.distance_m = distance(node_terminal(tx.node).state.position,
                                          node_terminal(rx_node).state.position);
                report_.packets.push_back(rec);

                SnrSample sample;
                sample.t = t;
                sample.tx_id = tx.sender_id;
                sample.rx_id = rx_id;
                sample.channel_power_db = g.first.power_db;
                sample.snr_db = snr;
                sample.n_components = g.second;
                report_.snr_trace.push_back(sample);
            }
        }
    }

    void on_drone_beacon(std::size_t rx_index, const BeaconMessage& msg, double t) {
        auto& d = drones_[rx_index];
        // Replay / out-of-order rejection keyed on the sequence number.
        auto& last = last_seq_[{msg.drone_id, d.spec->id}];
        if (msg.seq <= last) return;
        last = msg.seq;
        PartnerTrack track{msg.drone_id, trajectory_from_beacon(msg, sc_.origin), msg.status};
        d.partners.insert_or_assign(msg.drone_id, std::move(track));
        d.partner_rx_time[msg.drone_id] = t;
        d.beacon_received = true;
    }

    void on_drone_gbas(std::size_t rx_index, std::uint32_t station_id,
                       const AuthenticatedMessage& msg, std::uint64_t tag, double t) {
        auto& d = drones_[rx_index];
        auto it = d.verifiers.find(station_id);
        if (it == d.verifiers.end()) return;
        const double t_rx = t + d.clock_skew_s;
        for (const auto& ev : it->second.on_message(msg, t_rx, tag)) {
            TeslaEventRecord rec;
            rec.t = t;
            rec.rx_id = d.spec->id;
            rec.tag = ev.tag;
            rec.result = ev.result;
            report_.tesla_events.push_back(rec);
            switch (ev.result) {
                case VerifyResult::kAccept: ++report_.tesla_accept; break;
                case VerifyResult::kReject: ++report_.tesla_reject; break;
                case VerifyResult::kBuffered: ++report_.tesla_buffered; break;
            }
        }
    }

    void run_ca(double t) {
        for (auto& d : drones_) {
            const bool active = d.ca.mode != CaMode::kCruise;
            if (!d.beacon_received && !active) continue;

            std::vector<PartnerTrack> partners;
            for (const auto& [id, track] : d.partners) {
                const double age = t - d.partner_rx_time[id];
                if (age <= sc_.protocol.tracking.lost_after_s) partners.push_back(track);
            }
            const CaMode before = d.ca.mode;
            auto [next, cmd] = ca_step(d.ca, d.spec->id, d.trajectory, d.plan_time, partners, t,
                                       sc_.protocol.ca);
            d.ca = next;
            if (cmd.hold) {
                d.holding = true;
                d.hold_position = d.state.position;
                d.hold_heading = d.state.heading;
                d.status = DroneStatus::kHolding;
                d.pending_emergency = cmd.emergency;
            }
            if (cmd.resume) {
                d.holding = false;
                d.status = DroneStatus::kCruise;
            }
            if (next.mode != before) {
                CaEventRecord ev;
                ev.t = t;
                ev.drone_id = d.spec->id;
                ev.transition = std::string(ca_mode_name(before)) + "->" + ca_mode_name(next.mode);
                ev.partner = cmd.partner.value_or(next.conflict_partner.value_or(0));
                ev.d_min_pred_m = cmd.predicted_min_m;
                report_.ca_events.push_back(ev);
            }
        }
    }

    void sample_tracks(double t) {
        for (auto& st : stations_) {
            if (st.spec->role != StationRole::kMonitor) continue;
            st.tracks.age(t);
            for (const auto& [id, entry] : st.tracks.entries()) {
                TrackRecord rec;
                rec.t = t;
                rec.station_id = st.spec->id;
                rec.drone_id = id;
                rec.status = entry.status;
                rec.age_s = t - entry.last_heard_s;
                report_.track_samples.push_back(rec);
                auto& avail = availability_[st.spec->id];
                avail.second += 1;
                if (entry.status == TrackStatus::kLive) avail.first += 1;
            }
            // Drones never heard count against availability.
            auto& avail = availability_[st.spec->id];
            avail.second += drones_.size() - st.tracks.entries().size();
        }
        // Beacon update ages between drones.
        for (const auto& d : drones_) {
            for (const auto& [id, rx_time] : d.partner_rx_time) {
                const double age = t - rx_time;
                const std::size_t bin =
                    std::min<std::size_t>(age_histogram_.size() - 1,
                                          static_cast<std::size_t>(age / 0.01));
                ++age_histogram_[bin];
                ++age_samples_;
            }
        }
    }

    void finalize() {
        if (!std::isfinite(report_.min_separation_m)) report_.min_separation_m = -1.0;
        for (const auto& [station, counts] : availability_) {
            report_.tracker_availability[station] =
                counts.second == 0
                    ? 0.0
                    : static_cast<double>(counts.first) / static_cast<double>(counts.second);
        }
        if (age_samples_ > 0) {
            const std::uint64_t target =
                static_cast<std::uint64_t>(std::ceil(0.95 * static_cast<double>(age_samples_)));
            std::uint64_t seen = 0;
            for (std::size_t bin = 0; bin < age_histogram_.size(); ++bin) {
                seen += age_histogram_[bin];
                if (seen >= target) {
                    report_.beacon_age_p95_s = static_cast<double>(bin) * 0.01;
                    break;
                }
            }
        }
        report_.mac_collision_rate =
            reception_attempts_ == 0 ? 0.0
                                     : static_cast<double>(collided_receptions_) /
                                           static_cast<double>(reception_attempts_);
    }

    const Scenario& sc_;
    UrbanScene scene_;
    ChannelElements elements_;
    std::vector<DroneRuntime> drones_;
    std::vector<StationRuntime> stations_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, Rng> link_rngs_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> last_seq_;
    std::unique_ptr<Rng> tx_jitter_;
    std::unique_ptr<Rng> backup_rng_;
    std::unique_ptr<Rng> gbas_payload_rng_;
    std::vector<BackupDelivery> backup_queue_;
    std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>> availability_;
    std::vector<std::uint64_t> age_histogram_;
    std::uint64_t age_samples_ = 0;
    std::uint64_t reception_attempts_ = 0;
    std::uint64_t collided_receptions_ = 0;
    long track_sample_stride_ = 100;
    SimulationReport report_;
};

}  // namespace

SimulationReport run(const Scenario& scenario) {
    Simulation sim(scenario);
    return sim.execute();
}

// ---------------------------------------------------------------------------
// Mission replication presets.
//
// Calibration constants: the shadow mask and the per-mission system loss are
// tuned so the experimental radio reproduces the measured loss patterns while
// the COTS radio stays loss free on the same channel realizations.

namespace {

constexpr double kMissionMaskLobeDepthDb = 9.0;
constexpr double kMissionMaskCapElevationRad = 0.1396; // 8 deg
constexpr double kMissionMaskCapDepthDb = 11.3;
constexpr double kMission12SystemLossDb = 19.0;
constexpr double kMission3SystemLossDb = 23.5;
constexpr double kMission3DiffractionPenaltyDb = 9.0;

std::vector<Building> model_city_buildings() {
    return {
        {{70.0, -30.0}, {82.0, -18.0}, 7.5}, {{88.0, -26.0}, {100.0, -14.0}, 6.0},
        {{106.0, -30.0}, {118.0, -20.0}, 8.0}, {{124.0, -28.0}, {136.0, -16.0}, 5.5},
        {{72.0, -8.0}, {84.0, 4.0}, 6.5},    {{90.0, -6.0}, {102.0, 6.0}, 7.0},
        {{108.0, -4.0}, {122.0, 8.0}, 5.0},  {{126.0, -10.0}, {138.0, 2.0}, 7.5},
        {{74.0, 12.0}, {86.0, 24.0}, 8.0},   {{92.0, 14.0}, {104.0, 26.0}, 6.5},
        {{110.0, 16.0}, {124.0, 28.0}, 7.0}, {{128.0, 12.0}, {140.0, 24.0}, 6.0},
    };
}

}  // namespace

Scenario mission_scenario(int id, RadioKind kind, std::uint64_t seed) {
    if (id < 1 || id > 3) throw std::invalid_argument("mission id must be 1, 2 or 3");
    MissionConfig mc;
    auto trajs = make_mission_preset(id, mc);

    Scenario sc;
    sc.name = "mission" + std::to_string(id) + (kind == RadioKind::kCots ? "_cots" : "_exp");
    sc.seed = seed;
    sc.time_step_s = 0.01;
    sc.carrier_hz = 5050e6;
    sc.protocol.ca_enabled = false; // measurement flights, avoidance off
    sc.tesla.enabled = false;

    RadioProfile radio =
        kind == RadioKind::kCots ? cots_radio_profile() : experimental_radio_profile();

    AirframeShadowMask mask;
    mask.lobe_count = 6;
    if (id == 3) {
        // Broadside geometry: the frame never blocks the link.
        mask.lobe_depth_db = 0.0;
        mask.cap_depth_db = 0.0;
    } else {
        mask.lobe_depth_db = kMissionMaskLobeDepthDb;
        mask.cap_elevation_rad = kMissionMaskCapElevationRad;
        mask.cap_depth_db = kMissionMaskCapDepthDb;
    }

    if (id == 3) {
        sc.scene.extent = {{-20.0, -20.0}, {80.0, 40.0}};
        // Single obstacle between the tracks; the direct path dips under its
        // roof only near the widest separations.
        const double track = std::sqrt(mc.m3_max_distance_m * mc.m3_max_distance_m -
                                       mc.m3_lateral_separation_m * mc.m3_lateral_separation_m);
        sc.scene.buildings = {{{0.40 * track, 4.0}, {0.42 * track, 6.0}, 22.0}};
        sc.channel.scatterer_density_per_m2 = 0.0;
        sc.channel.system_loss_db = kMission3SystemLossDb;
        sc.channel.diffraction_penalty_db = kMission3DiffractionPenaltyDb;
        sc.duration_s = 3.0 * trajs.tx.period();
    } else {
        sc.scene.extent = {{-80.0, -80.0}, {160.0, 80.0}};
        // The model city sits beside the orbit, well below the flight levels;
        // the measurement links stay line-of-sight.
        sc.scene.buildings = model_city_buildings();
        sc.channel.scatterer_density_per_m2 = 0.0;
        sc.channel.system_loss_db = kMission12SystemLossDb;
        sc.duration_s = trajs.rx.period();
    }

    sc.drones.push_back({1, std::move(trajs.tx), radio, mask});
    sc.drones.push_back({2, std::move(trajs.rx), radio, mask});
    return sc;
}

SimulationReport replicate_mission(int id, RadioKind kind, std::uint64_t seed) {
    return run(mission_scenario(id, kind, seed));
}

Scenario density_scenario(int n_drones, double area_km2, double duration_s, std::uint64_t seed) {
    if (n_drones < 1) throw std::invalid_argument("density scenario needs at least one drone");
    if (area_km2 <= 0.0) throw std::invalid_argument("density scenario needs a positive area");
    Scenario sc;
    sc.name = "density" + std::to_string(n_drones);
    sc.seed = seed;
    sc.duration_s = duration_s;
    sc.time_step_s = 0.01;
    sc.protocol.ca_enabled = false; // strips are disjoint by construction
    const double side = std::sqrt(area_km2) * 1000.0;
    sc.scene.extent = {{0.0, 0.0}, {side, side}};

    Rng rng = derive_rng(seed, "densitytracks");
    const double strip = side / static_cast<double>(n_drones);
    for (int i = 0; i < n_drones; ++i) {
        const double y = (static_cast<double>(i) + 0.5) * strip;
        const double z = 30.0;
        const double speed = rng.uniform(4.0, 12.0);
        const double x0 = rng.uniform(0.0, side * 0.25);
        Trajectory traj({Waypoint{{x0, y, z}, speed, 0.0}, Waypoint{{side, y, z}, speed, 0.0},
                         Waypoint{{0.0, y, z}, speed, 0.0}},
                        /*loop=*/true);
        RadioProfile radio = cots_radio_profile();
        sc.drones.push_back(
            {static_cast<std::uint32_t>(i + 1), std::move(traj), radio, AirframeShadowMask{}});
    }
    return sc;
}

SimulationReport density_stress(int n_drones, double area_km2, double duration_s,
                                std::uint64_t seed) {
    return run(density_scenario(n_drones, area_km2, duration_s, seed));
}

// ---------------------------------------------------------------------------
// Output files

namespace {

void write_packets_csv(std::ostream& os, const SimulationReport& report) {
    os << "t,tx_id,rx_id,seq,snr_db,channel_db,delivered,reason,distance_m\n";
    char line[256];
    for (const auto& p : report.packets) {
        std::snprintf(line, sizeof(line), "%.3f,%u,%u,%u,%.4f,%.4f,%d,%s,%.4f\n", p.t, p.tx_id,
                      p.rx_id, p.seq, p.snr_db, p.channel_db, p.delivered ? 1 : 0,
                      loss_reason_name(p.reason), p.distance_m);
        os << line;
    }
}

void write_snr_csv(std::ostream& os, const SimulationReport& report) {
    os << "t,tx_id,rx_id,channel_power_db,snr_db,n_components\n";
    char line[192];
    for (const auto& s : report.snr_trace) {
        std::snprintf(line, sizeof(line), "%.3f,%u,%u,%.4f,%.4f,%d\n", s.t, s.tx_id, s.rx_id,
                      s.channel_power_db, s.snr_db, s.n_components);
        os << line;
    }
}

void write_ca_csv(std::ostream& os, const SimulationReport& report) {
    os << "t,drone_id,transition,partner,d_min_pred_m\n";
    char line[192];
    for (const auto& e : report.ca_events) {
        std::snprintf(line, sizeof(line), "%.3f,%u,%s,%u,%.4f\n", e.t, e.drone_id,
                      e.transition.c_str(), e.partner, e.d_min_pred_m);
        os << line;
    }
}

void write_tracks_jsonl(std::ostream& os, const SimulationReport& report) {
    for (const auto& r : report.track_samples) {
        ordered_json j;
        j["t"] = fmt("%.3f", r.t);
        j["station"] = r.station_id;
        j["drone"] = r.drone_id;
        j["status"] = track_status_name(r.status);
        j["age_s"] = fmt("%.3f", r.age_s);
        os << j.dump() << "\n";
    }
}

void write_tesla_csv(std::ostream& os, const SimulationReport& report) {
    os << "t,rx_id,tag,result\n";
    char line[128];
    for (const auto& e : report.tesla_events) {
        std::snprintf(line, sizeof(line), "%.3f,%u,%llu,%s\n", e.t, e.rx_id,
                      static_cast<unsigned long long>(e.tag), verify_result_name(e.result));
        os << line;
    }
}

ordered_json report_json(const SimulationReport& report) {
    ordered_json j;
    j["seed"] = report.seed;
    j["duration_s"] = report.duration_s;
    ordered_json links = ordered_json::array();
    for (const auto& [key, stats] : report.links) {
        ordered_json l;
        l["tx_id"] = key.first;
        l["rx_id"] = key.second;
        l["transmissions"] = stats.transmissions;
        l["delivered"] = stats.delivered;
        l["per"] = stats.per();
        l["weak_signal"] = stats.weak;
        l["overdrive"] = stats.overdrive;
        l["mac_collision"] = stats.collided;
        l["malformed"] = stats.malformed;
        links.push_back(l);
    }
    j["links"] = links;
    j["min_separation_m"] =
        std::isfinite(report.min_separation_m) ? report.min_separation_m : -1.0;
    ordered_json avail;
    for (const auto& [station, value] : report.tracker_availability)
        avail[std::to_string(station)] = value;
    j["tracker_availability"] = avail;
    j["ca_events"] = report.ca_events.size();
    j["tesla"] = {{"accept", report.tesla_accept},
                  {"buffered", report.tesla_buffered},
                  {"reject", report.tesla_reject}};
    j["beacon_age_p95_s"] = report.beacon_age_p95_s;
    j["mac_collision_rate"] = report.mac_collision_rate;
    return j;
}

}  // namespace

void write_outputs(const SimulationReport& report, const Scenario& scenario,
                   const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

    {
        std::ofstream os(path("packets.csv"), std::ios::binary);
        write_packets_csv(os, report);
    }
    {
        std::ofstream os(path("snr.csv"), std::ios::binary);
        write_snr_csv(os, report);
    }
    {
        std::ofstream os(path("ca_events.csv"), std::ios::binary);
        write_ca_csv(os, report);
    }
    {
        std::ofstream os(path("tracks.jsonl"), std::ios::binary);
        write_tracks_jsonl(os, report);
    }
    {
        std::ofstream os(path("tesla_events.csv"), std::ios::binary);
        write_tesla_csv(os, report);
    }
    {
        // Scene as actually simulated, including generated buildings.
        UrbanScene scene = scenario.scene;
        if (scenario.p1410) {
            auto generated = generate_buildings(*scenario.p1410, scene.extent,
                                                derive_seed(scenario.seed, "p1410"));
            scene.buildings.insert(scene.buildings.end(), generated.begin(), generated.end());
        }
        std::ofstream os(path("buildings.csv"), std::ios::binary);
        write_buildings_csv(os, scene.buildings);
        const auto elements =
            place_channel_elements(scene, scenario.channel, derive_seed(scenario.seed, "elements"));
        std::ofstream es(path("elements.csv"), std::ios::binary);
        write_elements_csv(es, elements);
    }
    {
        std::ofstream os(path("report.json"), std::ios::binary);
        os << report_json(report).dump(2) << "\n";
    }
}

std::string summary_text(const SimulationReport& report) {
    std::ostringstream os;
    os << "link  tx->rx   sent  dlvd  PER      weak  over  coll  malf\n";
    for (const auto& [key, s] : report.links) {
        char line[160];
        std::snprintf(line, sizeof(line), "%6u->%-6u %6llu %5llu  %-8s %5llu %5llu %5llu %5llu\n",
                      key.first, key.second, static_cast<unsigned long long>(s.transmissions),
                      static_cast<unsigned long long>(s.delivered), sig3(s.per()).c_str(),
                      static_cast<unsigned long long>(s.weak),
                      static_cast<unsigned long long>(s.overdrive),
                      static_cast<unsigned long long>(s.collided),
                      static_cast<unsigned long long>(s.malformed));
        os << line;
    }
    if (report.min_separation_m >= 0.0)
        os << "min separation: " << sig3(report.min_separation_m) << " m\n";
    os << "ca events: " << report.ca_events.size() << "\n";
    for (const auto& [station, value] : report.tracker_availability)
        os << "tracker availability (station " << station << "): " << sig3(value) << "\n";
    os << "tesla accept/buffered/reject: " << report.tesla_accept << "/" << report.tesla_buffered
       << "/" << report.tesla_reject << "\n";
    if (report.beacon_age_p95_s > 0.0)
        os << "beacon age p95: " << sig3(report.beacon_age_p95_s) << " s\n";
    os << "mac collision rate: " << sig3(report.mac_collision_rate) << "\n";
    return os.str();
}

}  // namespace dronecast
