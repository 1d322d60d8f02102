#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sigtime/common.hpp"
#include "sigtime/core.hpp"

namespace sigtime {

// Hourly demand in vehicles per hour; a single entry means a flat rate.
struct DemandProfile {
    std::vector<double> hourly_vph;

    double at_hour(int hour) const {
        if (hourly_vph.empty()) return 0.0;
        if (hourly_vph.size() == 1) return hourly_vph[0];
        return hourly_vph[static_cast<std::size_t>(((hour % 24) + 24) % 24) % hourly_vph.size()];
    }
};

struct SimIntersection {
    IntersectionGeometry geometry;
    SignalPlan plan;
    double spacing_m = 800.0;  // distance to the next intersection along the corridor
    std::map<Direction, DemandProfile> demand_vph;
};

struct SimConfig {
    std::vector<SimIntersection> intersections;
    double duration_s = 86400.0;
    double cruise_speed_mps = 13.4;
    double max_accel_mps2 = 2.0;
    double max_decel_mps2 = 3.0;
    double saturation_headway_s = 2.0;
    double stopline_setback_m = 3.0;
    double queue_spacing_m = 7.0;
    double approach_length_m = 300.0;
    double exit_length_m = 250.0;
    double probe_penetration = 1.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (!(duration_s > 0)) throw ConfigError("sim: duration must be positive");
        if (!(probe_penetration > 0.0) || probe_penetration > 1.0) {
            throw ConfigError("sim: probe penetration must lie in (0, 1]");
        }
        for (double v : {cruise_speed_mps, max_accel_mps2, max_decel_mps2, saturation_headway_s,
                         stopline_setback_m, queue_spacing_m, approach_length_m, exit_length_m}) {
            if (!(v > 0)) throw ConfigError("sim: kinematic constants must be positive");
        }
        if (intersections.empty()) throw ConfigError("sim: at least one intersection required");
        for (const auto& si : intersections) validate_plan(si.plan);
    }
};

// Ground-truth targets. Plans are pre-timed and constant over the run, so the
// per-(intersection, phase, hour) targets are resolved from the stored plans.
struct GroundTruth {
    int hours = 0;  // hour coverage [0, hours)
    std::map<std::string, SignalPlan> plans;

    const Phase& phase_of(const std::string& intersection_id, Direction d, Movement m) const {
        auto it = plans.find(intersection_id);
        if (it == plans.end()) throw DataError("ground truth: unknown intersection '" + intersection_id + "'");
        for (const auto& ph : it->second.phases) {
            if (ph.direction == d && ph.movement == m) return ph;
        }
        throw DataError("ground truth: intersection '" + intersection_id + "' has no phase (" +
                        std::string(to_string(d)) + ", " + to_string(m) + ")");
    }

    // Any phase serving the direction; prefers the through movement when the
    // direction carries several phases with distinct red times.
    const Phase& phase_for_direction(const std::string& intersection_id, Direction d) const {
        auto it = plans.find(intersection_id);
        if (it == plans.end()) throw DataError("ground truth: unknown intersection '" + intersection_id + "'");
        const Phase* found = nullptr;
        for (const auto& ph : it->second.phases) {
            if (ph.direction != d) continue;
            if (ph.movement == Movement::Through) return ph;
            if (found && found->red_s != ph.red_s) {
                throw DataError("ground truth: intersection '" + intersection_id + "' direction " +
                                to_string(d) + " has ambiguous red times and no through phase");
            }
            found = &ph;
        }
        if (!found) {
            throw DataError("ground truth: intersection '" + intersection_id + "' has no phase for direction " +
                            to_string(d));
        }
        return *found;
    }

    bool covers_hour(int hour) const { return hour >= 0 && hour < hours; }

    double target_cycle(const std::string& intersection_id, int hour) const {
        if (!covers_hour(hour)) {
            throw DataError("ground truth: hour " + std::to_string(hour) + " outside coverage for '" +
                            intersection_id + "'");
        }
        auto it = plans.find(intersection_id);
        if (it == plans.end()) throw DataError("ground truth: unknown intersection '" + intersection_id + "'");
        return it->second.cycle_s;
    }
};

// Diagnostic record of one queued (stopped) vehicle; used by oracle tests.
struct QueueRecord {
    std::string vehicle_id;
    std::string intersection_id;
    Direction direction = Direction::North;
    int slot = 0;                // 0 = at the stopline
    double rest_s = 0;           // time the vehicle came to rest
    double depart_s = 0;         // acceleration start
    double green_onset_s = 0;    // onset of the green window it departed in
};

struct SimResult {
    std::vector<Trajectory> trajectories;
    GroundTruth ground_truth;
    std::vector<QueueRecord> queue_records;
    std::size_t total_vehicles = 0;
};

namespace detail {

struct PhaseWindow {
    double cycle = 0;
    double red_s = 0;
    double green_s = 0;
    double red_begin = 0;  // absolute time the red interval first begins (mod cycle)

    bool is_red(double t) const {
        double tau = std::fmod(t - red_begin, cycle);
        if (tau < 0) tau += cycle;
        return tau < red_s;
    }

    // Earliest feasible departure >= lower inside a green window.
    // Returns {depart, green onset of that window}.
    std::pair<double, double> depart_after(double lower) const {
        const double base = red_begin + red_s;  // first green onset
        double m = std::floor((lower - base) / cycle);
        double onset = base + m * cycle;
        if (lower >= onset + green_s) onset += cycle;
        return {std::max(lower, onset), onset};
    }
};

struct VehicleSchedule {
    double spawn_s = 0;
    bool stops = false;
    int slot = 0;
    double brake_start_s = 0;
    double rest_s = 0;
    double depart_s = 0;       // acceleration start
    double green_onset_s = 0;
    double cross_s = 0;        // stopline crossing time
};

// Sequential scheduler for one (intersection, direction) stream: single lane,
// FIFO, queue slots behind the stopline, discharge spaced by the saturation
// headway from green onset.
class ApproachScheduler {
public:
    ApproachScheduler(const SimConfig& cfg, const PhaseWindow& window, std::string stream_name)
        : cfg_(cfg), win_(window), stream_(std::move(stream_name)) {
        brake_time_ = cfg.cruise_speed_mps / cfg.max_decel_mps2;
        brake_dist_ = cfg.cruise_speed_mps * cfg.cruise_speed_mps / (2.0 * cfg.max_decel_mps2);
        accel_time_ = cfg.cruise_speed_mps / cfg.max_accel_mps2;
        accel_dist_ = cfg.cruise_speed_mps * cfg.cruise_speed_mps / (2.0 * cfg.max_accel_mps2);
    }

    VehicleSchedule schedule(double spawn_s) {
        const double v = cfg_.cruise_speed_mps;
        VehicleSchedule s;
        s.spawn_s = spawn_s;
        // Unimpeded stopline crossing at cruise speed.
        const double free_cross = spawn_s + (cfg_.approach_length_m - cfg_.stopline_setback_m) / v;

        bool blocked = false;
        if (prev_ && prev_->stops) {
            const int back_slot = prev_->slot + 1;
            const double rest_at_back = rest_time_for_slot(spawn_s, back_slot);
            blocked = rest_at_back < prev_->cross_s;
        }

        if (!blocked && !win_.is_red(free_cross)) {
            s.stops = false;
            s.cross_s = free_cross;
            prev_ = s;
            return s;
        }

        s.stops = true;
        s.slot = blocked ? prev_->slot + 1 : 0;
        const double slot_pos = cfg_.stopline_setback_m + s.slot * cfg_.queue_spacing_m;
        if (slot_pos + brake_dist_ > cfg_.approach_length_m) {
            throw DataError("sim: queue spillback on " + stream_ + " (queue slot " +
                            std::to_string(s.slot) + " exceeds the approach link)");
        }
        s.brake_start_s = spawn_s + (cfg_.approach_length_m - slot_pos - brake_dist_) / v;
        s.rest_s = s.brake_start_s + brake_time_;

        double lower = s.rest_s;
        if (prev_ && prev_->stops) lower = std::max(lower, prev_->depart_s + cfg_.saturation_headway_s);
        auto [depart, onset] = win_.depart_after(lower);
        s.depart_s = depart;
        s.green_onset_s = onset;

        // Stopline crossing after accelerating from the queue slot.
        const double dist = s.slot * cfg_.queue_spacing_m;
        if (dist <= accel_dist_) {
            s.cross_s = s.depart_s + std::sqrt(2.0 * dist / cfg_.max_accel_mps2);
        } else {
            s.cross_s = s.depart_s + accel_time_ + (dist - accel_dist_) / v;
        }
        prev_ = s;
        return s;
    }

    double brake_time() const { return brake_time_; }
    double accel_time() const { return accel_time_; }
    double accel_dist() const { return accel_dist_; }
    double brake_dist() const { return brake_dist_; }

private:
    double rest_time_for_slot(double spawn_s, int slot) const {
        const double slot_pos = cfg_.stopline_setback_m + slot * cfg_.queue_spacing_m;
        return spawn_s + (cfg_.approach_length_m - slot_pos - brake_dist_) / cfg_.cruise_speed_mps + brake_time_;
    }

    const SimConfig& cfg_;
    PhaseWindow win_;
    std::string stream_;
    std::optional<VehicleSchedule> prev_;
};

inline void heading_axis(Direction d, double& ux, double& uy, double& heading) {
    switch (d) {
        case Direction::North: ux = 0; uy = 1; heading = 0; return;
        case Direction::East: ux = 1; uy = 0; heading = 90; return;
        case Direction::South: ux = 0; uy = -1; heading = 180; return;
        case Direction::West: ux = -1; uy = 0; heading = 270; return;
    }
    throw std::logic_error("unreachable direction");
}

// Position (relative to the intersection center, along the travel axis) and
// speed at absolute time t for the piecewise cruise/brake/dwell/accel profile.
inline void profile_at(const SimConfig& cfg, const VehicleSchedule& s, double brake_time, double accel_time,
                       double accel_dist, double t, double& pos, double& speed) {
    const double v = cfg.cruise_speed_mps;
    if (!s.stops) {
        pos = -cfg.approach_length_m + v * (t - s.spawn_s);
        speed = v;
        return;
    }
    const double slot_pos = -(cfg.stopline_setback_m + s.slot * cfg.queue_spacing_m);
    if (t < s.brake_start_s) {
        pos = -cfg.approach_length_m + v * (t - s.spawn_s);
        speed = v;
    } else if (t < s.rest_s) {
        const double tau = t - s.brake_start_s;
        pos = (slot_pos - cfg.cruise_speed_mps * cfg.cruise_speed_mps / (2.0 * cfg.max_decel_mps2)) + v * tau -
              0.5 * cfg.max_decel_mps2 * tau * tau;
        speed = std::max(0.0, v - cfg.max_decel_mps2 * tau);
    } else if (t < s.depart_s) {
        pos = slot_pos;
        speed = 0.0;
    } else if (t < s.depart_s + accel_time) {
        const double tau = t - s.depart_s;
        pos = slot_pos + 0.5 * cfg.max_accel_mps2 * tau * tau;
        speed = cfg.max_accel_mps2 * tau;
    } else {
        pos = slot_pos + accel_dist + v * (t - s.depart_s - accel_time);
        speed = v;
    }
}

inline PhaseWindow phase_window(const SignalPlan& plan, const Phase& ph) {
    PhaseWindow w;
    w.cycle = plan.cycle_s;
    w.red_s = ph.red_s;
    w.green_s = ph.green_s;
    w.red_begin = plan.plan_offset_s + ph.red_start_offset_s;
    return w;
}

}  // namespace detail

// Generates the 1 Hz trace for one scheduled vehicle. Exposed for the
// closed-form kinematic oracle tests; simulate() drives it for every arrival.
inline Trajectory trace_vehicle(const SimConfig& cfg, const SimIntersection& si, Direction dir,
                                const detail::VehicleSchedule& sched, std::string vehicle_id) {
    double ux, uy, heading;
    detail::heading_axis(dir, ux, uy, heading);
    const double brake_time = cfg.cruise_speed_mps / cfg.max_decel_mps2;
    const double accel_time = cfg.cruise_speed_mps / cfg.max_accel_mps2;
    const double accel_dist = cfg.cruise_speed_mps * cfg.cruise_speed_mps / (2.0 * cfg.max_accel_mps2);

    Trajectory traj;
    traj.vehicle_id = vehicle_id;
    for (double t = std::ceil(sched.spawn_s); t < cfg.duration_s; t += 1.0) {
        double pos, speed;
        detail::profile_at(cfg, sched, brake_time, accel_time, accel_dist, t, pos, speed);
        if (pos > cfg.exit_length_m) break;
        TracePoint p;
        p.vehicle_id = vehicle_id;
        p.t = t;
        p.x = si.geometry.center_x + ux * pos;
        p.y = si.geometry.center_y + uy * pos;
        p.speed = speed;
        p.heading = heading;
        traj.points.push_back(std::move(p));
    }
    return traj;
}

// Deterministic corridor simulation. Arrival processes, queueing and traces
// are fully reproducible from cfg.rng_seed.
inline SimResult simulate(const SimConfig& cfg) {
    cfg.validate();
    SimResult result;
    result.ground_truth.hours = static_cast<int>(std::ceil(cfg.duration_s / 3600.0));
    for (const auto& si : cfg.intersections) {
        result.ground_truth.plans[si.plan.intersection_id] = si.plan;
    }

    static const Direction kDirections[] = {Direction::North, Direction::East, Direction::South, Direction::West};
    for (std::size_t ii = 0; ii < cfg.intersections.size(); ++ii) {
        const auto& si = cfg.intersections[ii];
        for (Direction dir : kDirections) {
            auto dit = si.demand_vph.find(dir);
            if (dit == si.demand_vph.end()) continue;
            const DemandProfile& demand = dit->second;

            const Phase* phase = nullptr;
            for (const auto& ph : si.plan.phases) {
                if (ph.direction == dir && ph.movement == Movement::Through) {
                    phase = &ph;
                    break;
                }
            }
            if (!phase) {
                throw ConfigError("sim: intersection '" + si.plan.intersection_id +
                                  "' has demand but no through phase for direction " + to_string(dir));
            }

            const std::string stream = si.plan.intersection_id + "/" + to_string(dir);
            Rng rng(derive_seed(cfg.rng_seed, "sim.arrivals/" + stream));
            detail::ApproachScheduler scheduler(cfg, detail::phase_window(si.plan, *phase), stream);

            const int n_hours = static_cast<int>(std::ceil(cfg.duration_s / 3600.0));
            double prev_spawn = -1e18;
            long seq = 0;
            for (int hour = 0; hour < n_hours; ++hour) {
                const double rate_vph = demand.at_hour(hour);
                if (!(rate_vph > 0)) continue;
                const double rate = rate_vph / 3600.0;
                const double hour_end = std::min((hour + 1) * 3600.0, cfg.duration_s);
                double t = hour * 3600.0;
                for (;;) {
                    t += rng.exponential(rate);
                    if (t >= hour_end) break;
                    // 1 s minimum spawn gap keeps cruise traces physically disjoint.
                    const double spawn = std::max(t, prev_spawn + 1.0);
                    if (spawn >= hour_end) break;
                    prev_spawn = spawn;

                    char idbuf[64];
                    std::snprintf(idbuf, sizeof idbuf, "%s-%s-%06ld", si.plan.intersection_id.c_str(),
                                  to_string(dir), seq++);
                    std::string vid(idbuf);

                    auto sched = scheduler.schedule(spawn);
                    Trajectory traj = trace_vehicle(cfg, si, dir, sched, vid);
                    ++result.total_vehicles;
                    if (sched.stops && sched.depart_s - sched.rest_s >= 2.0) {
                        QueueRecord q;
                        q.vehicle_id = vid;
                        q.intersection_id = si.plan.intersection_id;
                        q.direction = dir;
                        q.slot = sched.slot;
                        q.rest_s = sched.rest_s;
                        q.depart_s = sched.depart_s;
                        q.green_onset_s = sched.green_onset_s;
                        result.queue_records.push_back(std::move(q));
                    }
                    if (!traj.points.empty()) result.trajectories.push_back(std::move(traj));
                }
            }
        }
    }

    std::sort(result.trajectories.begin(), result.trajectories.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.vehicle_id < b.vehicle_id; });
    std::sort(result.queue_records.begin(), result.queue_records.end(),
              [](const QueueRecord& a, const QueueRecord& b) { return a.vehicle_id < b.vehicle_id; });
    return result;
}

// Keeps each vehicle independently with probability `penetration`. The
// decision depends only on (seed, vehicle_id), never on list order.
inline std::vector<Trajectory> sample_probes(const std::vector<Trajectory>& trajectories, double penetration,
                                             std::uint64_t seed) {
    if (!(penetration > 0.0) || penetration > 1.0) {
        throw std::domain_error("sample_probes: penetration must lie in (0, 1]");
    }
    std::vector<Trajectory> kept;
    for (const auto& traj : trajectories) {
        const double u =
            static_cast<double>(splitmix64(seed ^ fnv1a64(traj.vehicle_id)) >> 11) * 0x1.0p-53;
        if (u < penetration) kept.push_back(traj);
    }
    return kept;
}

}  // namespace sigtime
