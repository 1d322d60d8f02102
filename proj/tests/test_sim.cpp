#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "sigtime/sim.hpp"

using namespace sigtime;

namespace {

SimIntersection make_intersection(const std::string& id, double cx, double cy, double cycle, double red_ns,
                                  double plan_offset = 0.0) {
    SimIntersection si;
    si.geometry.intersection_id = id;
    si.geometry.center_x = cx;
    si.geometry.center_y = cy;
    si.geometry.approach_headings = {{Direction::North, 0.0},
                                     {Direction::East, 90.0},
                                     {Direction::South, 180.0},
                                     {Direction::West, 270.0}};
    si.plan.intersection_id = id;
    si.plan.cycle_s = cycle;
    si.plan.plan_offset_s = plan_offset;
    const double red_ew = cycle - red_ns;
    si.plan.phases = {
        {"ns_t", Direction::North, Movement::Through, red_ns, cycle - red_ns, 0.0},
        {"sn_t", Direction::South, Movement::Through, red_ns, cycle - red_ns, 0.0},
        {"ew_t", Direction::East, Movement::Through, red_ew, cycle - red_ew, red_ns},
        {"we_t", Direction::West, Movement::Through, red_ew, cycle - red_ew, red_ns},
    };
    return si;
}

SimConfig small_config(double demand_vph, double duration_s = 7200.0, std::uint64_t seed = 42) {
    SimConfig cfg;
    cfg.duration_s = duration_s;
    cfg.rng_seed = seed;
    auto si = make_intersection("I1", 0, 0, 90, 40);
    for (Direction d : {Direction::North, Direction::East, Direction::South, Direction::West}) {
        si.demand_vph[d] = DemandProfile{{demand_vph}};
    }
    cfg.intersections.push_back(si);
    return cfg;
}

}  // namespace

TEST_CASE("zero demand yields no trajectories but a populated ground truth") {
    auto cfg = small_config(0.0, 3600.0);
    const auto result = simulate(cfg);
    CHECK(result.trajectories.empty());
    CHECK(result.total_vehicles == 0);
    REQUIRE(result.ground_truth.plans.count("I1") == 1);
    CHECK(result.ground_truth.target_cycle("I1", 0) == 90.0);
    CHECK(result.ground_truth.phase_for_direction("I1", Direction::North).red_s == 40.0);
}

TEST_CASE("same seed twice reproduces bit-identical trajectories") {
    auto cfg = small_config(150.0, 1800.0);
    const auto a = simulate(cfg);
    const auto b = simulate(cfg);
    REQUIRE(a.trajectories.size() == b.trajectories.size());
    for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
        REQUIRE(a.trajectories[i].vehicle_id == b.trajectories[i].vehicle_id);
        REQUIRE(a.trajectories[i].points.size() == b.trajectories[i].points.size());
        for (std::size_t j = 0; j < a.trajectories[i].points.size(); ++j) {
            const auto& pa = a.trajectories[i].points[j];
            const auto& pb = b.trajectories[i].points[j];
            CHECK(pa.t == pb.t);
            CHECK(pa.x == pb.x);
            CHECK(pa.y == pb.y);
            CHECK(pa.speed == pb.speed);
            CHECK(pa.heading == pb.heading);
        }
    }
}

TEST_CASE("first vehicle at rest 10 s into a 40 s red waits out the remaining red") {
    // Closed-form schedule for the default constants: braking takes
    // v/d = 4.4667 s over v^2/(2d) = 29.93 m.
    SimConfig cfg = small_config(0.0, 600.0);
    const auto& si = cfg.intersections[0];
    const Phase& ns = si.plan.phases[0];
    auto window = detail::phase_window(si.plan, ns);

    const double brake_time = cfg.cruise_speed_mps / cfg.max_decel_mps2;
    const double brake_dist = cfg.cruise_speed_mps * cfg.cruise_speed_mps / (2.0 * cfg.max_decel_mps2);
    const double cruise_run = (cfg.approach_length_m - cfg.stopline_setback_m - brake_dist) / cfg.cruise_speed_mps;

    // Sit at rest exactly 10 s into the red window that starts at t = 90.
    const double target_rest = 90.0 + 10.0;
    const double spawn = target_rest - brake_time - cruise_run;
    REQUIRE(spawn > 0);

    detail::ApproachScheduler sched(cfg, window, "I1/N");
    const auto s = sched.schedule(spawn);
    REQUIRE(s.stops);
    CHECK(s.slot == 0);
    CHECK(s.rest_s == Catch::Approx(target_rest).margin(1e-9));
    CHECK(s.depart_s == Catch::Approx(130.0).margin(1e-9));  // green onset ends the 40 s red
    CHECK(s.depart_s - s.rest_s == Catch::Approx(30.0).margin(1e-9));

    const Trajectory traj = trace_vehicle(cfg, si, Direction::North, s, "t-0");
    int zero_samples = 0;
    for (const auto& p : traj.points) {
        if (p.speed == 0.0) ++zero_samples;
    }
    CHECK(std::abs(zero_samples - 30) <= 1);  // 1 Hz discretization slack
}

TEST_CASE("per-second speed changes respect the acceleration limits") {
    auto cfg = small_config(250.0, 3600.0);
    const auto result = simulate(cfg);
    REQUIRE(!result.trajectories.empty());
    const double bound = std::max(cfg.max_accel_mps2, cfg.max_decel_mps2) + 1e-9;
    for (const auto& traj : result.trajectories) {
        validate_trajectory(traj);
        for (std::size_t i = 1; i < traj.points.size(); ++i) {
            const double dv = traj.points[i].speed - traj.points[i - 1].speed;
            const double dt = traj.points[i].t - traj.points[i - 1].t;
            CHECK(std::abs(dv) <= bound * dt);
        }
    }
}

TEST_CASE("every trajectory passes close to the intersection center") {
    auto cfg = small_config(120.0, 3600.0);
    const auto result = simulate(cfg);
    REQUIRE(!result.trajectories.empty());
    int through = 0;
    for (const auto& traj : result.trajectories) {
        double min_d = 1e18;
        for (const auto& p : traj.points) min_d = std::min(min_d, std::hypot(p.x, p.y));
        // Trajectories that reach the exit side crossed the center.
        const auto& last = traj.points.back();
        if (std::hypot(last.x, last.y) > 100.0 && last.speed == cfg.cruise_speed_mps) {
            CHECK(min_d <= kCenterPassMaxM);
            ++through;
        }
    }
    CHECK(through > 0);
}

TEST_CASE("queue discharge is FIFO and spaced by the saturation headway") {
    auto cfg = small_config(300.0, 3600.0);
    const auto result = simulate(cfg);
    REQUIRE(result.queue_records.size() > 50);

    std::map<std::pair<std::string, double>, std::vector<QueueRecord>> by_onset;
    for (const auto& q : result.queue_records) {
        by_onset[{q.intersection_id + "/" + to_string(q.direction), q.green_onset_s}].push_back(q);
    }
    for (auto& [key, records] : by_onset) {
        std::sort(records.begin(), records.end(),
                  [](const QueueRecord& a, const QueueRecord& b) { return a.depart_s < b.depart_s; });
        for (std::size_t i = 1; i < records.size(); ++i) {
            CHECK(records[i].slot > records[i - 1].slot);
            CHECK(records[i].depart_s - records[i - 1].depart_s >= cfg.saturation_headway_s - 1e-9);
        }
    }
}

TEST_CASE("earliest accel starts cluster at green onset") {
    auto cfg = small_config(300.0, 7200.0);
    const auto result = simulate(cfg);
    std::map<double, double> earliest;  // green onset -> earliest depart (one stream)
    for (const auto& q : result.queue_records) {
        if (q.direction != Direction::North) continue;
        auto it = earliest.find(q.green_onset_s);
        if (it == earliest.end() || q.depart_s < it->second) earliest[q.green_onset_s] = q.depart_s;
    }
    REQUIRE(earliest.size() >= 50);
    std::vector<double> deviations;
    for (const auto& [onset, depart] : earliest) deviations.push_back(depart - onset);
    for (double d : deviations) CHECK(d >= -1e-9);
    std::vector<double> sorted = deviations;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    std::vector<double> abs_dev;
    for (double d : deviations) abs_dev.push_back(std::abs(d - median));
    std::sort(abs_dev.begin(), abs_dev.end());
    CHECK(abs_dev[abs_dev.size() / 2] <= 2.0);
}

TEST_CASE("overload reports spillback instead of silently truncating") {
    auto cfg = small_config(1200.0, 7200.0);
    cfg.approach_length_m = 80.0;
    CHECK_THROWS_AS(simulate(cfg), DataError);
}

TEST_CASE("sample_probes keeps whole trajectories deterministically") {
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 10000; ++i) {
        Trajectory t;
        t.vehicle_id = "veh-" + std::to_string(i);
        t.points.push_back({t.vehicle_id, 0.0, 0, 0, 1, 0});
        trajs.push_back(std::move(t));
    }

    SECTION("penetration 1.0 is the identity") {
        const auto kept = sample_probes(trajs, 1.0, 99);
        CHECK(kept.size() == trajs.size());
    }

    SECTION("kept count stays within 3 sigma of the binomial") {
        const auto kept = sample_probes(trajs, 0.5, 99);
        const double sigma = std::sqrt(10000 * 0.5 * 0.5);
        CHECK(std::abs(static_cast<double>(kept.size()) - 5000.0) <= 3.0 * sigma);
    }

    SECTION("same seed yields the same subset") {
        const auto a = sample_probes(trajs, 0.3, 7);
        const auto b = sample_probes(trajs, 0.3, 7);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].vehicle_id == b[i].vehicle_id);
    }

    SECTION("penetration outside (0, 1] is rejected") {
        CHECK_THROWS_AS(sample_probes(trajs, 0.0, 1), std::domain_error);
        CHECK_THROWS_AS(sample_probes(trajs, 1.5, 1), std::domain_error);
    }
}
