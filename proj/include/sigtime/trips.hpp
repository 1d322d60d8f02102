#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sigtime/core.hpp"

namespace sigtime {

// Real probe speeds jitter near zero, so "stopped" means below this epsilon.
inline constexpr double kStopSpeedEps = 0.05;  // m/s

struct TrajectorySegment {
    std::string vehicle_id;
    std::string intersection_id;
    std::vector<TracePoint> points;
    double min_center_distance_m = 0;
    double duration_s = 0;
    double max_gap_s = 0;
};

enum class RejectionReason { NoStopPattern, SparseGap, NoCenterPassage, TooLong, None };

inline const char* to_string(RejectionReason r) {
    switch (r) {
        case RejectionReason::NoStopPattern: return "no_stop_pattern";
        case RejectionReason::SparseGap: return "sparse_gap";
        case RejectionReason::NoCenterPassage: return "no_center_passage";
        case RejectionReason::TooLong: return "too_long";
        case RejectionReason::None: return "none";
    }
    return "?";
}

struct FilterOutcome {
    bool accepted = false;
    RejectionReason rejection_reason = RejectionReason::None;
};

struct FilterThresholds {
    double max_gap_s = 10.0;            // reject gaps of 10 s or more
    double max_duration_s = 120.0;      // reject trips over 2 minutes
    double center_pass_m = kCenterPassMaxM;
    double stop_speed_eps = kStopSpeedEps;
};

// Maximal contiguous runs of points within radius_m of the intersection
// center. Radial clipping; multiple visits yield multiple segments.
inline std::vector<TrajectorySegment> clip_to_intersection(const Trajectory& traj,
                                                           const IntersectionGeometry& geom,
                                                           double radius_m = kIntersectionRadiusM) {
    std::vector<TrajectorySegment> segments;
    TrajectorySegment cur;
    auto flush = [&]() {
        if (cur.points.empty()) return;
        cur.vehicle_id = traj.vehicle_id;
        cur.intersection_id = geom.intersection_id;
        cur.duration_s = cur.points.back().t - cur.points.front().t;
        double min_d = std::numeric_limits<double>::infinity();
        double max_gap = 0;
        for (std::size_t i = 0; i < cur.points.size(); ++i) {
            const auto& p = cur.points[i];
            min_d = std::min(min_d, std::hypot(p.x - geom.center_x, p.y - geom.center_y));
            if (i > 0) max_gap = std::max(max_gap, p.t - cur.points[i - 1].t);
        }
        cur.min_center_distance_m = min_d;
        cur.max_gap_s = max_gap;
        segments.push_back(std::move(cur));
        cur = {};
    };

    for (const auto& p : traj.points) {
        const double d = std::hypot(p.x - geom.center_x, p.y - geom.center_y);
        if (d <= radius_m) {
            cur.points.push_back(p);
        } else {
            flush();
        }
    }
    flush();
    return segments;
}

namespace detail {

// Criterion 1: a deceleration / zero-speed / acceleration pattern, i.e. a
// zero-speed run with positive speed both before and after it.
inline bool has_stop_pattern(const std::vector<TracePoint>& pts, double eps) {
    std::size_t i = 0;
    while (i < pts.size()) {
        if (pts[i].speed < eps) {
            std::size_t j = i;
            while (j + 1 < pts.size() && pts[j + 1].speed < eps) ++j;
            bool before = false;
            for (std::size_t k = 0; k < i; ++k) {
                if (pts[k].speed >= eps) before = true;
            }
            bool after = false;
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                if (pts[k].speed >= eps) after = true;
            }
            if (before && after) return true;
            i = j + 1;
        } else {
            ++i;
        }
    }
    return false;
}

}  // namespace detail

// The four trip filters, checked in order: sparse gap, duration, center
// passage, stop pattern. First failing criterion is reported.
inline FilterOutcome apply_filters(const TrajectorySegment& seg, const FilterThresholds& th = {}) {
    if (seg.max_gap_s >= th.max_gap_s) return {false, RejectionReason::SparseGap};
    if (seg.duration_s > th.max_duration_s) return {false, RejectionReason::TooLong};
    if (seg.min_center_distance_m > th.center_pass_m) return {false, RejectionReason::NoCenterPassage};
    if (!detail::has_stop_pattern(seg.points, th.stop_speed_eps)) return {false, RejectionReason::NoStopPattern};
    return {true, RejectionReason::None};
}

// Extracts one StopEvent per maximal zero-speed run that precedes the
// center passage. The acceleration start is the timestamp of the first
// sample whose speed exceeds its predecessor's.
inline std::vector<StopEvent> extract_stop_events(const TrajectorySegment& seg, const IntersectionGeometry& geom,
                                                  const TodBoundaries& tod = {},
                                                  double stop_speed_eps = kStopSpeedEps) {
    std::vector<StopEvent> events;
    const auto& pts = seg.points;
    if (pts.size() < 2) return events;

    std::size_t center_idx = 0;
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = std::hypot(pts[i].x - geom.center_x, pts[i].y - geom.center_y);
        if (d < min_d) {
            min_d = d;
            center_idx = i;
        }
    }

    const double entry_heading = pts.front().heading;
    const double exit_heading = pts.back().heading;
    const Movement movement = classify_movement(entry_heading, exit_heading);

    std::size_t i = 0;
    while (i < pts.size()) {
        if (pts[i].speed >= stop_speed_eps) {
            ++i;
            continue;
        }
        std::size_t run_start = i;
        while (i + 1 < pts.size() && pts[i + 1].speed < stop_speed_eps) ++i;
        const std::size_t run_end = i;
        ++i;

        if (run_start >= center_idx) continue;  // post-center stops are unrelated to this signal

        // First observable positive change in speed after the stop began.
        std::size_t accel_idx = 0;
        for (std::size_t k = run_start + 1; k < pts.size(); ++k) {
            if (pts[k].speed > pts[k - 1].speed) {
                accel_idx = k;
                break;
            }
        }
        if (accel_idx == 0) continue;  // never accelerates again (truncated trace)

        StopEvent ev;
        ev.intersection_id = seg.intersection_id;
        ev.vehicle_id = seg.vehicle_id;
        ev.movement = movement;
        ev.direction = classify_direction(run_start > 0 ? pts[run_start - 1].heading : entry_heading);
        ev.stop_start_s = pts[run_start].t;
        ev.accel_start_s = pts[accel_idx].t;
        ev.stop_duration_s = ev.accel_start_s - ev.stop_start_s;
        ev.hour_of_day = hour_of_day(ev.stop_start_s);
        ev.tod_bin = tod_bin_for_hour(ev.hour_of_day, tod);
        events.push_back(std::move(ev));
        (void)run_end;
    }
    return events;
}

// Full per-trajectory pass: clip, filter, extract. Output is deterministic:
// callers feed trajectories sorted by vehicle_id and events stay in time order
// within each trajectory.
inline std::vector<StopEvent> process_trajectory(const Trajectory& traj,
                                                 const std::vector<IntersectionGeometry>& geoms,
                                                 const FilterThresholds& th = {}, const TodBoundaries& tod = {}) {
    std::vector<StopEvent> events;
    for (const auto& geom : geoms) {
        for (const auto& seg : clip_to_intersection(traj, geom)) {
            if (!apply_filters(seg, th).accepted) continue;
            auto evs = extract_stop_events(seg, geom, tod, th.stop_speed_eps);
            events.insert(events.end(), evs.begin(), evs.end());
        }
    }
    return events;
}

}  // namespace sigtime
