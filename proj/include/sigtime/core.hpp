#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigtime/common.hpp"

namespace sigtime {

// Internal units are SI throughout: meters, m/s, seconds. Imperial thresholds
// are converted once, here, and never appear again.
inline constexpr double kIntersectionRadiusM = 152.4;  // 500 ft clip radius
inline constexpr double kCenterPassMaxM = 15.24;       // 50 ft center-passage bound

enum class Direction { North, East, South, West };
enum class Movement { Through, Left, Right };
enum class TodBin { AM, PM, OffPeak };

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::North: return "N";
        case Direction::East: return "E";
        case Direction::South: return "S";
        case Direction::West: return "W";
    }
    return "?";
}

inline const char* to_string(Movement m) {
    switch (m) {
        case Movement::Through: return "through";
        case Movement::Left: return "left";
        case Movement::Right: return "right";
    }
    return "?";
}

inline const char* to_string(TodBin b) {
    switch (b) {
        case TodBin::AM: return "AM";
        case TodBin::PM: return "PM";
        case TodBin::OffPeak: return "OffPeak";
    }
    return "?";
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "N") return Direction::North;
    if (s == "E") return Direction::East;
    if (s == "S") return Direction::South;
    if (s == "W") return Direction::West;
    throw DataError("unknown direction: '" + s + "'");
}

inline Movement movement_from_string(const std::string& s) {
    if (s == "through") return Movement::Through;
    if (s == "left") return Movement::Left;
    if (s == "right") return Movement::Right;
    throw DataError("unknown movement: '" + s + "'");
}

inline TodBin tod_bin_from_string(const std::string& s) {
    if (s == "AM") return TodBin::AM;
    if (s == "PM") return TodBin::PM;
    if (s == "OffPeak") return TodBin::OffPeak;
    throw DataError("unknown time-of-day bin: '" + s + "'");
}

// One 1 Hz probe record. heading: degrees in [0, 360), 0 = north, clockwise.
struct TracePoint {
    std::string vehicle_id;
    double t = 0;
    double x = 0;
    double y = 0;
    double speed = 0;
    double heading = 0;
};

struct Trajectory {
    std::string vehicle_id;
    std::vector<TracePoint> points;
};

struct IntersectionGeometry {
    std::string intersection_id;
    double center_x = 0;
    double center_y = 0;
    std::map<Direction, double> approach_headings;  // direction of travel -> inbound heading
};

// Per-phase timing. Yellow is folded into green, so red_s + green_s must
// equal the parent cycle length exactly.
struct Phase {
    std::string phase_id;
    Direction direction = Direction::North;
    Movement movement = Movement::Through;
    double red_s = 0;
    double green_s = 0;
    double red_start_offset_s = 0;  // seconds into the cycle where red begins
};

struct SignalPlan {
    std::string intersection_id;
    double cycle_s = 0;
    std::vector<Phase> phases;
    double plan_offset_s = 0;
};

struct StopEvent {
    std::string intersection_id;
    std::string vehicle_id;
    Direction direction = Direction::North;
    Movement movement = Movement::Through;
    double stop_start_s = 0;
    double stop_duration_s = 0;
    double accel_start_s = 0;
    int hour_of_day = 0;
    TodBin tod_bin = TodBin::OffPeak;
};

// Hour boundaries for the AM/PM/OffPeak bins; inclusive on both ends.
struct TodBoundaries {
    int am_first = 6;
    int am_last = 9;
    int pm_first = 15;
    int pm_last = 18;
};

inline double derive_green(double cycle_s, double red_s) {
    if (!(red_s > 0.0) || !(red_s < cycle_s)) {
        throw std::domain_error("derive_green: red time must lie strictly inside (0, cycle)");
    }
    return cycle_s - red_s;
}

// Nearest cardinal direction; ties at 45/135/225/315 go to the class of the
// numerically smaller compass angle.
inline Direction classify_direction(double heading_deg) {
    if (heading_deg < 0.0 || heading_deg >= 360.0) {
        throw std::domain_error("classify_direction: heading outside [0, 360)");
    }
    if (heading_deg <= 45.0 || heading_deg >= 315.0) return Direction::North;
    if (heading_deg <= 135.0) return Direction::East;
    if (heading_deg <= 225.0) return Direction::South;
    return Direction::West;
}

// Smallest signed angular difference, wrapped to (-180, 180].
inline double signed_heading_delta(double from_deg, double to_deg) {
    double d = std::fmod(to_deg - from_deg, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

inline Movement classify_movement(double heading_in, double heading_out) {
    const double d = signed_heading_delta(heading_in, heading_out);
    if (d <= -45.0) return Movement::Left;
    if (d >= 45.0) return Movement::Right;
    return Movement::Through;
}

inline TodBin tod_bin_for_hour(int hour, const TodBoundaries& b = {}) {
    if (hour < 0 || hour > 23) {
        throw std::domain_error("tod_bin_for_hour: hour outside 0-23");
    }
    if (hour >= b.am_first && hour <= b.am_last) return TodBin::AM;
    if (hour >= b.pm_first && hour <= b.pm_last) return TodBin::PM;
    return TodBin::OffPeak;
}

inline int hour_of_day(double t_seconds) {
    const int h = static_cast<int>(std::floor(t_seconds / 3600.0));
    return ((h % 24) + 24) % 24;
}

inline void validate_plan(const SignalPlan& plan) {
    if (!(plan.cycle_s > 0)) {
        throw ConfigError("signal plan '" + plan.intersection_id + "': cycle length must be positive");
    }
    for (const auto& ph : plan.phases) {
        if (!(ph.red_s > 0) || !(ph.green_s > 0)) {
            throw ConfigError("signal plan '" + plan.intersection_id + "': phase '" + ph.phase_id +
                              "' needs positive red and green times");
        }
        if (ph.red_s + ph.green_s != plan.cycle_s) {
            throw ConfigError("signal plan '" + plan.intersection_id + "': phase '" + ph.phase_id +
                              "' violates red + green == cycle");
        }
        if (ph.red_start_offset_s < 0 || ph.red_start_offset_s >= plan.cycle_s) {
            throw ConfigError("signal plan '" + plan.intersection_id + "': phase '" + ph.phase_id +
                              "' red start offset outside [0, cycle)");
        }
    }
}

inline void validate_trajectory(const Trajectory& traj) {
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        const auto& p = traj.points[i];
        if (p.vehicle_id != traj.vehicle_id) {
            throw DataError("trajectory '" + traj.vehicle_id + "': point carries foreign vehicle id");
        }
        if (p.speed < 0 || p.heading < 0 || p.heading >= 360.0) {
            throw DataError("trajectory '" + traj.vehicle_id + "': speed/heading out of range");
        }
        if (i > 0 && !(p.t > traj.points[i - 1].t)) {
            throw DataError("trajectory '" + traj.vehicle_id + "': timestamps not strictly increasing");
        }
    }
}

}  // namespace sigtime
