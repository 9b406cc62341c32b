#pragma once

#include <cstddef>
#include <vector>

#include "cfho/random.hpp"

namespace cfho {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Square deployment area with APs at fixed planar positions. The area is
/// treated as a torus so a user that leaves one edge re-enters the opposite
/// one, emulating an unbounded network.
struct NetworkLayout {
    double area_side = 1000.0;  // meters
    std::vector<Point2> ap_positions;
    double ap_height = 15.0;    // meters
    double user_height = 1.5;   // meters
    double wrap_margin = 200.0; // meters

    std::size_t size() const noexcept { return ap_positions.size(); }
    double height_difference() const noexcept { return ap_height - user_height; }

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;
};

struct TrajectoryState {
    Point2 position;
    Point2 heading{1.0, 0.0};  // unit vector
    double speed = 10.0;        // m/s
    double step_duration = 1.0; // s
    int cycle_index = 0;

    double step_length() const noexcept { return speed * step_duration; }
};

/// `count` APs drawn i.i.d. uniform over [0, area_side]^2.
NetworkLayout place_aps(std::size_t count, double area_side, Rng& rng);

/// Trajectory starting at the area center plus `offset`, heading drawn
/// uniformly on the circle.
TrajectoryState start_trip(const NetworkLayout& layout, double speed, double step_duration, Rng& rng,
                           Point2 offset = {});

/// One decision cycle of straight-line motion. A coordinate entering the
/// wrap margin band is translated by one area side; positions are then kept in
/// canonical torus coordinates [0, area_side).
TrajectoryState advance(const TrajectoryState& traj, const NetworkLayout& layout);

/// Signed minimum-image difference `to - from` on a circle of length `side`.
double wrapped_delta(double from, double to, double side) noexcept;

/// Minimum-image planar distance between a user position and AP `ap_index`.
double distance_2d(Point2 user, std::size_t ap_index, const NetworkLayout& layout);

/// Planar Euclidean distance (no wrap), used for the static AP-side shadowing field.
double euclidean(Point2 a, Point2 b) noexcept;

}  // namespace cfho
