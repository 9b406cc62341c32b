#include "cfho/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cfho/error.hpp"

namespace cfho {

namespace {

double canonical(double v, double side) {
    double r = std::fmod(v, side);
    if (r < 0.0) r += side;
    if (r >= side) r = 0.0;  // fmod(-tiny) + side can round up to side
    return r;
}

double wrap_axis(double v, double side, double margin) {
    if (v > side - margin) {
        v -= side;
    } else if (v < margin - side) {
        v += side;
    }
    return canonical(v, side);
}

}  // namespace

void NetworkLayout::validate() const {
    if (!(area_side > 0.0)) throw ConfigError("network area side must be positive");
    if (ap_positions.empty()) throw ConfigError("network layout has no APs");
    for (const auto& p : ap_positions) {
        if (p.x < 0.0 || p.x > area_side || p.y < 0.0 || p.y > area_side) {
            throw ConfigError("AP position outside the deployment area");
        }
    }
    if (!(height_difference() > 0.0)) throw ConfigError("AP height must exceed user height");
    if (!(wrap_margin >= 0.0 && wrap_margin < area_side / 2.0)) {
        throw ConfigError("wrap margin must lie in [0, area_side/2)");
    }
}

NetworkLayout place_aps(std::size_t count, double area_side, Rng& rng) {
    if (count == 0) throw ConfigError("AP count must be at least 1");
    if (!(area_side > 0.0)) throw ConfigError("network area side must be positive");
    NetworkLayout layout;
    layout.area_side = area_side;
    if (layout.wrap_margin >= area_side / 2.0) layout.wrap_margin = area_side / 4.0;
    layout.ap_positions.reserve(count);
    std::uniform_real_distribution<double> u(0.0, area_side);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = u(rng);
        const double y = u(rng);
        layout.ap_positions.push_back({x, y});
    }
    return layout;
}

TrajectoryState start_trip(const NetworkLayout& layout, double speed, double step_duration, Rng& rng,
                           Point2 offset) {
    if (speed < 0.0) throw ConfigError("speed must be non-negative");
    if (!(step_duration > 0.0)) throw ConfigError("step duration must be positive");
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const double theta = angle(rng);
    TrajectoryState traj;
    const double half = layout.area_side / 2.0;
    traj.position = {canonical(half + offset.x, layout.area_side), canonical(half + offset.y, layout.area_side)};
    traj.heading = {std::cos(theta), std::sin(theta)};
    traj.speed = speed;
    traj.step_duration = step_duration;
    traj.cycle_index = 0;
    return traj;
}

TrajectoryState advance(const TrajectoryState& traj, const NetworkLayout& layout) {
    TrajectoryState next = traj;
    const double step = traj.step_length();
    const double x = traj.position.x + traj.heading.x * step;
    const double y = traj.position.y + traj.heading.y * step;
    next.position = {wrap_axis(x, layout.area_side, layout.wrap_margin),
                     wrap_axis(y, layout.area_side, layout.wrap_margin)};
    next.cycle_index = traj.cycle_index + 1;
    return next;
}

double wrapped_delta(double from, double to, double side) noexcept {
    double d = std::fmod(to - from, side);
    if (d > side / 2.0) d -= side;
    if (d < -side / 2.0) d += side;
    return d;
}

double distance_2d(Point2 user, std::size_t ap_index, const NetworkLayout& layout) {
    if (ap_index >= layout.size()) {
        throw ContractViolation("AP index " + std::to_string(ap_index) + " out of range");
    }
    const Point2 ap = layout.ap_positions[ap_index];
    const double dx = wrapped_delta(user.x, ap.x, layout.area_side);
    const double dy = wrapped_delta(user.y, ap.y, layout.area_side);
    return std::hypot(dx, dy);
}

double euclidean(Point2 a, Point2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace cfho
