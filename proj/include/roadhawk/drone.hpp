#pragma once

#include <cmath>

#include "roadhawk/common.hpp"
#include "roadhawk/servo.hpp"

namespace roadhawk {

// Simulated plant state. Heading is compass-style: 0 points along world +x
// and positive heading turns clockwise (toward -y), so a positive yaw
// command rotates the drone toward targets right of the image center.
struct DroneState {
    double x = 0, y = 0, z = 0;  // meters
    double heading = 0;          // radians
    double lateral_v = 0;        // m/s, body frame
    double forward_v = 0;
    double vertical_v = 0;
    bool flying = false;
};

struct PlantConfig {
    double v_max = 2.0;         // m/s, roll/pitch channels
    double yaw_rate_max = 1.0;  // rad/s
    double v_climb_max = 1.0;   // m/s

    void validate() const {
        if (v_max <= 0 || yaw_rate_max <= 0 || v_climb_max <= 0)
            throw ConfigError("plant rates must be positive");
    }
};

// First-order velocity model. Commands on a landed drone are a no-op (the
// caller decides whether to warn); touching the ground lands the drone.
inline DroneState drone_step(const DroneState& state, const ControlCommand& cmd, double dt,
                             const PlantConfig& cfg) {
    if (dt <= 0) throw ConfigError("drone_step: dt must be positive");
    cfg.validate();
    if (!state.flying) return state;

    DroneState s = state;
    s.lateral_v = cfg.v_max * clamp_unit(cmd.roll);
    s.forward_v = cfg.v_max * clamp_unit(cmd.pitch);
    s.vertical_v = cfg.v_climb_max * clamp_unit(cmd.vertical);
    s.heading = state.heading + cfg.yaw_rate_max * clamp_unit(cmd.yaw) * dt;

    const double fx = std::cos(s.heading), fy = -std::sin(s.heading);
    const double rx = -std::sin(s.heading), ry = -std::cos(s.heading);
    s.x += (fx * s.forward_v + rx * s.lateral_v) * dt;
    s.y += (fy * s.forward_v + ry * s.lateral_v) * dt;
    s.z += s.vertical_v * dt;
    if (s.z <= 0) {
        s.z = 0;
        s.flying = false;
    }
    return s;
}

}  // namespace roadhawk
