#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "roadhawk/common.hpp"
#include "roadhawk/detect.hpp"

namespace roadhawk {

// Image-space tracking error, in pixels, with the image center as origin.
struct TrackError {
    double e_x = 0;  // lateral
    double e_y = 0;  // vertical in the image
};

// Normalized setpoints sent to the drone driver, all clamped to [-1,1]:
// roll = lateral, pitch = forward/backward, yaw = heading rate,
// vertical = climb rate.
struct ControlCommand {
    double roll = 0;
    double pitch = 0;
    double yaw = 0;
    double vertical = 0;
};

enum class LostTargetPolicy { hover, land_after_n };

struct ServoConfig {
    double k_roll = 0.5;
    double k_yaw = 0.3;
    double k_vertical = 0.4;
    double forward_speed = 0.3;
    double width_threshold = 0.5;  // fraction of image width
    LostTargetPolicy lost_target_policy = LostTargetPolicy::land_after_n;
    int lost_target_ticks = 30;

    void validate() const {
        if (k_roll < 0 || k_yaw < 0 || k_vertical < 0)
            throw ConfigError("servo gains must be >= 0");
        if (!(width_threshold > 0 && width_threshold < 1))
            throw ConfigError("width_threshold must be in (0,1)");
        if (lost_target_ticks < 1) throw ConfigError("lost_target_ticks must be >= 1");
    }
};

// Center of a pixel-space box given its corner coordinates.
inline std::pair<double, double> object_center(double xmin, double xmax, double ymin,
                                               double ymax) {
    if (xmin > xmax || ymin > ymax) throw ConfigError("object_center: inverted box");
    return {(xmin + xmax) / 2.0, (ymin + ymax) / 2.0};
}

// Shifts pixel coordinates so the image center is the origin; the error is
// then just the object center in that frame.
inline TrackError center_error(double x_o, double y_o, double img_w, double img_h) {
    return {x_o - img_w / 2.0, y_o - img_h / 2.0};
}

// Proportional law: roll and yaw steer on the lateral error, vertical on the
// vertical error. Pitch holds forward speed unless the tracked box grows
// wider than the threshold fraction of the image, which flips it to an equal
// backward command.
inline ControlCommand control_law(const TrackError& err, double bbox_width_px, double img_w,
                                  double img_h, const ServoConfig& cfg) {
    cfg.validate();
    const double nx = err.e_x / (img_w / 2.0);
    const double ny = err.e_y / (img_h / 2.0);
    ControlCommand cmd;
    cmd.roll = clamp_unit(cfg.k_roll * nx);
    cmd.yaw = clamp_unit(cfg.k_yaw * nx);
    cmd.vertical = clamp_unit(-cfg.k_vertical * ny);
    const bool too_close = bbox_width_px / img_w > cfg.width_threshold;
    cmd.pitch = clamp_unit(too_close ? -cfg.forward_speed : cfg.forward_speed);
    return cmd;
}

// Highest-confidence yellow-lane detection; the class filter precedes any
// confidence comparison.
inline std::optional<Detection> select_target(const std::vector<Detection>& dets) {
    std::optional<Detection> best;
    for (const Detection& d : dets) {
        if (d.class_id != kClassYellowLane) continue;
        if (!best || d.confidence > best->confidence) best = d;
    }
    return best;
}

}  // namespace roadhawk
