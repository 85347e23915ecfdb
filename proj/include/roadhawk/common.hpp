#pragma once

#include <stdexcept>
#include <string>

namespace roadhawk {

// Error taxonomy used across the library: configuration problems (bad
// shapes/parameters at setup time), shape mismatches at call time, and
// calls that violate required object state (e.g. backward before forward).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Object classes used throughout the pipeline.
inline constexpr int kClassCracks = 0;
inline constexpr int kClassPothole = 1;
inline constexpr int kClassYellowLane = 2;
inline constexpr int kNumRoadClasses = 3;

inline const char* class_name(int class_id) {
    switch (class_id) {
        case kClassCracks: return "cracks";
        case kClassPothole: return "pothole";
        case kClassYellowLane: return "yellowlane";
        default: return "unknown";
    }
}

inline double clamp01(double v) {
    if (v < 0.0) return 0.0;
    if (v > 1.0) return 1.0;
    return v;
}

namespace detail {

inline std::string trim_ws(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool split_kv(const std::string& line, std::string& key, std::string& value) {
    size_t eq = line.find('=');
    if (eq == std::string::npos) return false;
    key = trim_ws(line.substr(0, eq));
    value = trim_ws(line.substr(eq + 1));
    return !key.empty();
}

}  // namespace detail

inline double clamp_unit(double v) {
    if (v < -1.0) return -1.0;
    if (v > 1.0) return 1.0;
    return v;
}

}  // namespace roadhawk
