#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "roadhawk/data.hpp"
#include "roadhawk/drone.hpp"
#include "roadhawk/rng.hpp"

namespace roadhawk {

// Forward-down pinhole camera on the drone.
struct CameraModel {
    double hfov = 1.1;   // radians
    int width = 160;
    int height = 120;
    double pitch = 0.9;  // radians down from horizontal

    void validate() const {
        if (!(hfov > 0 && hfov < M_PI)) throw ConfigError("camera hfov must be in (0, pi)");
        if (width < 16 || height < 16) throw ConfigError("camera image dims must be >= 16");
        if (!(pitch > 0 && pitch < M_PI / 2)) throw ConfigError("camera pitch must be in (0, pi/2)");
    }
};

struct SceneDefect {
    enum class Kind { crack, pothole };
    Kind kind = Kind::pothole;
    double x = 0, y = 0;  // world position on the road
    double size = 0.5;    // diameter (pothole) or total length (crack), meters
};

inline const char* defect_kind_name(SceneDefect::Kind k) {
    return k == SceneDefect::Kind::crack ? "crack" : "pothole";
}

// World description of a synthetic road: a gray road rectangle on ground, a
// yellow lane strip along a polyline, and crack/pothole defects.
struct SceneSpec {
    std::vector<std::array<double, 2>> lane;  // polyline, >= 2 points
    double lane_width = 0.3;
    double road_x0 = -2, road_y0 = -4, road_x1 = 55, road_y1 = 4;
    std::vector<SceneDefect> defects;
    uint64_t seed = 0;
    double speckle = 0.0;  // optional road albedo noise amplitude

    void validate() const {
        if (lane.size() < 2) throw ConfigError("scene: lane polyline needs >= 2 points");
        if (!(lane_width > 0)) throw ConfigError("scene: lane_width must be positive");
        if (!(road_x0 < road_x1 && road_y0 < road_y1))
            throw ConfigError("scene: empty road extent");
        for (const SceneDefect& d : defects) {
            if (!(d.size > 0)) throw ConfigError("scene: defect size must be positive");
            if (d.x < road_x0 || d.x > road_x1 || d.y < road_y0 || d.y > road_y1)
                throw ConfigError("scene: defect outside the road extent");
        }
    }
};

namespace scene_detail {

struct Vec3 {
    double x, y, z;
};

inline double dist_point_segment(double px, double py, double ax, double ay, double bx,
                                 double by) {
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 <= 0 ? 0 : ((px - ax) * dx + (py - ay) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = ax + t * dx, cy = ay + t * dy;
    return std::hypot(px - cx, py - cy);
}

inline double dist_polyline(double px, double py, const std::vector<std::array<double, 2>>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        best = std::min(best, dist_point_segment(px, py, pts[i][0], pts[i][1], pts[i + 1][0],
                                                 pts[i + 1][1]));
    return best;
}

// Jagged crack polyline, deterministic per (scene seed, defect index).
inline std::vector<std::array<double, 2>> crack_polyline(const SceneSpec& spec, size_t index) {
    const SceneDefect& d = spec.defects[index];
    Rng rng = Rng::stream(spec.seed, 0x4352 + index);  // per-defect stream
    const int segments = 6;
    const double step = d.size / segments;
    double angle = rng.uniform(0, 2 * M_PI);
    std::vector<std::array<double, 2>> pts;
    // Walk outward from the center so the nominal position stays inside.
    double px = d.x - 0.5 * d.size * std::cos(angle);
    double py = d.y - 0.5 * d.size * std::sin(angle);
    pts.push_back({px, py});
    for (int i = 0; i < segments; ++i) {
        angle += rng.uniform(-0.6, 0.6);
        px += step * std::cos(angle);
        py += step * std::sin(angle);
        pts.push_back({px, py});
    }
    return pts;
}

inline constexpr double kCrackWidth = 0.05;  // meters

struct Camera {
    Vec3 pos;
    Vec3 fwd, right, up;
    double tan_half_x, tan_half_y;
    int width, height;

    Camera(const CameraModel& cam, const DroneState& drone) {
        cam.validate();
        pos = {drone.x, drone.y, drone.z};
        // Compass-style heading: positive rotates clockwise (toward -y).
        const double ch = std::cos(drone.heading), sh = std::sin(drone.heading);
        const double cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
        fwd = {cp * ch, -cp * sh, -sp};
        right = {-sh, -ch, 0};
        up = {sp * ch, -sp * sh, cp};  // right x fwd
        tan_half_x = std::tan(cam.hfov / 2);
        tan_half_y = tan_half_x * cam.height / cam.width;
        width = cam.width;
        height = cam.height;
    }

    // Ray through pixel center -> ground plane z=0; returns false for sky.
    bool ground_point(double px, double py, double& wx, double& wy) const {
        const double nx = (2.0 * px / width - 1.0) * tan_half_x;
        const double ny = (1.0 - 2.0 * py / height) * tan_half_y;
        const Vec3 dir{fwd.x + nx * right.x + ny * up.x, fwd.y + nx * right.y + ny * up.y,
                       fwd.z + nx * right.z + ny * up.z};
        if (dir.z >= -1e-9) return false;
        const double t = -pos.z / dir.z;
        wx = pos.x + t * dir.x;
        wy = pos.y + t * dir.y;
        return true;
    }

    // World point -> continuous pixel coordinates; false if behind the camera.
    bool project(double wx, double wy, double wz, double& px, double& py) const {
        const Vec3 d{wx - pos.x, wy - pos.y, wz - pos.z};
        const double df = d.x * fwd.x + d.y * fwd.y + d.z * fwd.z;
        if (df < 1e-9) return false;
        const double dr = d.x * right.x + d.y * right.y + d.z * right.z;
        const double du = d.x * up.x + d.y * up.y + d.z * up.z;
        px = (dr / df / tan_half_x + 1.0) / 2.0 * width;
        py = (1.0 - du / df / tan_half_y) / 2.0 * height;
        return true;
    }
};

struct Rgb {
    double r, g, b;
};

inline constexpr Rgb kSky{0.55, 0.70, 0.90};
inline constexpr Rgb kGround{0.20, 0.28, 0.14};
inline constexpr Rgb kRoad{0.44, 0.44, 0.47};
inline constexpr Rgb kLane{0.95, 0.80, 0.10};
inline constexpr Rgb kPothole{0.07, 0.07, 0.08};
inline constexpr Rgb kCrack{0.12, 0.11, 0.10};

}  // namespace scene_detail

// Renders the scene from the drone's front camera and emits ground-truth
// annotations for every visible defect and the visible lane segment.
// Deterministic in (spec, camera, drone).
inline Sample generate_scene(const SceneSpec& spec, const CameraModel& cam,
                             const DroneState& drone) {
    using namespace scene_detail;
    spec.validate();
    Camera view(cam, drone);

    // Crack polylines are derived once per defect from the scene seed.
    std::vector<std::vector<std::array<double, 2>>> cracks(spec.defects.size());
    for (size_t i = 0; i < spec.defects.size(); ++i)
        if (spec.defects[i].kind == SceneDefect::Kind::crack)
            cracks[i] = crack_polyline(spec, i);

    auto color_at = [&](double wx, double wy) -> Rgb {
        for (size_t i = 0; i < spec.defects.size(); ++i) {
            const SceneDefect& d = spec.defects[i];
            if (d.kind == SceneDefect::Kind::pothole) {
                const double r = d.size / 2;
                if ((wx - d.x) * (wx - d.x) + (wy - d.y) * (wy - d.y) <= r * r) return kPothole;
            } else if (dist_polyline(wx, wy, cracks[i]) <= kCrackWidth / 2) {
                return kCrack;
            }
        }
        if (dist_polyline(wx, wy, spec.lane) <= spec.lane_width / 2) return kLane;
        if (wx >= spec.road_x0 && wx <= spec.road_x1 && wy >= spec.road_y0 && wy <= spec.road_y1) {
            if (spec.speckle > 0) {
                const uint64_t cellx = static_cast<uint64_t>((wx + 1e4) * 20);
                const uint64_t celly = static_cast<uint64_t>((wy + 1e4) * 20);
                Rng n = Rng::stream(spec.seed ^ 0x5350u, cellx * 0x1f123bb5 + celly);
                const double j = spec.speckle * n.uniform(-1, 1);
                return {clamp01(kRoad.r + j), clamp01(kRoad.g + j), clamp01(kRoad.b + j)};
            }
            return kRoad;
        }
        return kGround;
    };

    Sample sample;
    sample.image = Tensor({3, cam.height, cam.width});
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            double wx, wy;
            const Rgb c =
                view.ground_point(px + 0.5, py + 0.5, wx, wy) ? color_at(wx, wy) : kSky;
            sample.image.at3(0, py, px) = c.r;
            sample.image.at3(1, py, px) = c.g;
            sample.image.at3(2, py, px) = c.b;
        }
    }

    // Annotation for a set of world sample points: bbox over the in-image
    // projections, normalized. Needs a minimum of 3 visible points and a
    // box of at least one pixel.
    auto annotate = [&](int class_id, const std::vector<std::array<double, 2>>& pts) {
        double minx = 1e30, maxx = -1e30, miny = 1e30, maxy = -1e30;
        int visible = 0;
        for (const auto& p : pts) {
            double px, py;
            if (!view.project(p[0], p[1], 0.0, px, py)) continue;
            if (px < 0 || px > cam.width || py < 0 || py > cam.height) continue;
            minx = std::min(minx, px);
            maxx = std::max(maxx, px);
            miny = std::min(miny, py);
            maxy = std::max(maxy, py);
            ++visible;
        }
        if (visible < 3 || maxx - minx < 1.0 || maxy - miny < 1.0) return;
        Annotation a;
        a.class_id = class_id;
        const double cx = (minx + maxx) / 2 / cam.width;
        const double cy = (miny + maxy) / 2 / cam.height;
        const double w = (maxx - minx) / cam.width;
        const double h = (maxy - miny) / cam.height;
        a.bbox.cx = clamp01(cx);
        a.bbox.cy = clamp01(cy);
        a.bbox.w = std::min(w, 1.0);
        a.bbox.h = std::min(h, 1.0);
        sample.annotations.push_back(a);
    };

    for (size_t i = 0; i < spec.defects.size(); ++i) {
        const SceneDefect& d = spec.defects[i];
        std::vector<std::array<double, 2>> pts;
        if (d.kind == SceneDefect::Kind::pothole) {
            pts.push_back({d.x, d.y});
            const double r = d.size / 2;
            for (int k = 0; k < 32; ++k) {
                const double a = 2 * M_PI * k / 32;
                pts.push_back({d.x + r * std::cos(a), d.y + r * std::sin(a)});
            }
            annotate(kClassPothole, pts);
        } else {
            const double hw = kCrackWidth / 2;
            for (size_t s = 0; s + 1 < cracks[i].size(); ++s) {
                const double ax = cracks[i][s][0], ay = cracks[i][s][1];
                const double bx = cracks[i][s + 1][0], by = cracks[i][s + 1][1];
                const double len = std::hypot(bx - ax, by - ay);
                const int steps = std::max(2, static_cast<int>(len / 0.02));
                const double nx = -(by - ay) / len, ny = (bx - ax) / len;
                for (int k = 0; k <= steps; ++k) {
                    const double t = static_cast<double>(k) / steps;
                    const double px = ax + t * (bx - ax), py = ay + t * (by - ay);
                    pts.push_back({px + nx * hw, py + ny * hw});
                    pts.push_back({px - nx * hw, py - ny * hw});
                }
            }
            annotate(kClassCracks, pts);
        }
    }

    {  // visible lane segment
        std::vector<std::array<double, 2>> pts;
        const double hw = spec.lane_width / 2;
        for (size_t s = 0; s + 1 < spec.lane.size(); ++s) {
            const double ax = spec.lane[s][0], ay = spec.lane[s][1];
            const double bx = spec.lane[s + 1][0], by = spec.lane[s + 1][1];
            const double len = std::hypot(bx - ax, by - ay);
            if (len <= 0) continue;
            const int steps = std::max(2, static_cast<int>(len / 0.05));
            const double nx = -(by - ay) / len, ny = (bx - ax) / len;
            for (int k = 0; k <= steps; ++k) {
                const double t = static_cast<double>(k) / steps;
                const double px = ax + t * (bx - ax), py = ay + t * (by - ay);
                pts.push_back({px, py});
                pts.push_back({px + nx * hw, py + ny * hw});
                pts.push_back({px - nx * hw, py - ny * hw});
            }
        }
        annotate(kClassYellowLane, pts);
    }

    return sample;
}

// ---------------------------------------------------------------------------
// Scene spec text format: key=value lines plus repeated [defect] blocks.

inline std::string serialize_scene_spec(const SceneSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    out << "seed=" << spec.seed << "\n";
    out << "lane_width=" << spec.lane_width << "\n";
    out << "speckle=" << spec.speckle << "\n";
    out << "road=" << spec.road_x0 << " " << spec.road_y0 << " " << spec.road_x1 << " "
        << spec.road_y1 << "\n";
    out << "lane=";
    for (size_t i = 0; i < spec.lane.size(); ++i)
        out << (i ? " " : "") << spec.lane[i][0] << " " << spec.lane[i][1];
    out << "\n";
    for (const SceneDefect& d : spec.defects) {
        out << "\n[defect]\n";
        out << "kind=" << defect_kind_name(d.kind) << "\n";
        out << "x=" << d.x << "\ny=" << d.y << "\nsize=" << d.size << "\n";
    }
    return out.str();
}

inline SceneSpec parse_scene_spec(const std::string& text) {
    SceneSpec spec;
    spec.lane.clear();
    SceneDefect* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        const std::string line = detail::trim_ws(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line == "[defect]") {
            spec.defects.emplace_back();
            current = &spec.defects.back();
            continue;
        }
        std::string key, value;
        if (!detail::split_kv(line, key, value)) throw ConfigError("scene: bad line: " + raw);
        std::istringstream vs(value);
        if (current) {
            if (key == "kind") {
                if (value == "crack") current->kind = SceneDefect::Kind::crack;
                else if (value == "pothole") current->kind = SceneDefect::Kind::pothole;
                else throw ConfigError("scene: unknown defect kind: " + value);
            } else if (key == "x") current->x = std::stod(value);
            else if (key == "y") current->y = std::stod(value);
            else if (key == "size") current->size = std::stod(value);
            else throw ConfigError("scene: unknown defect key: " + key);
        } else {
            if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "lane_width") spec.lane_width = std::stod(value);
            else if (key == "speckle") spec.speckle = std::stod(value);
            else if (key == "road") {
                if (!(vs >> spec.road_x0 >> spec.road_y0 >> spec.road_x1 >> spec.road_y1))
                    throw ConfigError("scene: road needs 4 numbers");
            } else if (key == "lane") {
                double x, y;
                while (vs >> x >> y) spec.lane.push_back({x, y});
            } else {
                throw ConfigError("scene: unknown key: " + key);
            }
        }
    }
    spec.validate();
    return spec;
}

inline SceneSpec load_scene_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scene spec: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_scene_spec(buf.str());
}

inline void save_scene_spec(const std::string& path, const SceneSpec& spec) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write scene spec: " + path);
    f << serialize_scene_spec(spec);
}

// ---------------------------------------------------------------------------
// Canonical scenarios.

// Straight 50 m lane with no defects; the closed-loop tracking scenario
// starts the drone 1 m lateral of the line.
inline SceneSpec canonical_lane_scene() {
    SceneSpec spec;
    spec.lane = {{-5, 0}, {50, 0}};
    spec.lane_width = 0.3;
    spec.road_x0 = -6;
    spec.road_y0 = -4;
    spec.road_x1 = 55;
    spec.road_y1 = 4;
    spec.seed = 1;
    return spec;
}

// Straight lane with three potholes and two cracks, spaced beyond the 1 m
// report dedup radius.
inline SceneSpec canonical_inspection_scene() {
    SceneSpec spec;
    spec.lane = {{-5, 0}, {20, 0}};
    spec.lane_width = 0.3;
    spec.road_x0 = -6;
    spec.road_y0 = -4;
    spec.road_x1 = 25;
    spec.road_y1 = 4;
    spec.seed = 2;
    spec.defects.push_back({SceneDefect::Kind::pothole, 3.0, 0.7, 0.5});
    spec.defects.push_back({SceneDefect::Kind::crack, 5.5, -0.8, 0.9});
    spec.defects.push_back({SceneDefect::Kind::pothole, 8.0, -0.5, 0.6});
    spec.defects.push_back({SceneDefect::Kind::crack, 10.5, 0.6, 0.8});
    spec.defects.push_back({SceneDefect::Kind::pothole, 13.0, 0.4, 0.55});
    return spec;
}

}  // namespace roadhawk
