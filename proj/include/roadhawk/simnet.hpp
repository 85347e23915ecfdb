#pragma once

#include <cstdio>
#include <deque>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roadhawk/bus.hpp"
#include "roadhawk/common.hpp"
#include "roadhawk/detect.hpp"
#include "roadhawk/metrics.hpp"
#include "roadhawk/model_zoo.hpp"
#include "roadhawk/scene.hpp"
#include "roadhawk/servo.hpp"
#include "roadhawk/wire.hpp"

namespace roadhawk {

// ---------------------------------------------------------------------------
// Defect reports. Only cracks and potholes are ever reported; the lane is a
// navigation reference, not a defect.

struct DefectReport {
    uint64_t frame_seq = 0;
    double sim_time = 0;
    int class_id = 0;
    BBox bbox;
    double confidence = 0;
    std::string image_ref;
};

// Record line: "sim_time seq class cx cy w h confidence image_ref".
inline std::string report_record(const DefectReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.3f %llu %s %.6f %.6f %.6f %.6f %.6f %s", r.sim_time,
                  static_cast<unsigned long long>(r.frame_seq), class_name(r.class_id),
                  r.bbox.cx, r.bbox.cy, r.bbox.w, r.bbox.h, r.confidence, r.image_ref.c_str());
    return buf;
}

inline std::optional<DefectReport> parse_report_record(const std::string& line) {
    std::istringstream in(line);
    DefectReport r;
    std::string cls;
    unsigned long long seq = 0;
    if (!(in >> r.sim_time >> seq >> cls >> r.bbox.cx >> r.bbox.cy >> r.bbox.w >> r.bbox.h >>
          r.confidence >> r.image_ref))
        return std::nullopt;
    r.frame_seq = seq;
    for (int c = 0; c < kNumRoadClasses; ++c)
        if (cls == class_name(c)) {
            r.class_id = c;
            return r;
        }
    return std::nullopt;
}

// Sink abstraction standing in for the report server link.
class ReportSink {
public:
    virtual ~ReportSink() = default;
    virtual bool write_record(const std::string& record) = 0;
};

class FileReportSink final : public ReportSink {
public:
    explicit FileReportSink(const std::string& path) : f_(path, std::ios::trunc) {
        if (!f_) throw IoError("cannot open report sink: " + path);
    }

    bool write_record(const std::string& record) override {
        if (!f_) return false;
        f_ << record << "\n";
        f_.flush();
        return static_cast<bool>(f_);
    }

private:
    std::ofstream f_;
};

class MemoryReportSink final : public ReportSink {
public:
    bool write_record(const std::string& record) override {
        if (!available) return false;
        records.push_back(record);
        return true;
    }

    std::vector<std::string> records;
    bool available = true;
};

// Suppresses repeat reports of the same world defect (same class within
// dedup_radius meters, estimated by flat-ground back-projection) and buffers
// up to buffer_cap records when the sink is unavailable, dropping the oldest
// beyond that.
class DefectReporter {
public:
    DefectReporter(ReportSink& sink, double dedup_radius = 1.0, size_t buffer_cap = 64)
        : sink_(sink), radius_(dedup_radius), buffer_cap_(buffer_cap) {}

    // world_x/world_y: estimated defect position; returns true if the report
    // was accepted (written or buffered), false if deduplicated.
    bool report(const DefectReport& r, double world_x, double world_y) {
        if (r.class_id != kClassCracks && r.class_id != kClassPothole)
            throw ConfigError("only cracks and potholes are reported");
        for (const auto& seen : seen_)
            if (seen.class_id == r.class_id &&
                std::hypot(seen.x - world_x, seen.y - world_y) < radius_)
                return false;
        seen_.push_back({r.class_id, world_x, world_y});
        enqueue(report_record(r));
        ++accepted_;
        return true;
    }

    uint64_t accepted() const { return accepted_; }
    uint64_t written() const { return written_; }
    uint64_t dropped() const { return dropped_; }
    size_t buffered() const { return buffer_.size(); }

    // Retries buffered records, oldest first.
    void flush() {
        while (!buffer_.empty()) {
            if (!sink_.write_record(buffer_.front())) return;
            buffer_.pop_front();
            ++written_;
        }
    }

private:
    void enqueue(std::string record) {
        flush();
        if (buffer_.empty() && sink_.write_record(record)) {
            ++written_;
            return;
        }
        if (buffer_.size() >= buffer_cap_) {
            buffer_.pop_front();
            ++dropped_;
        }
        buffer_.push_back(std::move(record));
    }

    struct Seen {
        int class_id;
        double x, y;
    };

    ReportSink& sink_;
    double radius_;
    size_t buffer_cap_;
    std::vector<Seen> seen_;
    std::deque<std::string> buffer_;
    uint64_t accepted_ = 0;
    uint64_t written_ = 0;
    uint64_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Detectors: the trained model, or the oracle stub that replays the
// renderer's ground truth so control and reporting can be tested on their
// own.

class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<Detection> detect(const ImageFrame& frame) = 0;
};

class OracleDetector final : public Detector {
public:
    std::vector<Detection> detect(const ImageFrame& frame) override {
        std::vector<Detection> out;
        for (const Annotation& a : frame.truths) {
            Detection d;
            d.bbox = a.bbox;
            d.class_id = a.class_id;
            d.confidence = 1.0;
            out.push_back(d);
        }
        return out;
    }
};

class ModelDetector final : public Detector {
public:
    ModelDetector(const Network& net, const NetworkConfig& cfg, double conf_thresh = 0.25,
                  double nms_thresh = 0.45)
        : net_(net), cfg_(cfg), conf_(conf_thresh), nms_(nms_thresh) {}

    std::vector<Detection> detect(const ImageFrame& frame) override {
        Tensor img = frame_to_tensor(frame);
        img = resize_image(img, cfg_.input_size, cfg_.input_size);
        Tensor pred = net_.predict(img);
        return nms(decode_grid(pred, cfg_.boxes_per_cell, cfg_.num_classes, conf_), nms_);
    }

private:
    const Network& net_;
    NetworkConfig cfg_;
    double conf_;
    double nms_;
};

// Pose-driven wrapper over the scene renderer; the camera only produces
// frames while the drone is airborne.
inline Sample render_frame(const SceneSpec& scene, const DroneState& state,
                           const CameraModel& cam) {
    if (!state.flying) throw StateError("render_frame: drone is not flying");
    return generate_scene(scene, cam, state);
}

// ---------------------------------------------------------------------------
// Node 01: detection + tracking. Subscribes to the sensor topics, publishes
// takeoff at start, steers toward the lane via /cmd_vel, reports defects,
// and lands per the lost-target policy.

struct Node01Config {
    ServoConfig servo;
    CameraModel camera;  // used for flat-ground back-projection of reports
    double dedup_radius = 1.0;
    size_t report_buffer_cap = 64;
};

class Node01 {
public:
    Node01(Bus& bus, const Node01Config& cfg, Detector& detector, ReportSink& sink)
        : bus_(bus), cfg_(cfg), detector_(detector),
          reporter_(sink, cfg.dedup_radius, cfg.report_buffer_cap) {
        cfg_.servo.validate();
        cfg_.camera.validate();
        image_sub_ = bus.subscribe(Topic::image_raw);
        nav_sub_ = bus.subscribe(Topic::navdata);
    }

    // Reset the plant and ask for takeoff.
    void start(double sim_time) {
        bus_.publish(NodeId::node01, Topic::reset, sim_time, {});
        bus_.publish(NodeId::node01, Topic::takeoff, sim_time, {});
    }

    void tick(double sim_time) {
        while (auto env = nav_sub_->poll()) {
            if (auto nav = decode_navdata(*env->payload)) last_nav_ = *nav;
            else ++decode_failures_;
        }
        while (auto env = image_sub_->poll()) {
            if (auto frame = decode_image_frame(*env->payload))
                process_frame(*frame, env->seq, sim_time);
            else ++decode_failures_;
        }
    }

    int control_ticks() const { return control_ticks_; }
    bool land_sent() const { return land_sent_; }
    uint64_t decode_failures() const { return decode_failures_; }
    const std::optional<TrackError>& last_error() const { return last_error_; }
    DefectReporter& reporter() { return reporter_; }

private:
    void process_frame(const ImageFrame& frame, uint64_t seq, double sim_time) {
        ++control_ticks_;
        const std::vector<Detection> dets = detector_.detect(frame);

        for (const Detection& d : dets) {
            if (d.class_id != kClassCracks && d.class_id != kClassPothole) continue;
            DefectReport r;
            r.frame_seq = seq;
            r.sim_time = sim_time;
            r.class_id = d.class_id;
            r.bbox = d.bbox;
            r.confidence = d.confidence;
            char ref[32];
            std::snprintf(ref, sizeof(ref), "frame:%06llu", static_cast<unsigned long long>(seq));
            r.image_ref = ref;
            double wx = 0, wy = 0;
            estimate_world(d.bbox, frame, wx, wy);
            reporter_.report(r, wx, wy);
        }

        const std::optional<Detection> target = select_target(dets);
        ControlCommand cmd;  // zero = hover
        if (target) {
            lost_count_ = 0;
            const double W = frame.width, H = frame.height;
            TrackError err = center_error(target->bbox.cx * W, target->bbox.cy * H, W, H);
            last_error_ = err;
            cmd = control_law(err, target->bbox.w * W, W, H, cfg_.servo);
        } else {
            ++lost_count_;
            last_error_.reset();
            if (cfg_.servo.lost_target_policy == LostTargetPolicy::land_after_n &&
                lost_count_ >= cfg_.servo.lost_target_ticks && !land_sent_) {
                bus_.publish(NodeId::node01, Topic::land, sim_time, {});
                land_sent_ = true;
            }
        }
        bus_.publish(NodeId::node01, Topic::cmd_vel, sim_time, encode_cmd_vel(cmd));
    }

    // Flat-ground position of the box center from the latest nav pose.
    void estimate_world(const BBox& box, const ImageFrame& frame, double& wx, double& wy) {
        wx = wy = 0;
        if (!last_nav_ || last_nav_->z <= 0) return;
        scene_detail::Camera view(cfg_.camera, *last_nav_);
        view.ground_point(box.cx * frame.width, box.cy * frame.height, wx, wy);
    }

    Bus& bus_;
    Node01Config cfg_;
    Detector& detector_;
    DefectReporter reporter_;
    std::shared_ptr<Subscription> image_sub_;
    std::shared_ptr<Subscription> nav_sub_;
    std::optional<DroneState> last_nav_;
    std::optional<TrackError> last_error_;
    int control_ticks_ = 0;
    int lost_count_ = 0;
    bool land_sent_ = false;
    uint64_t decode_failures_ = 0;
};

// ---------------------------------------------------------------------------
// Node 02: drone driver. Applies the latched command to the plant at a fixed
// dt and publishes nav data and camera frames at configured rates.

struct Node02Config {
    PlantConfig plant;
    CameraModel camera;
    double dt = 0.05;
    int navdata_every = 1;  // 20 Hz at dt = 0.05
    int image_every = 2;    // 10 Hz
    double cruise_alt = 3.0;
    DroneState initial;
};

class Node02 {
public:
    Node02(Bus& bus, const Node02Config& cfg, const SceneSpec& scene)
        : bus_(bus), cfg_(cfg), scene_(scene), state_(cfg.initial) {
        cfg_.plant.validate();
        cfg_.camera.validate();
        scene_.validate();
        reset_sub_ = bus.subscribe(Topic::reset);
        land_sub_ = bus.subscribe(Topic::land);
        takeoff_sub_ = bus.subscribe(Topic::takeoff);
        cmd_sub_ = bus.subscribe(Topic::cmd_vel);
    }

    void tick(double sim_time) {
        while (reset_sub_->poll()) {
            state_ = cfg_.initial;
            cmd_ = ControlCommand{};
        }
        while (takeoff_sub_->poll()) {
            if (!state_.flying) {
                state_.flying = true;
                state_.z = cfg_.cruise_alt;
            }
        }
        while (land_sub_->poll()) {
            state_.flying = false;
            state_.z = 0;
            state_.lateral_v = state_.forward_v = state_.vertical_v = 0;
        }
        while (auto env = cmd_sub_->poll()) {
            if (auto cmd = decode_cmd_vel(*env->payload)) cmd_ = *cmd;
            else ++decode_failures_;
        }

        if (state_.flying) state_ = drone_step(state_, cmd_, cfg_.dt, cfg_.plant);

        if (tick_count_ % cfg_.navdata_every == 0)
            bus_.publish(NodeId::node02, Topic::navdata, sim_time, encode_navdata(state_));
        if (state_.flying && tick_count_ % cfg_.image_every == 0) {
            const Sample view = render_frame(scene_, state_, cfg_.camera);
            bus_.publish(NodeId::node02, Topic::image_raw, sim_time,
                         encode_image_frame(sample_to_frame(view)));
            ++frames_published_;
        }
        ++tick_count_;
    }

    const DroneState& state() const { return state_; }
    uint64_t frames_published() const { return frames_published_; }
    uint64_t decode_failures() const { return decode_failures_; }

private:
    Bus& bus_;
    Node02Config cfg_;
    SceneSpec scene_;
    DroneState state_;
    ControlCommand cmd_;
    std::shared_ptr<Subscription> reset_sub_, land_sub_, takeoff_sub_, cmd_sub_;
    uint64_t tick_count_ = 0;
    uint64_t frames_published_ = 0;
    uint64_t decode_failures_ = 0;
};

// ---------------------------------------------------------------------------
// Deterministic closed-loop runner: fixed round-robin schedule, Node 02
// (sensors) before Node 01 (decisions) each tick.

struct TrajectoryPoint {
    int tick = 0;
    double sim_time = 0;
    DroneState state;
    bool has_error = false;
    double e_x_px = 0;
};

struct SimulationResult {
    int ticks = 0;
    bool landed = false;  // flew and then landed
    uint64_t reports_accepted = 0;
    uint64_t frames = 0;
    std::vector<TrajectoryPoint> trajectory;
};

inline std::string trajectory_line(const TrajectoryPoint& p) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%d %.3f %.6f %.6f %.6f %.6f %d %.3f", p.tick, p.sim_time,
                  p.state.x, p.state.y, p.state.z, p.state.heading, p.state.flying ? 1 : 0,
                  p.has_error ? p.e_x_px : 0.0);
    return buf;
}

inline SimulationResult run_simulation(const SceneSpec& scene, const Node01Config& n01_cfg,
                                       const Node02Config& n02_cfg, Detector& detector,
                                       ReportSink& sink, int max_ticks = 20000,
                                       std::ostream* trajectory_log = nullptr) {
    Bus bus;
    Node02 node02(bus, n02_cfg, scene);
    Node01 node01(bus, n01_cfg, detector, sink);

    SimulationResult result;
    bool flew = false;
    node01.start(0.0);
    for (int tick = 0; tick < max_ticks; ++tick) {
        const double sim_time = tick * n02_cfg.dt;
        node02.tick(sim_time);
        node01.tick(sim_time);

        TrajectoryPoint p;
        p.tick = tick;
        p.sim_time = sim_time;
        p.state = node02.state();
        if (node01.last_error()) {
            p.has_error = true;
            p.e_x_px = node01.last_error()->e_x;
        }
        result.trajectory.push_back(p);
        if (trajectory_log) (*trajectory_log) << trajectory_line(p) << "\n";

        flew = flew || node02.state().flying;
        result.ticks = tick + 1;
        if (flew && !node02.state().flying) {
            result.landed = true;
            break;
        }
    }
    node01.reporter().flush();
    result.reports_accepted = node01.reporter().accepted();
    result.frames = node02.frames_published();
    return result;
}

}  // namespace roadhawk
