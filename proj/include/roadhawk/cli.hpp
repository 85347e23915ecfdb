#pragma once

#include <filesystem>
#include <tuple>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "roadhawk/data.hpp"
#include "roadhawk/loss.hpp"
#include "roadhawk/metrics.hpp"
#include "roadhawk/model_zoo.hpp"
#include "roadhawk/report_socket.hpp"
#include "roadhawk/scene.hpp"
#include "roadhawk/simnet.hpp"
#include "roadhawk/weights_io.hpp"

namespace roadhawk {

// ---------------------------------------------------------------------------
// Aggregate run configuration. Desk-scale defaults; full_scale() swaps in
// the full training-table values.

struct RunConfig {
    Variant variant = Variant::Improved;
    TrainConfig train{0.001, 0.9, 0.0005, 8, 2, 3000, 128, 3};
    AugmentConfig augment;
    ServoConfig servo;
    std::string scene_path;  // empty -> canonical scenes
    uint64_t seed = 42;
    std::string out_dir = "out";
    int boxes_per_cell = 2;
    int base_filters = 4;
    int checkpoint_interval = 1000;
    double conf_thresh = 0.25;
    double nms_thresh = 0.45;
    bool augment_online = true;

    void full_scale() {
        train = TrainConfig{0.001, 0.9, 0.0005, 64, 4, 10000, 416, 3};
        base_filters = 16;
        checkpoint_interval = 1000;
    }

    void validate() const {
        train.validate();
        augment.validate();
        servo.validate();
        if (boxes_per_cell < 1) throw ConfigError("boxes_per_cell must be >= 1");
        if (base_filters < 1) throw ConfigError("base_filters must be >= 1");
        if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be >= 1");
        if (conf_thresh < 0 || conf_thresh > 1 || nms_thresh < 0 || nms_thresh > 1)
            throw ConfigError("thresholds must be in [0,1]");
        if (!scene_path.empty() && !std::filesystem::exists(scene_path))
            throw ConfigError("scene file does not exist: " + scene_path);
    }
};

inline std::string serialize_run_config(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "[run]\n";
    out << "variant=" << variant_name(c.variant) << "\n";
    out << "seed=" << c.seed << "\n";
    out << "out=" << c.out_dir << "\n";
    if (!c.scene_path.empty()) out << "scene=" << c.scene_path << "\n";
    out << "boxes_per_cell=" << c.boxes_per_cell << "\n";
    out << "base_filters=" << c.base_filters << "\n";
    out << "checkpoint_interval=" << c.checkpoint_interval << "\n";
    out << "conf_thresh=" << c.conf_thresh << "\n";
    out << "nms_thresh=" << c.nms_thresh << "\n";
    out << "augment_online=" << (c.augment_online ? 1 : 0) << "\n";
    out << "\n[train]\n";
    out << "learning_rate=" << c.train.learning_rate << "\n";
    out << "momentum=" << c.train.momentum << "\n";
    out << "decay=" << c.train.decay << "\n";
    out << "batch_size=" << c.train.batch_size << "\n";
    out << "subdivisions=" << c.train.subdivisions << "\n";
    out << "iterations=" << c.train.iterations << "\n";
    out << "input_size=" << c.train.input_size << "\n";
    out << "channels=" << c.train.channels << "\n";
    out << "\n[augment]\n";
    out << "saturation=" << c.augment.saturation << "\n";
    out << "exposure=" << c.augment.exposure << "\n";
    out << "hue=" << c.augment.hue << "\n";
    out << "\n[servo]\n";
    out << "k_roll=" << c.servo.k_roll << "\n";
    out << "k_yaw=" << c.servo.k_yaw << "\n";
    out << "k_vertical=" << c.servo.k_vertical << "\n";
    out << "forward_speed=" << c.servo.forward_speed << "\n";
    out << "width_threshold=" << c.servo.width_threshold << "\n";
    out << "lost_target_policy="
        << (c.servo.lost_target_policy == LostTargetPolicy::hover ? "hover" : "land_after_n")
        << "\n";
    out << "lost_target_ticks=" << c.servo.lost_target_ticks << "\n";
    return out.str();
}

inline RunConfig parse_run_config(const std::string& text) {
    RunConfig c;
    std::string section = "run";
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        const std::string line = detail::trim_ws(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        std::string key, value;
        if (!detail::split_kv(line, key, value)) throw ConfigError("config: bad line: " + raw);
        try {
            if (section == "run") {
                if (key == "variant") c.variant = parse_variant(value);
                else if (key == "seed") c.seed = std::stoull(value);
                else if (key == "out") c.out_dir = value;
                else if (key == "scene") c.scene_path = value;
                else if (key == "boxes_per_cell") c.boxes_per_cell = std::stoi(value);
                else if (key == "base_filters") c.base_filters = std::stoi(value);
                else if (key == "checkpoint_interval") c.checkpoint_interval = std::stoi(value);
                else if (key == "conf_thresh") c.conf_thresh = std::stod(value);
                else if (key == "nms_thresh") c.nms_thresh = std::stod(value);
                else if (key == "augment_online") c.augment_online = std::stoi(value) != 0;
                else throw ConfigError("config: unknown [run] key: " + key);
            } else if (section == "train") {
                if (key == "learning_rate") c.train.learning_rate = std::stod(value);
                else if (key == "momentum") c.train.momentum = std::stod(value);
                else if (key == "decay") c.train.decay = std::stod(value);
                else if (key == "batch_size") c.train.batch_size = std::stoi(value);
                else if (key == "subdivisions") c.train.subdivisions = std::stoi(value);
                else if (key == "iterations") c.train.iterations = std::stoi(value);
                else if (key == "input_size") c.train.input_size = std::stoi(value);
                else if (key == "channels") c.train.channels = std::stoi(value);
                else throw ConfigError("config: unknown [train] key: " + key);
            } else if (section == "augment") {
                if (key == "saturation") c.augment.saturation = std::stod(value);
                else if (key == "exposure") c.augment.exposure = std::stod(value);
                else if (key == "hue") c.augment.hue = std::stod(value);
                else throw ConfigError("config: unknown [augment] key: " + key);
            } else if (section == "servo") {
                if (key == "k_roll") c.servo.k_roll = std::stod(value);
                else if (key == "k_yaw") c.servo.k_yaw = std::stod(value);
                else if (key == "k_vertical") c.servo.k_vertical = std::stod(value);
                else if (key == "forward_speed") c.servo.forward_speed = std::stod(value);
                else if (key == "width_threshold") c.servo.width_threshold = std::stod(value);
                else if (key == "lost_target_ticks") c.servo.lost_target_ticks = std::stoi(value);
                else if (key == "lost_target_policy")
                    c.servo.lost_target_policy = value == "hover" ? LostTargetPolicy::hover
                                                                  : LostTargetPolicy::land_after_n;
                else throw ConfigError("config: unknown [servo] key: " + key);
            } else {
                throw ConfigError("config: unknown section: " + section);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("config: bad value for " + key + ": " + value);
        }
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_run_config(buf.str());
}

// ---------------------------------------------------------------------------
// gen-data: renders `count` samples of a scene from randomized poses along
// the lane, with PPM images, sibling label files and a manifest.

struct GenDataResult {
    int count = 0;
    std::string manifest_path;
};

namespace cli_detail {

// Pose sampled along the lane with lateral/altitude/heading jitter.
inline DroneState sample_pose(const SceneSpec& spec, Rng& rng) {
    const size_t seg = rng.below(spec.lane.size() - 1);
    const double t = rng.next_double();
    const auto& a = spec.lane[seg];
    const auto& b = spec.lane[seg + 1];
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    DroneState pose;
    pose.x = a[0] + t * dx;
    pose.y = a[1] + t * dy;
    // Compass heading of the segment direction, plus jitter.
    pose.heading = -std::atan2(dy, dx) + rng.uniform(-0.35, 0.35);
    // Lateral offset perpendicular to the segment.
    const double len = std::max(1e-9, std::hypot(dx, dy));
    const double off = rng.uniform(-2.0, 2.0);
    pose.x += -dy / len * off;
    pose.y += dx / len * off;
    pose.z = rng.uniform(2.2, 4.0);
    pose.flying = true;
    return pose;
}

}  // namespace cli_detail

inline GenDataResult cmd_gen_data(const SceneSpec& scene, int count, const std::string& out_dir,
                                  uint64_t seed, int image_size = 128) {
    if (count < 0) throw ConfigError("gen-data: count must be >= 0");
    scene.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    CameraModel cam;
    cam.width = cam.height = image_size;

    std::ostringstream manifest;
    manifest << "# roadhawk dataset\n";
    manifest << "seed=" << seed << "\ncount=" << count << "\nimage_size=" << image_size << "\n";
    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::stream(seed, static_cast<uint64_t>(i));
        const DroneState pose = cli_detail::sample_pose(scene, rng);
        Sample s = generate_scene(scene, cam, pose);
        char name[64];
        std::snprintf(name, sizeof(name), "sample_%05d", i);
        const std::string img_path = (fs::path(out_dir) / (std::string(name) + ".ppm")).string();
        const std::string lbl_path = (fs::path(out_dir) / (std::string(name) + ".txt")).string();
        write_ppm(img_path, s.image);
        std::ofstream lbl(lbl_path);
        for (const Annotation& a : s.annotations) lbl << annotation_line(a) << "\n";
        manifest << name << ".ppm " << name << ".txt " << s.annotations.size() << "\n";
    }
    GenDataResult r;
    r.count = count;
    r.manifest_path = (fs::path(out_dir) / "manifest.txt").string();
    std::ofstream mf(r.manifest_path);
    mf << manifest.str();
    if (!mf) throw IoError("cannot write manifest");
    return r;
}

// ---------------------------------------------------------------------------
// Training loop with per-iteration loss log, periodic checkpoints and
// best-by-validation-mAP tracking.

struct TrainHooks {
    std::ostream* loss_log = nullptr;
    std::ostream* info = nullptr;  // warnings / checkpoint notes
};

struct CheckpointInfo {
    int iteration = 0;
    std::string path;
    double val_map_pct = 0;
};

struct TrainResult {
    double initial_loss = 0;
    double final_loss = 0;
    std::vector<CheckpointInfo> checkpoints;
    int best_checkpoint = -1;  // index into checkpoints
    std::string best_path;
    int dropped_truths = 0;
};

inline EvalFrame eval_sample(const Network& net, const NetworkConfig& cfg, const Sample& s,
                             double conf_thresh, double nms_thresh) {
    Sample sized = s.image.dim(1) == cfg.input_size && s.image.dim(2) == cfg.input_size
                       ? s
                       : resize(s, cfg.input_size);
    Tensor pred = net.predict(sized.image);
    EvalFrame frame;
    frame.dets = nms(decode_grid(pred, cfg.boxes_per_cell, cfg.num_classes, conf_thresh),
                     nms_thresh);
    for (const Annotation& a : s.annotations) frame.truths.emplace_back(a.class_id, a.bbox);
    return frame;
}

inline double validation_map(const Network& net, const NetworkConfig& cfg,
                             const std::vector<Sample>& val, double nms_thresh) {
    std::vector<EvalFrame> frames;
    for (const Sample& s : val) frames.push_back(eval_sample(net, cfg, s, 0.005, nms_thresh));
    return mean_average_precision(frames, cfg.num_classes).map_pct;
}

inline TrainResult train_network(Network& net, const NetworkConfig& net_cfg,
                                 const std::vector<Sample>& train_set,
                                 const std::vector<Sample>& val_set, const RunConfig& cfg,
                                 const std::string& checkpoint_dir, int start_iter = 0,
                                 TrainHooks hooks = {}) {
    if (train_set.empty()) throw ConfigError("train: empty training set");
    cfg.train.validate();
    namespace fs = std::filesystem;
    if (!checkpoint_dir.empty()) fs::create_directories(checkpoint_dir);

    TrainResult result;
    const int B = net_cfg.boxes_per_cell, C = net_cfg.num_classes;
    double window_best = -1;
    int since_improved = 0;
    const int patience = 200;

    for (int iter = start_iter; iter < cfg.train.iterations; ++iter) {
        Rng iter_rng = Rng::stream(cfg.seed, 0x7261696eULL + static_cast<uint64_t>(iter));
        net.zero_grads();
        LossBreakdown batch_loss;
        int dropped = 0;

        for (int k = 0; k < cfg.train.batch_size; ++k) {
            const Sample& picked = train_set[iter_rng.below(train_set.size())];
            Sample s = picked;
            if (cfg.augment_online) {
                Rng aug_rng = Rng::stream(cfg.seed ^ 0xa06u, static_cast<uint64_t>(iter) *
                                              cfg.train.batch_size + k);
                s = augment(s, cfg.augment, aug_rng);
            }
            if (s.image.dim(1) != net_cfg.input_size || s.image.dim(2) != net_cfg.input_size)
                s = resize(s, net_cfg.input_size);

            Tensor pred = net.forward(s.image);
            std::vector<std::pair<int, BBox>> truths;
            for (const Annotation& a : s.annotations) truths.emplace_back(a.class_id, a.bbox);
            TargetGrid targets =
                assign_targets(truths, net_cfg.grid_size, B, C, decode_all_slots(pred, B, C));
            dropped += targets.dropped_truths;
            LossBreakdown l = yolo_loss(pred, targets);
            batch_loss.coord_err += l.coord_err;
            batch_loss.iou_err += l.iou_err;
            batch_loss.cls_err += l.cls_err;
            batch_loss.total += l.total;
            net.backward(yolo_loss_grad(pred, targets));
            // subdivisions chunk batch memory in the original framework; the
            // per-image streaming here makes them a no-op numerically
        }

        const double inv = 1.0 / cfg.train.batch_size;
        net.scale_grads(inv);
        batch_loss.coord_err *= inv;
        batch_loss.iou_err *= inv;
        batch_loss.cls_err *= inv;
        batch_loss.total *= inv;
        auto params = net.params();
        sgd_step(params, cfg.train);

        if (iter == start_iter) result.initial_loss = batch_loss.total;
        result.final_loss = batch_loss.total;
        result.dropped_truths += dropped;
        if (hooks.loss_log) (*hooks.loss_log) << loss_log_line(iter, batch_loss) << "\n";
        if (dropped > 0 && hooks.info)
            (*hooks.info) << "iter " << iter << ": dropped " << dropped
                          << " same-cell truth(s)\n";

        // Plateau warning (not a failure).
        if (window_best < 0 || batch_loss.total < window_best * 0.999) {
            window_best = batch_loss.total;
            since_improved = 0;
        } else if (++since_improved == patience && hooks.info) {
            (*hooks.info) << "warning: loss has not improved for " << patience
                          << " iterations\n";
        }

        const int done = iter + 1;
        if (!checkpoint_dir.empty() &&
            (done % cfg.checkpoint_interval == 0 || done == cfg.train.iterations)) {
            char name[64];
            std::snprintf(name, sizeof(name), "weights_%06d.rhwt", done);
            CheckpointInfo ck;
            ck.iteration = done;
            ck.path = (fs::path(checkpoint_dir) / name).string();
            save_weights(ck.path, net);
            ck.val_map_pct = val_set.empty()
                                 ? 0.0
                                 : validation_map(net, net_cfg, val_set, cfg.nms_thresh);
            if (result.best_checkpoint < 0 ||
                ck.val_map_pct > result.checkpoints[result.best_checkpoint].val_map_pct)
                result.best_checkpoint = static_cast<int>(result.checkpoints.size());
            result.checkpoints.push_back(ck);
            if (hooks.info)
                (*hooks.info) << "checkpoint " << ck.path << " val_map " << ck.val_map_pct
                              << "\n";
        }
    }

    if (result.best_checkpoint >= 0) {
        const CheckpointInfo& best = result.checkpoints[result.best_checkpoint];
        result.best_path =
            (fs::path(checkpoint_dir) / "best.rhwt").string();
        fs::copy_file(best.path, result.best_path, fs::copy_options::overwrite_existing);
        std::ofstream note(fs::path(checkpoint_dir) / "checkpoints.txt");
        for (const CheckpointInfo& ck : result.checkpoints) {
            note << ck.iteration << " " << fs::path(ck.path).filename().string() << " "
                 << ck.val_map_pct << (ck.iteration == best.iteration ? " best" : "") << "\n";
        }
    }
    return result;
}

// Checkpoint filenames carry the iteration count, used by --resume.
inline int checkpoint_iteration(const std::string& path) {
    const std::string stem = std::filesystem::path(path).stem().string();
    const size_t us = stem.rfind('_');
    if (us == std::string::npos) return 0;
    try {
        return std::stoi(stem.substr(us + 1));
    } catch (const std::exception&) {
        return 0;
    }
}

struct CmdTrainResult {
    TrainResult train;
    std::string loss_log_path;
};

inline CmdTrainResult cmd_train(const RunConfig& cfg, const std::string& data_dir,
                                const std::string& resume_path = "",
                                std::ostream* info = nullptr) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    LoadResult data = load_dataset(data_dir);
    if (info && !data.skipped.empty()) {
        (*info) << data.skipped.size() << " file(s) skipped:\n" << format_skip_report(data.skipped);
        std::ofstream rep(fs::path(cfg.out_dir) / "skip_report.txt");
        rep << format_skip_report(data.skipped);
    }
    std::vector<Sample> train_set, val_set;
    if (data.samples.size() < 2) {
        train_set = std::move(data.samples);  // single-image overfit runs
    } else {
        std::tie(train_set, val_set) = split(std::move(data.samples), 0.8, cfg.seed);
    }

    NetworkConfig net_cfg = make_network_config(cfg.variant, kNumRoadClasses, cfg.boxes_per_cell,
                                                cfg.train.input_size, cfg.base_filters);
    Network net = build_network(net_cfg, cfg.seed);
    int start_iter = 0;
    if (!resume_path.empty()) {
        load_weights(resume_path, net);
        start_iter = checkpoint_iteration(resume_path);
        if (info) (*info) << "resumed from " << resume_path << " at iteration " << start_iter
                          << "\n";
    }

    CmdTrainResult out;
    out.loss_log_path = (fs::path(cfg.out_dir) / "loss_log.txt").string();
    std::ofstream loss_log(out.loss_log_path, resume_path.empty() ? std::ios::trunc
                                                                  : std::ios::app);
    TrainHooks hooks;
    hooks.loss_log = &loss_log;
    hooks.info = info;
    out.train = train_network(net, net_cfg, train_set, val_set, cfg,
                              (fs::path(cfg.out_dir) / "checkpoints").string(), start_iter,
                              hooks);
    std::ofstream cfg_copy(fs::path(cfg.out_dir) / "run_config.txt");
    cfg_copy << serialize_run_config(cfg);
    return out;
}

// ---------------------------------------------------------------------------
// eval: Table-shaped metrics report over the validation split.

struct CmdEvalResult {
    MetricsReport report;
    std::string table_path;
    std::string lines_path;
    std::string detections_path;
};

inline CmdEvalResult cmd_eval(const RunConfig& cfg, const std::string& weights_path,
                              const std::string& data_dir, bool whole_dataset = false,
                              std::ostream* info = nullptr) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    LoadResult data = load_dataset(data_dir);
    std::vector<Sample> eval_set;
    if (whole_dataset || data.samples.size() < 2) {
        eval_set = std::move(data.samples);
    } else {
        auto [train_set, val_set] = split(std::move(data.samples), 0.8, cfg.seed);
        eval_set = std::move(val_set);
    }
    if (eval_set.empty()) throw ConfigError("eval: no usable samples in " + data_dir);

    NetworkConfig net_cfg = make_network_config(cfg.variant, kNumRoadClasses, cfg.boxes_per_cell,
                                                cfg.train.input_size, cfg.base_filters);
    Network net = build_network(net_cfg, cfg.seed);
    if (!weights_path.empty()) load_weights(weights_path, net);

    std::vector<EvalFrame> frames;
    std::ostringstream dets_text;
    const auto t0 = std::chrono::steady_clock::now();
    for (const Sample& s : eval_set) {
        frames.push_back(eval_sample(net, net_cfg, s, 0.005, cfg.nms_thresh));
        dets_text << "# " << s.id << "\n" << detections_to_text(frames.back().dets);
    }
    const auto t1 = std::chrono::steady_clock::now();

    CmdEvalResult out;
    out.report = compute_report(frames, kNumRoadClasses, cfg.conf_thresh);
    out.report.mean_latency_s =
        std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(eval_set.size());

    const std::string title = std::string("roadhawk eval, variant=") + variant_name(cfg.variant) +
                              ", conf=" + std::to_string(cfg.conf_thresh);
    out.table_path = (fs::path(cfg.out_dir) / "report.txt").string();
    out.lines_path = (fs::path(cfg.out_dir) / "report_lines.txt").string();
    out.detections_path = (fs::path(cfg.out_dir) / "detections.txt").string();
    std::ofstream(out.table_path) << format_report_table(out.report, title);
    std::ofstream(out.lines_path) << format_report_lines(out.report);
    std::ofstream(out.detections_path) << dets_text.str();
    if (info) (*info) << format_report_table(out.report, title);
    return out;
}

// ---------------------------------------------------------------------------
// simulate: full two-node closed loop against a scene.

struct CmdSimulateResult {
    SimulationResult sim;
    std::string report_path;
    std::string trajectory_path;
};

// report_host empty -> append-only file sink in out_dir; otherwise records go
// to a stream socket at report_host:report_port (length-prefixed).
inline CmdSimulateResult cmd_simulate(const RunConfig& cfg, const std::string& detector_kind,
                                      const std::string& weights_path, double start_offset_m = 1.0,
                                      int max_ticks = 20000, std::ostream* info = nullptr,
                                      const std::string& report_host = "",
                                      uint16_t report_port = 0) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    const SceneSpec scene =
        cfg.scene_path.empty() ? canonical_inspection_scene() : load_scene_spec(cfg.scene_path);

    Node01Config n01;
    n01.servo = cfg.servo;
    n01.camera = CameraModel{};
    Node02Config n02;
    n02.camera = CameraModel{};
    n02.initial.y = start_offset_m;
    n02.initial.flying = false;

    std::unique_ptr<Detector> detector;
    Network net;  // must outlive the model detector
    NetworkConfig net_cfg;
    if (detector_kind == "oracle") {
        detector = std::make_unique<OracleDetector>();
    } else if (detector_kind == "model") {
        net_cfg = make_network_config(cfg.variant, kNumRoadClasses, cfg.boxes_per_cell,
                                      cfg.train.input_size, cfg.base_filters);
        net = build_network(net_cfg, cfg.seed);
        if (weights_path.empty()) throw ConfigError("simulate: model detector needs --weights");
        load_weights(weights_path, net);
        detector = std::make_unique<ModelDetector>(net, net_cfg, cfg.conf_thresh, cfg.nms_thresh);
    } else {
        throw ConfigError("simulate: detector must be 'oracle' or 'model'");
    }

    CmdSimulateResult out;
    out.trajectory_path = (fs::path(cfg.out_dir) / "trajectory.txt").string();
    std::unique_ptr<ReportSink> sink;
    if (report_host.empty()) {
        out.report_path = (fs::path(cfg.out_dir) / "defect_reports.txt").string();
        sink = std::make_unique<FileReportSink>(out.report_path);
    } else {
        auto socket_sink = std::make_unique<SocketReportSink>(report_host, report_port);
        if (info && !socket_sink->connected())
            (*info) << "report server unreachable; records will be buffered\n";
        sink = std::move(socket_sink);
    }
    std::ofstream traj(out.trajectory_path);
    out.sim = run_simulation(scene, n01, n02, *detector, *sink, max_ticks, &traj);
    if (info)
        (*info) << "simulate: ticks=" << out.sim.ticks << " landed=" << out.sim.landed
                << " frames=" << out.sim.frames << " reports=" << out.sim.reports_accepted
                << "\n";
    return out;
}

// ---------------------------------------------------------------------------
// bench: latency harness over synthetic images.

struct CmdBenchResult {
    LatencyStats stats;
    std::string path;
};

inline CmdBenchResult cmd_bench(const RunConfig& cfg, const std::string& weights_path,
                                int repetitions, int image_count = 4,
                                std::ostream* info = nullptr) {
    cfg.validate();
    if (repetitions < 1) throw ConfigError("bench: repetitions must be >= 1");
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    NetworkConfig net_cfg = make_network_config(cfg.variant, kNumRoadClasses, cfg.boxes_per_cell,
                                                cfg.train.input_size, cfg.base_filters);
    Network net = build_network(net_cfg, cfg.seed);
    if (!weights_path.empty()) load_weights(weights_path, net);

    Rng rng(cfg.seed ^ 0xbe7cULL);
    std::vector<Tensor> images;
    for (int i = 0; i < image_count; ++i) {
        Tensor img({kImageChannels, cfg.train.input_size, cfg.train.input_size});
        for (int64_t j = 0; j < img.numel(); ++j) img[j] = rng.next_double();
        images.push_back(std::move(img));
    }

    CmdBenchResult out;
    out.stats = bench_latency(net, images, repetitions, cfg.boxes_per_cell, kNumRoadClasses,
                              cfg.conf_thresh);
    out.path = (fs::path(cfg.out_dir) / "bench.txt").string();
    char line[256];
    std::snprintf(line, sizeof(line), "%s input=%d mean=%.6f min=%.6f max=%.6f samples=%d\n",
                  variant_name(cfg.variant), cfg.train.input_size, out.stats.mean_s,
                  out.stats.min_s, out.stats.max_s, out.stats.samples);
    std::ofstream(out.path, std::ios::app) << line;
    if (info) (*info) << line;
    return out;
}

}  // namespace roadhawk
