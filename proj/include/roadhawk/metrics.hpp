#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "roadhawk/common.hpp"
#include "roadhawk/detect.hpp"
#include "roadhawk/nn.hpp"

namespace roadhawk {

struct ClassCounts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

struct MatchResult {
    std::vector<ClassCounts> per_class;
    int64_t tn_frames = 0;   // frames with neither truths nor detections
    int64_t duplicates = 0;  // extra true detections on an already-claimed truth

    explicit MatchResult(int num_classes = 0) : per_class(num_classes) {}

    void merge(const MatchResult& other) {
        if (per_class.size() != other.per_class.size())
            throw ShapeError("MatchResult merge: class count mismatch");
        for (size_t c = 0; c < per_class.size(); ++c) {
            per_class[c].tp += other.per_class[c].tp;
            per_class[c].fp += other.per_class[c].fp;
            per_class[c].fn += other.per_class[c].fn;
        }
        tn_frames += other.tn_frames;
        duplicates += other.duplicates;
    }
};

// Centroid matching for one frame: a detection is a true positive when its
// box center lies inside an unclaimed same-class ground-truth box. Further
// detections landing on a claimed truth are counted once (duplicates are
// neither TP nor FP), unless strict_duplicates turns them into FPs.
inline MatchResult match_detections(std::vector<Detection> dets,
                                    const std::vector<std::pair<int, BBox>>& truths,
                                    int num_classes, bool strict_duplicates = false) {
    MatchResult r(num_classes);
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        return a.confidence > b.confidence;
    });
    std::vector<bool> claimed(truths.size(), false);

    for (const Detection& d : dets) {
        if (d.class_id < 0 || d.class_id >= num_classes)
            throw ConfigError("match_detections: class out of range");
        const double cx = d.bbox.cx, cy = d.bbox.cy;
        int hit_unclaimed = -1, hit_claimed = -1;
        for (size_t t = 0; t < truths.size(); ++t) {
            if (truths[t].first != d.class_id) continue;
            if (!truths[t].second.contains(cx, cy)) continue;
            if (!claimed[t]) {
                hit_unclaimed = static_cast<int>(t);
                break;
            }
            if (hit_claimed < 0) hit_claimed = static_cast<int>(t);
        }
        if (hit_unclaimed >= 0) {
            claimed[hit_unclaimed] = true;
            ++r.per_class[d.class_id].tp;
        } else if (hit_claimed >= 0) {
            ++r.duplicates;
            if (strict_duplicates) ++r.per_class[d.class_id].fp;
        } else {
            ++r.per_class[d.class_id].fp;
        }
    }
    for (size_t t = 0; t < truths.size(); ++t)
        if (!claimed[t]) ++r.per_class[truths[t].first].fn;
    if (dets.empty() && truths.empty()) r.tn_frames = 1;
    return r;
}

// ---------------------------------------------------------------------------
// Scalar metrics, all in percent. Zero denominators return 0 and clear the
// `defined` flag instead of erroring; sparse synthetic sets hit them often.

inline double precision_pct(int64_t tp, int64_t fp, bool* defined = nullptr) {
    if (tp + fp <= 0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;
    return 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
}

inline double sensitivity_pct(int64_t tp, int64_t fn, bool* defined = nullptr) {
    if (tp + fn <= 0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;
    return 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
}

// Harmonic mean of precision and sensitivity (percent in, percent out).
inline double f1_pct(double pre, double sen) {
    if (pre + sen <= 0) return 0.0;
    return 2.0 * sen * pre / (sen + pre);
}

// F2 weights sensitivity higher: 5*Pre*Sen/(4*Pre+Sen).
inline double f2_pct(double pre, double sen) {
    if (4.0 * pre + sen <= 0) return 0.0;
    return 5.0 * pre * sen / (4.0 * pre + sen);
}

inline double dice_pct(int64_t tp, int64_t fp, int64_t fn, bool* defined = nullptr) {
    if (2 * tp + fp + fn <= 0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;
    return 100.0 * 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

// ---------------------------------------------------------------------------
// Average precision with centroid matching and all-points interpolation.

struct EvalFrame {
    std::vector<Detection> dets;
    std::vector<std::pair<int, BBox>> truths;
};

struct ApResult {
    double ap_pct = 0;
    bool defined = false;  // false when the class has no ground truth
};

namespace detail {

struct PrPoint {
    double recall;
    double precision;
};

// Area under the precision envelope over the recall axis. The envelope at a
// point is the max precision among points with recall >= its recall.
inline double pr_envelope_area(std::vector<PrPoint> pts) {
    std::stable_sort(pts.begin(), pts.end(),
                     [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
    std::vector<double> envp(pts.size());
    double env = 0;
    for (size_t i = pts.size(); i-- > 0;) {
        env = std::max(env, pts[i].precision);
        envp[i] = env;
    }
    double area = 0;
    double prev_r = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        area += (pts[i].recall - prev_r) * envp[i];
        prev_r = pts[i].recall;
    }
    return area;
}

}  // namespace detail

// Sweeps the confidence threshold over every detection score; at each
// threshold precision/recall come from centroid matching, and AP is the area
// under the precision-recall envelope.
inline ApResult average_precision(const std::vector<EvalFrame>& frames, int class_id,
                                  bool strict_duplicates = false) {
    int64_t total_truths = 0;
    for (const EvalFrame& f : frames)
        for (const auto& t : f.truths) total_truths += t.first == class_id ? 1 : 0;
    if (total_truths == 0) return {};

    // Global confidence order; ties resolved by (frame, input position).
    struct Entry {
        double conf;
        int frame;
        int pos;
    };
    std::vector<Entry> order;
    for (int fi = 0; fi < static_cast<int>(frames.size()); ++fi)
        for (int pi = 0; pi < static_cast<int>(frames[fi].dets.size()); ++pi)
            if (frames[fi].dets[pi].class_id == class_id)
                order.push_back({frames[fi].dets[pi].confidence, fi, pi});
    std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.pos < b.pos;
    });

    // Walk detections from high to low confidence, keeping per-frame claim
    // state. Claims settled at higher confidence are unaffected by later
    // detections, so this is equivalent to re-matching at every threshold.
    std::vector<std::vector<bool>> claimed(frames.size());
    for (size_t fi = 0; fi < frames.size(); ++fi)
        claimed[fi].assign(frames[fi].truths.size(), false);

    std::vector<detail::PrPoint> pts;
    int64_t tp = 0, fp = 0;
    for (size_t i = 0; i < order.size(); ++i) {
        const Entry& e = order[i];
        const Detection& d = frames[e.frame].dets[e.pos];
        const auto& truths = frames[e.frame].truths;
        int hit_unclaimed = -1;
        bool hit_claimed = false;
        for (size_t t = 0; t < truths.size(); ++t) {
            if (truths[t].first != class_id) continue;
            if (!truths[t].second.contains(d.bbox.cx, d.bbox.cy)) continue;
            if (!claimed[e.frame][t]) {
                hit_unclaimed = static_cast<int>(t);
                break;
            }
            hit_claimed = true;
        }
        if (hit_unclaimed >= 0) {
            claimed[e.frame][hit_unclaimed] = true;
            ++tp;
        } else if (hit_claimed) {
            if (strict_duplicates) ++fp;
        } else {
            ++fp;
        }
        // Emit one PR point per unique confidence value.
        if (i + 1 == order.size() || order[i + 1].conf != e.conf) {
            if (tp + fp > 0)
                pts.push_back({static_cast<double>(tp) / total_truths,
                               static_cast<double>(tp) / static_cast<double>(tp + fp)});
        }
    }
    return {100.0 * detail::pr_envelope_area(std::move(pts)), true};
}

struct MapResult {
    std::vector<ApResult> per_class;
    double map_pct = 0;
    int classes_counted = 0;  // classes with ground truth present
};

inline MapResult mean_average_precision(const std::vector<EvalFrame>& frames, int num_classes,
                                        bool strict_duplicates = false) {
    MapResult out;
    double sum = 0;
    for (int c = 0; c < num_classes; ++c) {
        ApResult ap = average_precision(frames, c, strict_duplicates);
        out.per_class.push_back(ap);
        if (ap.defined) {
            sum += ap.ap_pct;
            ++out.classes_counted;
        }
    }
    out.map_pct = out.classes_counted > 0 ? sum / out.classes_counted : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Full per-class report plus aggregate scores.

struct ClassMetrics {
    double pre = 0, sen = 0, f1 = 0, f2 = 0, dice = 0;
    bool pre_defined = false, sen_defined = false, dice_defined = false;
    ApResult ap;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    MatchResult counts{0};
    double map_pct = 0;
    int map_classes = 0;
    double accuracy_pct = 0;  // micro-averaged TP/(TP+FP+FN) over all classes
    bool accuracy_defined = false;
    double mean_latency_s = 0;
};

// Counts use detections at the operating threshold; AP sweeps all of them.
inline MetricsReport compute_report(const std::vector<EvalFrame>& frames, int num_classes,
                                    double operating_conf, bool strict_duplicates = false) {
    MetricsReport rep;
    rep.counts = MatchResult(num_classes);
    for (const EvalFrame& f : frames) {
        std::vector<Detection> kept;
        for (const Detection& d : f.dets)
            if (d.confidence >= operating_conf) kept.push_back(d);
        rep.counts.merge(match_detections(kept, f.truths, num_classes, strict_duplicates));
    }

    int64_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (int c = 0; c < num_classes; ++c) {
        const ClassCounts& cc = rep.counts.per_class[c];
        ClassMetrics m;
        m.pre = precision_pct(cc.tp, cc.fp, &m.pre_defined);
        m.sen = sensitivity_pct(cc.tp, cc.fn, &m.sen_defined);
        m.f1 = f1_pct(m.pre, m.sen);
        m.f2 = f2_pct(m.pre, m.sen);
        m.dice = dice_pct(cc.tp, cc.fp, cc.fn, &m.dice_defined);
        rep.per_class.push_back(m);
        tp_all += cc.tp;
        fp_all += cc.fp;
        fn_all += cc.fn;
    }
    MapResult map = mean_average_precision(frames, num_classes, strict_duplicates);
    for (int c = 0; c < num_classes; ++c) rep.per_class[c].ap = map.per_class[c];
    rep.map_pct = map.map_pct;
    rep.map_classes = map.classes_counted;
    if (tp_all + fp_all + fn_all > 0) {
        rep.accuracy_pct = 100.0 * static_cast<double>(tp_all) /
                           static_cast<double>(tp_all + fp_all + fn_all);
        rep.accuracy_defined = true;
    }
    return rep;
}

// Aligned per-class metrics table.
inline std::string format_report_table(const MetricsReport& rep, const std::string& title) {
    std::string out;
    char buf[256];
    out += "# " + title + "\n";
    out += "# accuracy = micro-averaged TP/(TP+FP+FN) across classes\n";
    std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %8s %8s %8s %8s\n", "class", "Pre", "Sen",
                  "F1", "F2", "Dice", "AP");
    out += buf;
    for (size_t c = 0; c < rep.per_class.size(); ++c) {
        const ClassMetrics& m = rep.per_class[c];
        std::snprintf(buf, sizeof(buf), "%-12s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f%s\n",
                      class_name(static_cast<int>(c)), m.pre, m.sen, m.f1, m.f2, m.dice,
                      m.ap.ap_pct, m.ap.defined ? "" : " (no ground truth)");
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "mAP %.2f over %d class(es); accuracy %.2f%s\n", rep.map_pct,
                  rep.map_classes, rep.accuracy_pct, rep.accuracy_defined ? "" : " (undefined)");
    out += buf;
    if (rep.mean_latency_s > 0) {
        std::snprintf(buf, sizeof(buf), "mean forward+decode latency %.6f s\n",
                      rep.mean_latency_s);
        out += buf;
    }
    return out;
}

// Machine-readable form: one "class metric value" line per metric.
inline std::string format_report_lines(const MetricsReport& rep) {
    std::string out;
    char buf[128];
    auto add = [&](const char* cls, const char* metric, double v) {
        std::snprintf(buf, sizeof(buf), "%s %s %.6f\n", cls, metric, v);
        out += buf;
    };
    for (size_t c = 0; c < rep.per_class.size(); ++c) {
        const ClassMetrics& m = rep.per_class[c];
        const char* cls = class_name(static_cast<int>(c));
        add(cls, "pre", m.pre);
        add(cls, "sen", m.sen);
        add(cls, "f1", m.f1);
        add(cls, "f2", m.f2);
        add(cls, "dice", m.dice);
        add(cls, "ap", m.ap.ap_pct);
    }
    add("overall", "map", rep.map_pct);
    add("overall", "accuracy", rep.accuracy_pct);
    add("overall", "mean_latency_s", rep.mean_latency_s);
    return out;
}

// ---------------------------------------------------------------------------
// Latency harness. Absolute times are hardware-specific; only orderings are
// asserted anywhere in the tests.

struct LatencyStats {
    double mean_s = 0;
    double min_s = 0;
    double max_s = 0;
    int samples = 0;
};

inline LatencyStats bench_latency(const Network& net, const std::vector<Tensor>& images,
                                  int repetitions, int boxes_per_cell, int num_classes,
                                  double conf_thresh = 0.25, int warmup = 2) {
    if (repetitions < 1) throw ConfigError("bench_latency: repetitions must be >= 1");
    if (images.empty()) throw ConfigError("bench_latency: need at least one image");

    volatile double sink = 0;  // keep the decode from being optimized out
    for (int i = 0; i < warmup; ++i) {
        Tensor out = net.predict(images[0]);
        auto dets = decode_grid(out, boxes_per_cell, num_classes, conf_thresh);
        sink = sink + static_cast<double>(dets.size());
    }

    LatencyStats stats;
    stats.min_s = std::numeric_limits<double>::infinity();
    double total = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (const Tensor& img : images) {
            const auto t0 = std::chrono::steady_clock::now();
            Tensor out = net.predict(img);
            auto dets = decode_grid(out, boxes_per_cell, num_classes, conf_thresh);
            const auto t1 = std::chrono::steady_clock::now();
            sink = sink + static_cast<double>(dets.size());
            const double dt = std::chrono::duration<double>(t1 - t0).count();
            total += dt;
            stats.min_s = std::min(stats.min_s, dt);
            stats.max_s = std::max(stats.max_s, dt);
            ++stats.samples;
        }
    }
    stats.mean_s = total / stats.samples;
    return stats;
}

}  // namespace roadhawk
