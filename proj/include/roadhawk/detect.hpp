#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "roadhawk/common.hpp"
#include "roadhawk/tensor.hpp"

namespace roadhawk {

// Axis-aligned box, center + size, normalized to [0,1] image coordinates.
struct BBox {
    double cx = 0, cy = 0, w = 0, h = 0;

    double xmin() const { return cx - w / 2; }
    double xmax() const { return cx + w / 2; }
    double ymin() const { return cy - h / 2; }
    double ymax() const { return cy + h / 2; }
    double area() const { return w * h; }

    bool contains(double x, double y) const {
        return x >= xmin() && x <= xmax() && y >= ymin() && y <= ymax();
    }
};

inline double iou(const BBox& a, const BBox& b) {
    if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) return 0.0;
    const double ix = std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
    const double iy = std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
    if (ix <= 0 || iy <= 0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

struct Detection {
    BBox bbox;
    int class_id = 0;
    double confidence = 0;  // cs
    int cell = -1;          // decode provenance; -1 for hand-built detections
    int slot = -1;
};

inline void check_grid_tensor(const Tensor& pred, int boxes_per_cell, int num_classes) {
    if (pred.rank() != 3) throw ShapeError("grid tensor must be [g,g,B*5+C]");
    if (pred.dim(0) != pred.dim(1)) throw ShapeError("grid tensor must be square");
    if (pred.dim(2) != boxes_per_cell * 5 + num_classes)
        throw ShapeError("grid tensor depth does not match B*5+C");
}

// One candidate per (cell, slot), unthresholded, in cell scan order. Box
// centers are (cell index + predicted offset)/g; w,h are taken as normalized
// sizes and clamped into (0,1]; cs = box confidence * best class score.
inline std::vector<Detection> decode_all_slots(const Tensor& pred, int boxes_per_cell,
                                               int num_classes) {
    check_grid_tensor(pred, boxes_per_cell, num_classes);
    const int g = pred.dim(0);
    const int depth = pred.dim(2);
    std::vector<Detection> out;
    out.reserve(static_cast<size_t>(g) * g * boxes_per_cell);
    const double* p = pred.data();
    for (int gy = 0; gy < g; ++gy) {
        for (int gx = 0; gx < g; ++gx) {
            const double* cell = p + (static_cast<size_t>(gy) * g + gx) * depth;
            int best_class = 0;
            double best_score = cell[boxes_per_cell * 5];
            for (int c = 1; c < num_classes; ++c) {
                const double s = cell[boxes_per_cell * 5 + c];
                if (s > best_score) {
                    best_score = s;
                    best_class = c;
                }
            }
            for (int j = 0; j < boxes_per_cell; ++j) {
                const double* box = cell + j * 5;
                Detection d;
                d.bbox.cx = clamp01((gx + box[0]) / g);
                d.bbox.cy = clamp01((gy + box[1]) / g);
                d.bbox.w = std::clamp(box[2], 1e-9, 1.0);
                d.bbox.h = std::clamp(box[3], 1e-9, 1.0);
                d.class_id = best_class;
                d.confidence = box[4] * best_score;
                d.cell = gy * g + gx;
                d.slot = j;
                out.push_back(d);
            }
        }
    }
    return out;
}

inline std::vector<Detection> decode_grid(const Tensor& pred, int boxes_per_cell,
                                          int num_classes, double conf_thresh) {
    if (conf_thresh < 0 || conf_thresh > 1)
        throw ConfigError("conf_thresh must be in [0,1]");
    std::vector<Detection> all = decode_all_slots(pred, boxes_per_cell, num_classes);
    std::vector<Detection> kept;
    for (const Detection& d : all)
        if (d.confidence >= conf_thresh && d.confidence > 0) kept.push_back(d);
    return kept;
}

// Greedy per-class NMS. Output is sorted by confidence descending with ties
// broken by (class_id, input order) so results are bit-stable.
inline std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
    if (iou_thresh < 0 || iou_thresh > 1) throw ConfigError("iou_thresh must be in [0,1]");
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].confidence != dets[b].confidence)
            return dets[a].confidence > dets[b].confidence;
        return dets[a].class_id < dets[b].class_id;
    });
    std::vector<Detection> kept;
    for (size_t idx : order) {
        const Detection& d = dets[idx];
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id == d.class_id && iou(k.bbox, d.bbox) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

// Text form: one detection per line, "class_id cs cx cy w h", normalized,
// six significant digits.
inline std::string detections_to_text(const std::vector<Detection>& dets) {
    std::string out;
    char buf[160];
    for (const Detection& d : dets) {
        std::snprintf(buf, sizeof(buf), "%d %.6g %.6g %.6g %.6g %.6g\n", d.class_id,
                      d.confidence, d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h);
        out += buf;
    }
    return out;
}

inline std::vector<Detection> detections_from_text(const std::string& text) {
    std::vector<Detection> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Detection d;
        if (!(ls >> d.class_id >> d.confidence >> d.bbox.cx >> d.bbox.cy >> d.bbox.w >>
              d.bbox.h))
            throw IoError("malformed detection line: " + line);
        out.push_back(d);
    }
    return out;
}

}  // namespace roadhawk
