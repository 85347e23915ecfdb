#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "roadhawk/detect.hpp"
#include "roadhawk/tensor.hpp"

namespace roadhawk {

// Per-slot regression target. The center (a,b) is cell-relative in [0,1);
// w,h are normalized image units. Target confidence is 1 for responsible
// slots and 0 everywhere else.
struct SlotTarget {
    bool obj = false;
    double a = 0, b = 0, w = 0, h = 0;
};

struct TargetGrid {
    int g = 0;
    int boxes_per_cell = 0;
    int num_classes = 0;
    std::vector<SlotTarget> slots;  // (gy*g+gx)*B + j
    std::vector<int> cell_class;    // g*g, -1 when the cell holds no object
    int dropped_truths = 0;         // truths discarded by same-cell collisions

    const SlotTarget& slot(int cell, int j) const {
        return slots[static_cast<size_t>(cell) * boxes_per_cell + j];
    }
};

// Maps each ground truth to the cell containing its center; the responsible
// slot is the one whose current decoded prediction has the highest IoU with
// the truth. A second truth landing in an occupied cell is dropped (first
// one wins) and counted in dropped_truths.
inline TargetGrid assign_targets(const std::vector<std::pair<int, BBox>>& truths, int g,
                                 int boxes_per_cell, int num_classes,
                                 const std::vector<Detection>& decoded_slots) {
    if (g < 1 || boxes_per_cell < 1 || num_classes < 1)
        throw ConfigError("assign_targets: bad grid parameters");
    if (decoded_slots.size() != static_cast<size_t>(g) * g * boxes_per_cell)
        throw ShapeError("assign_targets: decoded slot list must cover every (cell, slot)");

    TargetGrid t;
    t.g = g;
    t.boxes_per_cell = boxes_per_cell;
    t.num_classes = num_classes;
    t.slots.assign(static_cast<size_t>(g) * g * boxes_per_cell, SlotTarget{});
    t.cell_class.assign(static_cast<size_t>(g) * g, -1);

    for (const auto& [cls, box] : truths) {
        if (cls < 0 || cls >= num_classes) throw ConfigError("assign_targets: class out of range");
        if (!(box.w > 0) || !(box.h > 0)) throw ConfigError("assign_targets: degenerate truth box");
        const int gx = std::min(static_cast<int>(box.cx * g), g - 1);
        const int gy = std::min(static_cast<int>(box.cy * g), g - 1);
        const int cell = gy * g + gx;
        if (t.cell_class[cell] >= 0) {
            ++t.dropped_truths;
            continue;
        }
        t.cell_class[cell] = cls;

        int best_slot = 0;
        double best_iou = -1.0;
        for (int j = 0; j < boxes_per_cell; ++j) {
            const double v = iou(decoded_slots[static_cast<size_t>(cell) * boxes_per_cell + j].bbox, box);
            if (v > best_iou) {
                best_iou = v;
                best_slot = j;
            }
        }
        SlotTarget& st = t.slots[static_cast<size_t>(cell) * boxes_per_cell + best_slot];
        st.obj = true;
        st.a = box.cx * g - gx;
        st.b = box.cy * g - gy;
        st.w = box.w;
        st.h = box.h;
    }
    return t;
}

struct LossBreakdown {
    double coord_err = 0;
    double iou_err = 0;  // confidence term
    double cls_err = 0;
    double total = 0;
    bool degenerate = false;  // negative w/h clamped under the sqrt
};

inline constexpr double kLambdaCoord = 5.0;
inline constexpr double kLambdaNoObj = 0.5;

// Sum-square detection loss over the squashed grid tensor:
//   coord: lambda_coord * sum_obj [(x-a)^2+(y-b)^2] +
//          lambda_coord * sum_obj [(sqrt(w)-sqrt(w*))^2+(sqrt(h)-sqrt(h*))^2]
//   conf:  sum_obj (c-1)^2 + lambda_noobj * sum_noobj c^2
//   class: per object cell, sum_c (R(c)-onehot)^2
inline LossBreakdown yolo_loss(const Tensor& pred, const TargetGrid& t,
                               double lambda_coord = kLambdaCoord,
                               double lambda_noobj = kLambdaNoObj) {
    check_grid_tensor(pred, t.boxes_per_cell, t.num_classes);
    if (pred.dim(0) != t.g) throw ShapeError("yolo_loss: grid size mismatch");

    const int g = t.g, B = t.boxes_per_cell, C = t.num_classes;
    const int depth = B * 5 + C;
    const double* p = pred.data();
    LossBreakdown out;

    for (int cell = 0; cell < g * g; ++cell) {
        const double* pc = p + static_cast<size_t>(cell) * depth;
        for (int j = 0; j < B; ++j) {
            const double* box = pc + j * 5;
            const SlotTarget& st = t.slot(cell, j);
            if (st.obj) {
                const double dx = box[0] - st.a;
                const double dy = box[1] - st.b;
                out.coord_err += lambda_coord * (dx * dx + dy * dy);
                double pw = box[2], ph = box[3];
                if (pw < 0 || ph < 0) {
                    out.degenerate = true;
                    pw = std::max(pw, 0.0);
                    ph = std::max(ph, 0.0);
                }
                const double dw = std::sqrt(pw) - std::sqrt(st.w);
                const double dh = std::sqrt(ph) - std::sqrt(st.h);
                out.coord_err += lambda_coord * (dw * dw + dh * dh);
                const double dc = box[4] - 1.0;
                out.iou_err += dc * dc;
            } else {
                out.iou_err += lambda_noobj * box[4] * box[4];
            }
        }
        const int cls = t.cell_class[cell];
        if (cls >= 0) {
            for (int c = 0; c < C; ++c) {
                const double target = c == cls ? 1.0 : 0.0;
                const double d = pc[B * 5 + c] - target;
                out.cls_err += d * d;
            }
        }
    }
    out.total = out.coord_err + out.iou_err + out.cls_err;
    return out;
}

// dL/dpred for yolo_loss with the targets held fixed.
inline Tensor yolo_loss_grad(const Tensor& pred, const TargetGrid& t,
                             double lambda_coord = kLambdaCoord,
                             double lambda_noobj = kLambdaNoObj) {
    check_grid_tensor(pred, t.boxes_per_cell, t.num_classes);
    if (pred.dim(0) != t.g) throw ShapeError("yolo_loss_grad: grid size mismatch");

    const int g = t.g, B = t.boxes_per_cell, C = t.num_classes;
    const int depth = B * 5 + C;
    const double* p = pred.data();
    Tensor grad = Tensor::zeros_like(pred);
    double* gp = grad.data();

    for (int cell = 0; cell < g * g; ++cell) {
        const double* pc = p + static_cast<size_t>(cell) * depth;
        double* gc = gp + static_cast<size_t>(cell) * depth;
        for (int j = 0; j < B; ++j) {
            const double* box = pc + j * 5;
            double* gbox = gc + j * 5;
            const SlotTarget& st = t.slot(cell, j);
            if (st.obj) {
                gbox[0] = 2.0 * lambda_coord * (box[0] - st.a);
                gbox[1] = 2.0 * lambda_coord * (box[1] - st.b);
                if (box[2] > 0)
                    gbox[2] = lambda_coord * (std::sqrt(box[2]) - std::sqrt(st.w)) /
                              std::sqrt(box[2]);
                if (box[3] > 0)
                    gbox[3] = lambda_coord * (std::sqrt(box[3]) - std::sqrt(st.h)) /
                              std::sqrt(box[3]);
                gbox[4] = 2.0 * (box[4] - 1.0);
            } else {
                gbox[4] = 2.0 * lambda_noobj * box[4];
            }
        }
        const int cls = t.cell_class[cell];
        if (cls >= 0) {
            for (int c = 0; c < C; ++c) {
                const double target = c == cls ? 1.0 : 0.0;
                gc[B * 5 + c] = 2.0 * (pc[B * 5 + c] - target);
            }
        }
    }
    return grad;
}

// Per-iteration loss log line: "iter coord iou cls total".
inline std::string loss_log_line(int iter, const LossBreakdown& l) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d %.9g %.9g %.9g %.9g", iter, l.coord_err, l.iou_err,
                  l.cls_err, l.total);
    return buf;
}

}  // namespace roadhawk
