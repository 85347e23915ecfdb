#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "roadhawk/loss.hpp"
#include "roadhawk/model_zoo.hpp"

using namespace roadhawk;

namespace {

// Builds a prediction tensor that matches the targets on every masked term.
Tensor perfect_prediction(const TargetGrid& t) {
    const int depth = t.boxes_per_cell * 5 + t.num_classes;
    Tensor pred({t.g, t.g, depth});
    for (int cell = 0; cell < t.g * t.g; ++cell) {
        double* pc = pred.data() + static_cast<size_t>(cell) * depth;
        for (int j = 0; j < t.boxes_per_cell; ++j) {
            const SlotTarget& st = t.slot(cell, j);
            double* box = pc + j * 5;
            if (st.obj) {
                box[0] = st.a;
                box[1] = st.b;
                box[2] = st.w;
                box[3] = st.h;
                box[4] = 1.0;
            } else {
                box[2] = box[3] = 0.1;  // unused by the loss
                box[4] = 0.0;
            }
        }
        if (t.cell_class[cell] >= 0) pc[t.boxes_per_cell * 5 + t.cell_class[cell]] = 1.0;
    }
    return pred;
}

std::vector<Detection> neutral_slots(int g, int B) {
    std::vector<Detection> slots;
    for (int cell = 0; cell < g * g; ++cell)
        for (int j = 0; j < B; ++j) {
            Detection d;
            d.bbox = {(cell % g + 0.5) / g, (cell / g + 0.5) / g, (j + 1) * 0.2, (j + 1) * 0.2};
            d.cell = cell;
            d.slot = j;
            slots.push_back(d);
        }
    return slots;
}

}  // namespace

TEST_CASE("no truths leaves every mask clear", "[loss]") {
    TargetGrid t = assign_targets({}, 2, 2, 3, neutral_slots(2, 2));
    for (const auto& st : t.slots) CHECK_FALSE(st.obj);
    for (int c : t.cell_class) CHECK(c == -1);
}

TEST_CASE("truth center picks its containing cell", "[loss]") {
    BBox box{0.25, 0.25, 0.3, 0.3};
    TargetGrid t = assign_targets({{1, box}}, 2, 2, 3, neutral_slots(2, 2));
    CHECK(t.cell_class[0] == 1);
    CHECK((t.slot(0, 0).obj || t.slot(0, 1).obj));
    int responsible = 0;
    for (const auto& st : t.slots) responsible += st.obj ? 1 : 0;
    CHECK(responsible == 1);
}

TEST_CASE("responsible slot is the argmax-IoU slot", "[loss][oracle]") {
    Rng rng(15);
    const int g = 4, B = 2, C = 3;
    for (int trial = 0; trial < 40; ++trial) {
        // Random decoded slots.
        std::vector<Detection> slots;
        for (int cell = 0; cell < g * g; ++cell)
            for (int j = 0; j < B; ++j) {
                Detection d;
                d.bbox = {(cell % g + rng.next_double()) / g, (cell / g + rng.next_double()) / g,
                          rng.uniform(0.05, 0.6), rng.uniform(0.05, 0.6)};
                d.cell = cell;
                d.slot = j;
                slots.push_back(d);
            }
        // Three truths in distinct cells.
        std::vector<std::pair<int, BBox>> truths;
        for (int i = 0; i < 3; ++i) {
            BBox b{(2 * (i % 2) + rng.next_double()) / g, (2 * (i / 2) + rng.next_double()) / g,
                   rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)};
            truths.emplace_back(rng.uniform_int(0, C - 1), b);
        }
        TargetGrid t = assign_targets(truths, g, B, C, slots);

        for (const auto& [cls, box] : truths) {
            const int gx = std::min(static_cast<int>(box.cx * g), g - 1);
            const int gy = std::min(static_cast<int>(box.cy * g), g - 1);
            const int cell = gy * g + gx;
            // Exhaustive argmax over the cell's slots.
            int best = 0;
            double best_iou = -1;
            for (int j = 0; j < B; ++j) {
                const double v = iou(slots[cell * B + j].bbox, box);
                if (v > best_iou) {
                    best_iou = v;
                    best = j;
                }
            }
            CHECK(t.slot(cell, best).obj);
            CHECK(t.cell_class[cell] == cls);
        }
    }
}

TEST_CASE("same-cell collision keeps the first truth", "[loss]") {
    BBox first{0.2, 0.2, 0.2, 0.2};
    BBox second{0.3, 0.3, 0.4, 0.4};  // same cell for g=2
    TargetGrid t = assign_targets({{0, first}, {2, second}}, 2, 2, 3, neutral_slots(2, 2));
    CHECK(t.cell_class[0] == 0);
    CHECK(t.dropped_truths == 1);
    const SlotTarget* responsible = nullptr;
    for (int j = 0; j < 2; ++j)
        if (t.slot(0, j).obj) responsible = &t.slot(0, j);
    REQUIRE(responsible != nullptr);
    CHECK(responsible->w == first.w);
}

TEST_CASE("perfect prediction gives zero masked loss", "[loss]") {
    BBox box{0.6, 0.3, 0.25, 0.4};
    TargetGrid t = assign_targets({{2, box}}, 2, 2, 3, neutral_slots(2, 2));
    Tensor pred = perfect_prediction(t);
    LossBreakdown l = yolo_loss(pred, t);
    CHECK(l.coord_err == 0.0);
    CHECK(l.cls_err == 0.0);
    CHECK(l.total == 0.0);
    CHECK(l.total == l.coord_err + l.iou_err + l.cls_err);
}

TEST_CASE("half-cell center miss costs lambda/4", "[loss]") {
    BBox box{0.25, 0.25, 0.3, 0.3};
    TargetGrid t = assign_targets({{0, box}}, 2, 1, 1, neutral_slots(2, 1));
    Tensor pred = perfect_prediction(t);
    // Shift the responsible-x prediction by 0.5 cell units.
    int cell = 0;
    pred[static_cast<size_t>(cell) * 6 + 0] = t.slot(0, 0).a + 0.5;
    LossBreakdown l = yolo_loss(pred, t);
    CHECK(l.coord_err == Catch::Approx(5.0 * 0.25).margin(1e-12));
    CHECK(l.cls_err == 0.0);
    CHECK(l.iou_err == 0.0);
}

TEST_CASE("empty image with 0.5 confidences costs the noobj term", "[loss]") {
    const int g = 3, B = 2, C = 3;
    TargetGrid t = assign_targets({}, g, B, C, neutral_slots(g, B));
    Tensor pred({g, g, B * 5 + C});
    for (int cell = 0; cell < g * g; ++cell)
        for (int j = 0; j < B; ++j) pred[(static_cast<size_t>(cell) * (B * 5 + C)) + j * 5 + 4] = 0.5;
    LossBreakdown l = yolo_loss(pred, t);
    CHECK(l.total == Catch::Approx(0.5 * g * g * B * 0.25).margin(1e-12));
    CHECK(l.coord_err == 0.0);
    CHECK(l.cls_err == 0.0);
}

TEST_CASE("doubling lambda_coord doubles exactly the coord term", "[loss]") {
    Rng rng(6);
    const int g = 2, B = 2, C = 3;
    std::vector<std::pair<int, BBox>> truths = {{0, {0.3, 0.3, 0.2, 0.3}},
                                                {2, {0.8, 0.7, 0.3, 0.2}}};
    TargetGrid t = assign_targets(truths, g, B, C, neutral_slots(g, B));
    Tensor pred = testutil::random_tensor({g, g, B * 5 + C}, rng, 0.05, 0.95);
    LossBreakdown base = yolo_loss(pred, t, 5.0, 0.5);
    LossBreakdown twice = yolo_loss(pred, t, 10.0, 0.5);
    CHECK(twice.coord_err == 2.0 * base.coord_err);
    CHECK(twice.iou_err == base.iou_err);
    CHECK(twice.cls_err == base.cls_err);
}

TEST_CASE("loss ignores coordinates of non-responsible slots", "[loss]") {
    Rng rng(61);
    const int g = 2, B = 3, C = 2;
    TargetGrid t = assign_targets({{0, {0.3, 0.3, 0.2, 0.3}}}, g, B, C, neutral_slots(g, B));
    Tensor pred = testutil::random_tensor({g, g, B * 5 + C}, rng, 0.05, 0.95);
    LossBreakdown base = yolo_loss(pred, t);

    // Permute the two non-responsible slot blocks in the object cell.
    int obj_cell = 0;
    std::vector<int> free_slots;
    for (int j = 0; j < B; ++j)
        if (!t.slot(obj_cell, j).obj) free_slots.push_back(j);
    REQUIRE(free_slots.size() == 2);
    const int depth = B * 5 + C;
    double* pc = pred.data() + static_cast<size_t>(obj_cell) * depth;
    for (int k = 0; k < 5; ++k)
        std::swap(pc[free_slots[0] * 5 + k], pc[free_slots[1] * 5 + k]);

    LossBreakdown after = yolo_loss(pred, t);
    CHECK(after.total == base.total);
}

TEST_CASE("loss is non-negative and additive", "[loss]") {
    Rng rng(62);
    const int g = 2, B = 2, C = 3;
    TargetGrid t = assign_targets({{1, {0.6, 0.6, 0.2, 0.2}}}, g, B, C, neutral_slots(g, B));
    for (int trial = 0; trial < 50; ++trial) {
        Tensor pred = testutil::random_tensor({g, B == 2 ? g : g, B * 5 + C}, rng, 0.0, 1.0);
        LossBreakdown l = yolo_loss(pred, t);
        CHECK(l.total >= 0);
        CHECK(l.total == l.coord_err + l.iou_err + l.cls_err);
    }
}

TEST_CASE("negative sizes are clamped and flagged", "[loss]") {
    const int g = 1, B = 1, C = 1;
    TargetGrid t = assign_targets({{0, {0.5, 0.5, 0.4, 0.4}}}, g, B, C, neutral_slots(g, B));
    Tensor pred = perfect_prediction(t);
    pred[2] = -0.3;
    LossBreakdown l = yolo_loss(pred, t);
    CHECK(l.degenerate);
    CHECK(std::isfinite(l.total));
}

TEST_CASE("loss gradient matches finite differences on the raw grid", "[loss][oracle]") {
    Rng rng(63);
    const int g = 2, B = 2, C = 3;
    std::vector<std::pair<int, BBox>> truths = {{0, {0.3, 0.3, 0.2, 0.3}},
                                                {1, {0.8, 0.7, 0.3, 0.2}}};
    TargetGrid t = assign_targets(truths, g, B, C, neutral_slots(g, B));
    Tensor pred = testutil::random_tensor({g, g, B * 5 + C}, rng, 0.05, 0.95);

    Tensor grad = yolo_loss_grad(pred, t);
    auto f = [&] { return yolo_loss(pred, t).total; };
    double worst = 0;
    for (int64_t i = 0; i < pred.numel(); ++i)
        worst = std::max(worst, testutil::rel_err(grad[i], testutil::central_diff(f, &pred[i])));
    CHECK(worst < 1e-4);
}

TEST_CASE("full network loss gradient matches finite differences", "[loss][oracle]") {
    Rng rng(64);
    Network net = build_network(Variant::Improved, 2, 2, 32, 5, 2);
    Tensor image = testutil::random_tensor({3, 32, 32}, rng, 0, 1);
    std::vector<std::pair<int, BBox>> truths = {{1, {0.55, 0.45, 0.4, 0.35}}};

    Tensor out = net.forward(image);
    TargetGrid targets = assign_targets(truths, 1, 2, 2, decode_all_slots(out, 2, 2));

    net.zero_grads();
    net.backward(yolo_loss_grad(out, targets));

    auto loss = [&] { return yolo_loss(net.predict(image), targets).total; };
    Rng pick(65);
    double worst = 0;
    for (Param* p : net.params()) {
        for (int n = 0; n < 25; ++n) {
            const int64_t i = static_cast<int64_t>(pick.below(p->value.numel()));
            const double numeric = testutil::central_diff(loss, &p->value[i]);
            worst = std::max(worst, testutil::rel_err(p->grad[i], numeric));
        }
    }
    CHECK(worst < 1e-4);
}
