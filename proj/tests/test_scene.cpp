#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "roadhawk/scene.hpp"

using namespace roadhawk;

namespace {

SceneSpec straight_lane_scene() {
    SceneSpec spec;
    spec.lane = {{-5, 0}, {50, 0}};
    spec.lane_width = 0.3;
    spec.road_x0 = -6;
    spec.road_y0 = -4;
    spec.road_x1 = 55;
    spec.road_y1 = 4;
    spec.seed = 7;
    return spec;
}

DroneState hovering_at(double x, double y, double z, double heading = 0) {
    DroneState s;
    s.x = x;
    s.y = y;
    s.z = z;
    s.heading = heading;
    s.flying = true;
    return s;
}

bool pixel_is(const Tensor& img, int x, int y, const scene_detail::Rgb& c) {
    return img.at3(0, y, x) == c.r && img.at3(1, y, x) == c.g && img.at3(2, y, x) == c.b;
}

// Centroid (in normalized coords) of pixels that carry a given color.
bool color_centroid(const Tensor& img, const scene_detail::Rgb& c, double& cx, double& cy) {
    const int H = img.dim(1), W = img.dim(2);
    double sx = 0, sy = 0;
    int n = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (pixel_is(img, x, y, c)) {
                sx += x + 0.5;
                sy += y + 0.5;
                ++n;
            }
    if (n == 0) return false;
    cx = sx / n / W;
    cy = sy / n / H;
    return true;
}

}  // namespace

TEST_CASE("single pothole in view yields exactly one pothole annotation", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    spec.lane = {{-5, 100}, {50, 100}};  // lane far out of view
    spec.road_y1 = 101;
    spec.defects.push_back({SceneDefect::Kind::pothole, 2.5, 0.0, 0.6});

    CameraModel cam;
    Sample s = generate_scene(spec, cam, hovering_at(0, 0, 3));
    REQUIRE(s.annotations.size() == 1);
    CHECK(s.annotations[0].class_id == kClassPothole);
    CHECK(s.annotations[0].bbox.w > 0);

    double cx = 0, cy = 0;
    REQUIRE(color_centroid(s.image, scene_detail::kPothole, cx, cy));
    CHECK(s.annotations[0].bbox.contains(cx, cy));
}

TEST_CASE("centered drone sees the lane centered", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    CameraModel cam;
    Sample s = generate_scene(spec, cam, hovering_at(0, 0, 3));
    REQUIRE(s.annotations.size() == 1);
    CHECK(s.annotations[0].class_id == kClassYellowLane);
    CHECK(std::fabs(s.annotations[0].bbox.cx - 0.5) < 0.05);
}

TEST_CASE("camera pointed off the road yields a valid empty-annotation image", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    spec.lane = {{-5, 100}, {50, 100}};
    spec.road_y1 = 101;
    CameraModel cam;
    Sample s = generate_scene(spec, cam, hovering_at(0, -50, 3, -M_PI / 2));
    CHECK(s.annotations.empty());
    CHECK(s.image.all_finite());
}

TEST_CASE("rendering is deterministic", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    spec.defects.push_back({SceneDefect::Kind::pothole, 3.0, 0.8, 0.5});
    spec.defects.push_back({SceneDefect::Kind::crack, 2.0, -0.8, 0.8});
    spec.speckle = 0.03;
    CameraModel cam;
    Sample a = generate_scene(spec, cam, hovering_at(0.3, 0.2, 3));
    Sample b = generate_scene(spec, cam, hovering_at(0.3, 0.2, 3));
    REQUIRE(a.image.numel() == b.image.numel());
    for (int64_t i = 0; i < a.image.numel(); ++i) REQUIRE(a.image[i] == b.image[i]);
    REQUIRE(a.annotations.size() == b.annotations.size());
    for (size_t i = 0; i < a.annotations.size(); ++i) {
        CHECK(a.annotations[i].class_id == b.annotations[i].class_id);
        CHECK(a.annotations[i].bbox.cx == b.annotations[i].bbox.cx);
    }
}

TEST_CASE("annotation boxes contain the rendered defect centroid", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    spec.lane = {{-5, 100}, {50, 100}};
    spec.road_y1 = 101;
    CameraModel cam;

    SECTION("pothole") {
        spec.defects.push_back({SceneDefect::Kind::pothole, 2.2, 0.4, 0.5});
        Sample s = generate_scene(spec, cam, hovering_at(0, 0, 3));
        REQUIRE(s.annotations.size() == 1);
        double cx = 0, cy = 0;
        REQUIRE(color_centroid(s.image, scene_detail::kPothole, cx, cy));
        CHECK(s.annotations[0].bbox.contains(cx, cy));
    }

    SECTION("crack") {
        spec.defects.push_back({SceneDefect::Kind::crack, 2.2, 0.0, 0.9});
        Sample s = generate_scene(spec, cam, hovering_at(0, 0, 3));
        REQUIRE(s.annotations.size() == 1);
        CHECK(s.annotations[0].class_id == kClassCracks);
        double cx = 0, cy = 0;
        REQUIRE(color_centroid(s.image, scene_detail::kCrack, cx, cy));
        CHECK(s.annotations[0].bbox.contains(cx, cy));
    }
}

TEST_CASE("annotations stay inside the unit square", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    for (int i = 0; i < 6; ++i)
        spec.defects.push_back({i % 2 == 0 ? SceneDefect::Kind::pothole : SceneDefect::Kind::crack,
                                1.5 + i * 1.5, (i % 3 - 1) * 1.2, 0.5});
    CameraModel cam;
    Rng rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        DroneState d = hovering_at(rng.uniform(-2, 8), rng.uniform(-2, 2), rng.uniform(2, 5),
                                   rng.uniform(-0.5, 0.5));
        Sample s = generate_scene(spec, cam, d);
        for (const Annotation& a : s.annotations) {
            CHECK(a.bbox.cx >= 0.0);
            CHECK(a.bbox.cx <= 1.0);
            CHECK(a.bbox.w > 0.0);
            CHECK(a.bbox.w <= 1.0);
            CHECK(a.class_id >= 0);
            CHECK(a.class_id < kNumRoadClasses);
        }
    }
}

TEST_CASE("scene spec text round-trips", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    spec.defects.push_back({SceneDefect::Kind::pothole, 10.25, 0.5, 0.6});
    spec.defects.push_back({SceneDefect::Kind::crack, 20.125, -0.75, 1.1});
    spec.speckle = 0.02;
    SceneSpec back = parse_scene_spec(serialize_scene_spec(spec));
    CHECK(back.seed == spec.seed);
    CHECK(back.lane_width == spec.lane_width);
    CHECK(back.lane == spec.lane);
    CHECK(back.road_x1 == spec.road_x1);
    REQUIRE(back.defects.size() == 2);
    CHECK(back.defects[0].kind == SceneDefect::Kind::pothole);
    CHECK(back.defects[1].x == spec.defects[1].x);
    CHECK(back.speckle == spec.speckle);
}

TEST_CASE("scene validation rejects bad specs", "[scene]") {
    SceneSpec spec = straight_lane_scene();
    spec.lane = {{0, 0}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = straight_lane_scene();
    spec.defects.push_back({SceneDefect::Kind::pothole, 1000, 0, 0.5});
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = straight_lane_scene();
    spec.road_x1 = spec.road_x0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    CameraModel cam;
    cam.width = 4;
    CHECK_THROWS_AS(cam.validate(), ConfigError);
}
