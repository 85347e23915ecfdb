#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "roadhawk/data.hpp"

using namespace roadhawk;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("roadhawk_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

Sample gradient_sample(int h, int w) {
    Sample s;
    s.image = Tensor({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                s.image.at3(c, y, x) = (x + y * 0.5 + c * 3.0) / (w + h + 9.0);
    s.id = "gradient";
    return s;
}

}  // namespace

TEST_CASE("ppm round-trip is exact at 8-bit resolution", "[data]") {
    auto dir = temp_dir("ppm");
    Sample s = gradient_sample(13, 17);
    // Snap values to the 8-bit lattice so the round trip is exact.
    for (int64_t i = 0; i < s.image.numel(); ++i)
        s.image[i] = std::round(s.image[i] * 255.0) / 255.0;
    const std::string path = (dir / "img.ppm").string();
    write_ppm(path, s.image);
    Tensor back = read_ppm(path);
    REQUIRE(back.shape() == s.image.shape());
    for (int64_t i = 0; i < back.numel(); ++i)
        CHECK(back[i] == Catch::Approx(s.image[i]).margin(1e-12));
}

TEST_CASE("label line parse and validation", "[data]") {
    Annotation a = parse_annotation_line("0 0.5 0.5 0.2 0.1");
    CHECK(a.class_id == 0);
    CHECK(a.bbox.cx == 0.5);
    CHECK(a.bbox.w == 0.2);
    CHECK(a.bbox.h == 0.1);

    CHECK_THROWS_AS(parse_annotation_line("0 1.5 0.5 0.2 0.1"), IoError);   // cx out of range
    CHECK_THROWS_AS(parse_annotation_line("7 0.5 0.5 0.2 0.1"), IoError);   // bad class
    CHECK_THROWS_AS(parse_annotation_line("0 0.5 0.5 0 0.1"), IoError);     // zero width
    CHECK_THROWS_AS(parse_annotation_line("0 0.05 0.5 0.2 0.1"), IoError);  // spills off-image
    CHECK_THROWS_AS(parse_annotation_line("0 0.5 0.5"), IoError);           // truncated
}

TEST_CASE("load_dataset pairs images with labels and reports rejects", "[data]") {
    auto dir = temp_dir("load");
    Sample s = gradient_sample(16, 16);
    write_ppm((dir / "a.ppm").string(), s.image);
    write_text(dir / "a.txt", "0 0.5 0.5 0.2 0.1\n2 0.25 0.75 0.3 0.2\n");
    write_ppm((dir / "b.ppm").string(), s.image);
    write_text(dir / "b.txt", "");  // empty labels: valid, zero annotations
    write_ppm((dir / "c.ppm").string(), s.image);
    write_text(dir / "c.txt", "0 1.5 0.5 0.2 0.1\n");  // malformed
    write_ppm((dir / "d.ppm").string(), s.image);      // missing label file
    write_text(dir / "e.ppm", "P6 garbage");           // bad image
    write_text(dir / "e.txt", "");

    LoadResult r = load_dataset(dir.string());
    REQUIRE(r.samples.size() == 2);
    CHECK(r.samples[0].id == "a");
    CHECK(r.samples[0].annotations.size() == 2);
    CHECK(r.samples[1].id == "b");
    CHECK(r.samples[1].annotations.empty());
    CHECK(r.skipped.size() == 3);

    const std::string report = format_skip_report(r.skipped);
    CHECK(report.find("c.ppm") != std::string::npos);
    CHECK(report.find("missing label") != std::string::npos);
}

TEST_CASE("split is deterministic, disjoint and exhaustive", "[data]") {
    auto [train, val] = split_indices(1000, 0.8, 42);
    CHECK(train.size() == 800);
    CHECK(val.size() == 200);

    auto [train2, val2] = split_indices(1000, 0.8, 42);
    CHECK(train == train2);
    CHECK(val == val2);

    auto [t5, v5] = split_indices(5, 0.8, 1);
    CHECK(t5.size() == 4);
    CHECK(v5.size() == 1);

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 2 + rng.below(200);
        const double frac = rng.uniform(0.05, 0.95);
        auto [tr, va] = split_indices(n, frac, rng.next_u64());
        std::set<size_t> all(tr.begin(), tr.end());
        for (size_t i : va) all.insert(i);
        CHECK(all.size() == n);           // disjoint + exhaustive
        CHECK(tr.size() + va.size() == n);
        CHECK(tr.size() == static_cast<size_t>(std::llround(frac * n)));
    }

    CHECK_THROWS_AS(split_indices(1, 0.8, 0), ConfigError);
    CHECK_THROWS_AS(split_indices(10, 0.0, 0), ConfigError);
}

TEST_CASE("identity augmentation leaves the image unchanged", "[data]") {
    Sample s = gradient_sample(12, 12);
    AugmentConfig cfg{1.0, 1.0, 0.0};
    Rng rng(3);
    Sample out = augment(s, cfg, rng);
    for (int64_t i = 0; i < s.image.numel(); ++i)
        CHECK(out.image[i] == Catch::Approx(s.image[i]).margin(1e-6));
}

TEST_CASE("augmentation never touches annotations, shape, or range", "[data]") {
    Sample s = gradient_sample(10, 14);
    s.annotations.push_back({1, {0.5, 0.5, 0.25, 0.25}});
    s.annotations.push_back({2, {0.3, 0.6, 0.2, 0.4}});
    Rng rng(9);
    AugmentConfig cfg{1.5, 1.5, 0.1};
    for (int trial = 0; trial < 25; ++trial) {
        Sample out = augment(s, cfg, rng);
        REQUIRE(out.annotations.size() == s.annotations.size());
        for (size_t i = 0; i < out.annotations.size(); ++i) {
            CHECK(out.annotations[i].class_id == s.annotations[i].class_id);
            CHECK(out.annotations[i].bbox.cx == s.annotations[i].bbox.cx);
        }
        CHECK(out.image.shape() == s.image.shape());
        for (int64_t i = 0; i < out.image.numel(); ++i) {
            CHECK(out.image[i] >= 0.0);
            CHECK(out.image[i] <= 1.0);
        }
    }
}

TEST_CASE("hue shift keeps gray pixels gray", "[data]") {
    Sample s;
    s.image = Tensor({3, 4, 4}, 0.42);  // zero saturation everywhere
    AugmentConfig cfg{1.0, 1.0, 0.4};
    Rng rng(11);
    Sample out = augment(s, cfg, rng);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            CHECK(out.image.at3(0, y, x) == Catch::Approx(0.42).margin(1e-6));
            CHECK(out.image.at3(1, y, x) == Catch::Approx(out.image.at3(2, y, x)).margin(1e-6));
        }
}

TEST_CASE("rgb/hsv conversion round-trips", "[data]") {
    Rng rng(13);
    for (int i = 0; i < 2000; ++i) {
        const double r = rng.next_double(), g = rng.next_double(), b = rng.next_double();
        double h, s, v, r2, g2, b2;
        rgb_to_hsv(r, g, b, h, s, v);
        hsv_to_rgb(h, s, v, r2, g2, b2);
        CHECK(std::fabs(r - r2) < 1e-9);
        CHECK(std::fabs(g - g2) < 1e-9);
        CHECK(std::fabs(b - b2) < 1e-9);
    }
}

TEST_CASE("resize to the same size is the identity", "[data]") {
    Sample s = gradient_sample(16, 16);
    Sample out = resize(s, 16);
    for (int64_t i = 0; i < s.image.numel(); ++i) CHECK(out.image[i] == s.image[i]);
}

TEST_CASE("resize keeps constant images constant", "[data]") {
    Sample s;
    s.image = Tensor({3, 10, 10}, 0.37);
    for (int size : {8, 12, 20, 33}) {
        Sample out = resize(s, size);
        CHECK(out.image.dim(1) == size);
        for (int64_t i = 0; i < out.image.numel(); ++i)
            CHECK(out.image[i] == Catch::Approx(0.37).margin(1e-12));
    }
}

TEST_CASE("2x2 checkerboard upsamples with hand-computed bilinear weights", "[data]") {
    // Half-pixel-center sampling with border clamping: output pixel centers
    // map to source coords {-0.25, 0.25, 0.75, 1.25}, giving interpolation
    // weights {0, 0.25, 0.75, 1} against the two source rows/cols.
    Tensor img({1, 2, 2}, std::vector<double>{1, 0, 0, 1});
    Tensor out = resize_image(img, 4, 4);
    const double wx[4] = {0.0, 0.25, 0.75, 1.0};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const double top = 1 * (1 - wx[x]) + 0 * wx[x];
            const double bot = 0 * (1 - wx[x]) + 1 * wx[x];
            const double want = top * (1 - wx[y]) + bot * wx[y];
            CHECK(out.at3(0, y, x) == Catch::Approx(want).margin(1e-12));
        }
}

TEST_CASE("resize leaves normalized annotations alone", "[data]") {
    Sample s = gradient_sample(16, 16);
    s.annotations.push_back({0, {0.5, 0.5, 0.25, 0.25}});
    Sample out = resize(s, 32);
    REQUIRE(out.annotations.size() == 1);
    CHECK(out.annotations[0].bbox.cx == 0.5);
    CHECK_THROWS_AS(resize(s, 4), ConfigError);
}
