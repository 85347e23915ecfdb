#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "roadhawk/common.hpp"
#include "roadhawk/detect.hpp"
#include "roadhawk/rng.hpp"
#include "roadhawk/tensor.hpp"

namespace roadhawk {

struct Annotation {
    int class_id = 0;  // 0 cracks, 1 pothole, 2 yellowlane
    BBox bbox;         // normalized
};

struct Sample {
    Tensor image;  // [3,H,W], values in [0,1]
    std::vector<Annotation> annotations;
    std::string id;
};

struct AugmentConfig {
    double saturation = 1.5;  // max jitter factor, >= 1
    double exposure = 1.5;    // max jitter factor, >= 1
    double hue = 0.1;         // max shift in turns, in [0, 0.5]

    void validate() const {
        if (saturation < 1.0 || exposure < 1.0)
            throw ConfigError("saturation/exposure jitter factors must be >= 1");
        if (hue < 0.0 || hue > 0.5) throw ConfigError("hue shift must be in [0, 0.5] turns");
    }
};

// ---------------------------------------------------------------------------
// PPM (P6, 8-bit) image container.

inline void write_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("write_ppm: image must be [3,H,W]");
    const int H = image.dim(1), W = image.dim(2);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "P6\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = clamp01(image.at3(c, y, x));
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw IoError("failed writing " + path);
}

inline Tensor read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for read: " + path);
    auto next_token = [&]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = f.get()) != EOF) {
            if (ch == '#') {  // comment to end of line
                while ((ch = f.get()) != EOF && ch != '\n') {}
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        return tok;
    };
    auto next_int = [&]() -> int {
        const std::string tok = next_token();
        try {
            size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size()) throw IoError("bad ppm header field: " + path);
            return v;
        } catch (const std::exception&) {
            throw IoError("bad ppm header field: " + path);
        }
    };
    if (next_token() != "P6") throw IoError("not a P6 ppm: " + path);
    const int W = next_int();
    const int H = next_int();
    const int maxval = next_int();
    if (W <= 0 || H <= 0 || maxval != 255) throw IoError("unsupported ppm header: " + path);
    std::vector<unsigned char> buf(static_cast<size_t>(W) * H * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("truncated ppm: " + path);
    Tensor image({3, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                image.at3(c, y, x) = buf[(static_cast<size_t>(y) * W + x) * 3 + c] / 255.0;
    return image;
}

// ---------------------------------------------------------------------------
// Label lines: "class cx cy w h", normalized.

inline std::string annotation_line(const Annotation& a) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f", a.class_id, a.bbox.cx, a.bbox.cy,
                  a.bbox.w, a.bbox.h);
    return buf;
}

// Parses and validates one label line; throws IoError on malformed input.
inline Annotation parse_annotation_line(const std::string& line) {
    std::istringstream in(line);
    Annotation a;
    if (!(in >> a.class_id >> a.bbox.cx >> a.bbox.cy >> a.bbox.w >> a.bbox.h))
        throw IoError("malformed label line: " + line);
    std::string extra;
    if (in >> extra) throw IoError("trailing fields in label line: " + line);
    if (a.class_id < 0 || a.class_id >= kNumRoadClasses)
        throw IoError("class out of range: " + line);
    const BBox& b = a.bbox;
    if (!(b.cx >= 0 && b.cx <= 1 && b.cy >= 0 && b.cy <= 1))
        throw IoError("box center out of bounds: " + line);
    if (!(b.w > 0 && b.w <= 1 && b.h > 0 && b.h <= 1))
        throw IoError("box size out of bounds: " + line);
    const double eps = 1e-6;
    if (b.xmin() < -eps || b.xmax() > 1 + eps || b.ymin() < -eps || b.ymax() > 1 + eps)
        throw IoError("box extends outside the image: " + line);
    return a;
}

struct SkippedFile {
    std::string path;
    std::string reason;
};

struct LoadResult {
    std::vector<Sample> samples;
    std::vector<SkippedFile> skipped;
};

inline std::string format_skip_report(const std::vector<SkippedFile>& skipped) {
    std::string out;
    for (const SkippedFile& s : skipped) out += s.path + ": " + s.reason + "\n";
    return out;
}

// Loads every .ppm in the directory with its sibling .txt labels, in sorted
// order. Bad images or labels reject the whole sample into the skip report.
inline LoadResult load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> images;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            images.push_back(entry.path().string());
    std::sort(images.begin(), images.end());

    LoadResult out;
    for (const std::string& img_path : images) {
        const std::string label_path = fs::path(img_path).replace_extension(".txt").string();
        Sample s;
        s.id = fs::path(img_path).stem().string();
        try {
            s.image = read_ppm(img_path);
        } catch (const IoError& e) {
            out.skipped.push_back({img_path, e.what()});
            continue;
        }
        std::ifstream labels(label_path);
        if (!labels) {
            out.skipped.push_back({img_path, "missing label file " + label_path});
            continue;
        }
        bool bad = false;
        std::string line;
        while (std::getline(labels, line)) {
            if (detail::trim_ws(line).empty()) continue;
            try {
                s.annotations.push_back(parse_annotation_line(line));
            } catch (const IoError& e) {
                out.skipped.push_back({img_path, e.what()});
                bad = true;
                break;
            }
        }
        if (!bad) out.samples.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic 80/20-style split.

inline std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n,
                                                                         double train_fraction,
                                                                         uint64_t seed) {
    if (n < 2) throw ConfigError("split needs at least 2 samples");
    if (!(train_fraction > 0 && train_fraction < 1))
        throw ConfigError("train fraction must be in (0,1)");
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    const size_t n_train = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(n)));
    std::vector<size_t> train(idx.begin(), idx.begin() + n_train);
    std::vector<size_t> val(idx.begin() + n_train, idx.end());
    return {train, val};
}

inline std::pair<std::vector<Sample>, std::vector<Sample>> split(std::vector<Sample> samples,
                                                                 double train_fraction,
                                                                 uint64_t seed) {
    auto [train_idx, val_idx] = split_indices(samples.size(), train_fraction, seed);
    std::pair<std::vector<Sample>, std::vector<Sample>> out;
    for (size_t i : train_idx) out.first.push_back(samples[i]);
    for (size_t i : val_idx) out.second.push_back(samples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// HSV color jitter. Hue is in turns [0,1); saturation/value in [0,1].

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx <= 0 ? 0 : d / mx;
    if (d <= 0) {
        h = 0;
        return;
    }
    if (mx == r) h = (g - b) / d;
    else if (mx == g) h = 2.0 + (b - r) / d;
    else h = 4.0 + (r - g) / d;
    h /= 6.0;
    if (h < 0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    if (s <= 0) {
        r = g = b = v;
        return;
    }
    h = h - std::floor(h);
    const double x = h * 6.0;
    const int i = std::min(5, static_cast<int>(x));
    const double f = x - i;
    const double p = v * (1 - s);
    const double q = v * (1 - s * f);
    const double t = v * (1 - s * (1 - f));
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

// Color-only augmentation: saturation and value each scale by a factor drawn
// uniformly from [1/f, f]; hue shifts by a uniform amount with wraparound.
// Draw order is saturation, exposure, hue. Annotations pass through.
inline Sample augment(const Sample& sample, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    const double sat_scale = rng.uniform(1.0 / cfg.saturation, cfg.saturation);
    const double val_scale = rng.uniform(1.0 / cfg.exposure, cfg.exposure);
    const double hue_shift = rng.uniform(-cfg.hue, cfg.hue);

    Sample out = sample;
    const int H = sample.image.dim(1), W = sample.image.dim(2);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double h, s, v, r, g, b;
            rgb_to_hsv(sample.image.at3(0, y, x), sample.image.at3(1, y, x),
                       sample.image.at3(2, y, x), h, s, v);
            s = std::min(1.0, s * sat_scale);
            v = std::min(1.0, v * val_scale);
            h += hue_shift;
            hsv_to_rgb(h, s, v, r, g, b);
            out.image.at3(0, y, x) = clamp01(r);
            out.image.at3(1, y, x) = clamp01(g);
            out.image.at3(2, y, x) = clamp01(b);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bilinear resize to size x size (half-pixel-center convention, clamped at
// the borders). Normalized annotations are unchanged.

inline Tensor resize_image(const Tensor& image, int out_h, int out_w) {
    if (image.rank() != 3) throw ShapeError("resize: image must be [C,H,W]");
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    if (out_h == H && out_w == W) return image;
    Tensor out({C, out_h, out_w});
    const double sy = static_cast<double>(H) / out_h;
    const double sx = static_cast<double>(W) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        const int y1 = std::clamp(y0 + 1, 0, H - 1);
        y0 = std::clamp(y0, 0, H - 1);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            const int x1 = std::clamp(x0 + 1, 0, W - 1);
            x0 = std::clamp(x0, 0, W - 1);
            for (int c = 0; c < C; ++c) {
                const double top = image.at3(c, y0, x0) * (1 - wx) + image.at3(c, y0, x1) * wx;
                const double bot = image.at3(c, y1, x0) * (1 - wx) + image.at3(c, y1, x1) * wx;
                out.at3(c, y, x) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

inline Sample resize(const Sample& sample, int size) {
    if (size < 8) throw ConfigError("resize: size must be >= 8");
    Sample out = sample;
    out.image = resize_image(sample.image, size, size);
    return out;
}

}  // namespace roadhawk
