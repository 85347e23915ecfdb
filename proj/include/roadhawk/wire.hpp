#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <vector>

#include "roadhawk/data.hpp"
#include "roadhawk/drone.hpp"
#include "roadhawk/servo.hpp"

namespace roadhawk {

// Byte codecs for the bus payloads. Command and nav data are little-endian
// 64-bit reals per the wire contracts; decode returns nullopt on malformed
// input so nodes can drop and count bad envelopes.

namespace wire_detail {

inline void append_f64le(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((bits >> (8 * i)) & 0xff));
}

inline double read_f64le(const uint8_t* p) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void append_u32le(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

inline uint32_t read_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace wire_detail

// /cmd_vel: roll, pitch, yaw, vertical as four LE f64 (32 bytes).
inline std::vector<uint8_t> encode_cmd_vel(const ControlCommand& cmd) {
    std::vector<uint8_t> out;
    out.reserve(32);
    wire_detail::append_f64le(out, cmd.roll);
    wire_detail::append_f64le(out, cmd.pitch);
    wire_detail::append_f64le(out, cmd.yaw);
    wire_detail::append_f64le(out, cmd.vertical);
    return out;
}

inline std::optional<ControlCommand> decode_cmd_vel(const std::vector<uint8_t>& bytes) {
    if (bytes.size() != 32) return std::nullopt;
    ControlCommand cmd;
    cmd.roll = wire_detail::read_f64le(bytes.data());
    cmd.pitch = wire_detail::read_f64le(bytes.data() + 8);
    cmd.yaw = wire_detail::read_f64le(bytes.data() + 16);
    cmd.vertical = wire_detail::read_f64le(bytes.data() + 24);
    return cmd;
}

// /UAV/navdata: position (x,y,z), heading, velocities (lateral, forward,
// vertical) as seven LE f64 plus one flying byte (57 bytes).
inline std::vector<uint8_t> encode_navdata(const DroneState& s) {
    std::vector<uint8_t> out;
    out.reserve(57);
    wire_detail::append_f64le(out, s.x);
    wire_detail::append_f64le(out, s.y);
    wire_detail::append_f64le(out, s.z);
    wire_detail::append_f64le(out, s.heading);
    wire_detail::append_f64le(out, s.lateral_v);
    wire_detail::append_f64le(out, s.forward_v);
    wire_detail::append_f64le(out, s.vertical_v);
    out.push_back(s.flying ? 1 : 0);
    return out;
}

inline std::optional<DroneState> decode_navdata(const std::vector<uint8_t>& bytes) {
    if (bytes.size() != 57) return std::nullopt;
    DroneState s;
    s.x = wire_detail::read_f64le(bytes.data());
    s.y = wire_detail::read_f64le(bytes.data() + 8);
    s.z = wire_detail::read_f64le(bytes.data() + 16);
    s.heading = wire_detail::read_f64le(bytes.data() + 24);
    s.lateral_v = wire_detail::read_f64le(bytes.data() + 32);
    s.forward_v = wire_detail::read_f64le(bytes.data() + 40);
    s.vertical_v = wire_detail::read_f64le(bytes.data() + 48);
    s.flying = bytes[56] != 0;
    return s;
}

// /UAV/front/image_raw: u32 width, u32 height, u32 annotation count, the
// annotations (u8 class + 4 LE f64 box), then RGB8 pixels. The annotations
// are the renderer's ground truth, carried as simulation metadata for the
// oracle detector and ignored by the model detector.
struct ImageFrame {
    uint32_t width = 0;
    uint32_t height = 0;
    std::vector<Annotation> truths;
    std::vector<uint8_t> pixels;  // rgb8, row-major interleaved
};

inline ImageFrame sample_to_frame(const Sample& s) {
    ImageFrame f;
    f.height = static_cast<uint32_t>(s.image.dim(1));
    f.width = static_cast<uint32_t>(s.image.dim(2));
    f.truths = s.annotations;
    f.pixels.resize(static_cast<size_t>(f.width) * f.height * 3);
    for (uint32_t y = 0; y < f.height; ++y)
        for (uint32_t x = 0; x < f.width; ++x)
            for (int c = 0; c < 3; ++c)
                f.pixels[(static_cast<size_t>(y) * f.width + x) * 3 + c] =
                    static_cast<uint8_t>(std::lround(clamp01(s.image.at3(c, y, x)) * 255.0));
    return f;
}

inline Tensor frame_to_tensor(const ImageFrame& f) {
    Tensor t({3, static_cast<int>(f.height), static_cast<int>(f.width)});
    for (uint32_t y = 0; y < f.height; ++y)
        for (uint32_t x = 0; x < f.width; ++x)
            for (int c = 0; c < 3; ++c)
                t.at3(c, y, x) = f.pixels[(static_cast<size_t>(y) * f.width + x) * 3 + c] / 255.0;
    return t;
}

inline std::vector<uint8_t> encode_image_frame(const ImageFrame& f) {
    std::vector<uint8_t> out;
    out.reserve(12 + f.truths.size() * 33 + f.pixels.size());
    wire_detail::append_u32le(out, f.width);
    wire_detail::append_u32le(out, f.height);
    wire_detail::append_u32le(out, static_cast<uint32_t>(f.truths.size()));
    for (const Annotation& a : f.truths) {
        out.push_back(static_cast<uint8_t>(a.class_id));
        wire_detail::append_f64le(out, a.bbox.cx);
        wire_detail::append_f64le(out, a.bbox.cy);
        wire_detail::append_f64le(out, a.bbox.w);
        wire_detail::append_f64le(out, a.bbox.h);
    }
    out.insert(out.end(), f.pixels.begin(), f.pixels.end());
    return out;
}

inline std::optional<ImageFrame> decode_image_frame(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 12) return std::nullopt;
    ImageFrame f;
    f.width = wire_detail::read_u32le(bytes.data());
    f.height = wire_detail::read_u32le(bytes.data() + 4);
    const uint32_t n = wire_detail::read_u32le(bytes.data() + 8);
    size_t off = 12;
    if (f.width == 0 || f.height == 0 || f.width > 1 << 16 || f.height > 1 << 16)
        return std::nullopt;
    if (bytes.size() != 12 + static_cast<size_t>(n) * 33 +
                            static_cast<size_t>(f.width) * f.height * 3)
        return std::nullopt;
    for (uint32_t i = 0; i < n; ++i) {
        Annotation a;
        a.class_id = bytes[off];
        a.bbox.cx = wire_detail::read_f64le(bytes.data() + off + 1);
        a.bbox.cy = wire_detail::read_f64le(bytes.data() + off + 9);
        a.bbox.w = wire_detail::read_f64le(bytes.data() + off + 17);
        a.bbox.h = wire_detail::read_f64le(bytes.data() + off + 25);
        off += 33;
        f.truths.push_back(a);
    }
    f.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off), bytes.end());
    return f;
}

}  // namespace roadhawk
