#pragma once

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "roadhawk/nn.hpp"

namespace roadhawk {

// Weights file: magic "RHWT", u32 format version, u32 parameterized-layer
// count, then per layer the bias values followed by the weight values as
// little-endian 64-bit floats, in network declaration order. Round-trips
// bit-exactly.

inline constexpr char kWeightsMagic[4] = {'R', 'H', 'W', 'T'};
inline constexpr uint32_t kWeightsVersion = 1;

namespace detail {

inline void put_u32le(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("weights file truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void put_f64le(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("weights file truncated");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void save_weights(std::ostream& out, Network& net) {
    const std::vector<Param*> params = net.params();
    out.write(kWeightsMagic, 4);
    detail::put_u32le(out, kWeightsVersion);
    detail::put_u32le(out, static_cast<uint32_t>(params.size() / 2));
    // params() yields bias then weights for each parameterized layer.
    for (const Param* p : params)
        for (int64_t i = 0; i < p->value.numel(); ++i) detail::put_f64le(out, p->value[i]);
    if (!out) throw IoError("failed to write weights");
}

inline void load_weights(std::istream& in, Network& net) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0)
        throw IoError("not a RHWT weights file");
    const uint32_t version = detail::get_u32le(in);
    if (version != kWeightsVersion)
        throw IoError("unsupported weights version " + std::to_string(version));
    const std::vector<Param*> params = net.params();
    const uint32_t layers = detail::get_u32le(in);
    if (layers != params.size() / 2)
        throw IoError("weights file layer count does not match network");
    for (Param* p : params)
        for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = detail::get_f64le(in);
    in.peek();
    if (!in.eof()) throw IoError("trailing bytes in weights file");
}

inline void save_weights(const std::string& path, Network& net) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    save_weights(f, net);
}

inline void load_weights(const std::string& path, Network& net) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for read: " + path);
    load_weights(f, net);
}

}  // namespace roadhawk
