#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "roadhawk/nn.hpp"

namespace roadhawk {

enum class Variant { Default, Improved };

inline const char* variant_name(Variant v) {
    return v == Variant::Default ? "default" : "improved";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "default") return Variant::Default;
    if (s == "improved") return Variant::Improved;
    throw ConfigError("unknown variant: " + s);
}

enum class LayerKind { conv, maxpool, detect_head };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int filters = 0;  // conv and detect_head
    int kernel = 0;
    int stride = 1;
    int pad = 0;
    Activation activation = Activation::linear;

    bool operator==(const LayerSpec&) const = default;
};

// Total spatial downsampling of the canonical layer plans.
inline constexpr int kDownsample = 32;
inline constexpr int kImageChannels = 3;

struct NetworkConfig {
    Variant variant = Variant::Default;
    std::vector<LayerSpec> layers;
    int num_classes = 0;
    int boxes_per_cell = 0;
    int grid_size = 0;
    int input_size = 0;

    bool operator==(const NetworkConfig&) const = default;

    int head_depth() const { return boxes_per_cell * 5 + num_classes; }

    void validate() const {
        if (num_classes < 1 || boxes_per_cell < 1)
            throw ConfigError("network config: need num_classes >= 1 and boxes_per_cell >= 1");
        if (input_size <= 0 || input_size % kDownsample != 0)
            throw ConfigError("network config: input_size must be a positive multiple of 32");
        if (layers.empty() || layers.back().kind != LayerKind::detect_head)
            throw ConfigError("network config: detect_head must be the terminal layer");

        int convs = 0, pools = 0, heads = 0;
        int size = input_size;
        for (const LayerSpec& l : layers) {
            switch (l.kind) {
                case LayerKind::conv:
                    ++convs;
                    if (l.activation == Activation::linear)
                        throw ConfigError("hidden conv layers use leaky or mish");
                    size = (size + 2 * l.pad - l.kernel) / l.stride + 1;
                    break;
                case LayerKind::maxpool:
                    ++pools;
                    size = (size + l.pad - l.kernel) / l.stride + 1;
                    break;
                case LayerKind::detect_head:
                    ++heads;
                    if (l.activation != Activation::linear)
                        throw ConfigError("detect head conv is linear");
                    if (l.filters != head_depth())
                        throw ConfigError("detect head depth must equal B*5+C");
                    size = (size + 2 * l.pad - l.kernel) / l.stride + 1;
                    break;
            }
        }
        if (heads != 1) throw ConfigError("exactly one detect_head required");
        const int want_convs = variant == Variant::Default ? 7 : 9;
        if (convs != want_convs || pools != 6)
            throw ConfigError("layer counts do not match variant");
        const Activation want_act =
            variant == Variant::Default ? Activation::leaky : Activation::mish;
        for (const LayerSpec& l : layers)
            if (l.kind == LayerKind::conv && l.activation != want_act)
                throw ConfigError("hidden activations do not match variant");
        if (size != grid_size || grid_size != input_size / kDownsample)
            throw ConfigError("grid size inconsistent with layer plan");
    }
};

// Canonical layer plans. The default is the seven-conv / six-pool tiny
// detector; filters double per stage from base_filters (16 gives the full
// 16..1024 plan). Pools 1-5 halve the resolution; pool 6 is stride 1 with
// edge padding so total downsampling stays 32. The improved variant swaps
// every hidden activation for mish and inserts two extra 3x3 convs before
// the head. base_filters < 16 gives the same topology at desk scale.
inline NetworkConfig make_network_config(Variant variant, int num_classes, int boxes_per_cell,
                                         int input_size, int base_filters = 16) {
    if (base_filters < 1) throw ConfigError("base_filters must be >= 1");
    NetworkConfig cfg;
    cfg.variant = variant;
    cfg.num_classes = num_classes;
    cfg.boxes_per_cell = boxes_per_cell;
    cfg.input_size = input_size;
    cfg.grid_size = input_size / kDownsample;

    const Activation act = variant == Variant::Default ? Activation::leaky : Activation::mish;
    auto conv = [&](int filters) {
        cfg.layers.push_back({LayerKind::conv, filters, 3, 1, 1, act});
    };
    auto pool = [&](int stride, int pad) {
        cfg.layers.push_back({LayerKind::maxpool, 0, 2, stride, pad, Activation::linear});
    };

    int f = base_filters;
    for (int stage = 0; stage < 6; ++stage) {
        conv(f);
        pool(stage < 5 ? 2 : 1, stage < 5 ? 0 : 1);
        if (stage < 5) f *= 2;
    }
    conv(f * 2);  // 64x base
    if (variant == Variant::Improved) {
        conv(f);      // 32x base
        conv(f * 2);  // 64x base
    }
    cfg.layers.push_back(
        {LayerKind::detect_head, cfg.head_depth(), 1, 1, 0, Activation::linear});

    cfg.validate();
    return cfg;
}

// Instantiates a network from a config with seeded uniform initialization,
// s = sqrt(2/fan_in) per layer, biases zero.
inline Network build_network(const NetworkConfig& cfg, uint64_t seed) {
    cfg.validate();
    Network net;
    Rng rng(seed);
    int channels = kImageChannels;
    for (const LayerSpec& l : cfg.layers) {
        switch (l.kind) {
            case LayerKind::conv: {
                auto layer = std::make_unique<Conv2dLayer>(channels, l.filters, l.kernel,
                                                           l.stride, l.pad, l.activation);
                layer->init_weights(rng);
                channels = l.filters;
                net.add(std::move(layer));
                break;
            }
            case LayerKind::maxpool:
                net.add(std::make_unique<MaxPoolLayer>(l.kernel, l.stride, l.pad));
                break;
            case LayerKind::detect_head: {
                auto layer = std::make_unique<DetectHeadLayer>(channels, cfg.boxes_per_cell,
                                                               cfg.num_classes);
                layer->init_weights(rng);
                net.add(std::move(layer));
                break;
            }
        }
    }
    net.set_expected_input({kImageChannels, cfg.input_size, cfg.input_size});
    return net;
}

inline Network build_network(Variant variant, int num_classes, int boxes_per_cell,
                             int input_size, uint64_t seed, int base_filters = 16) {
    return build_network(
        make_network_config(variant, num_classes, boxes_per_cell, input_size, base_filters),
        seed);
}

// ---------------------------------------------------------------------------
// Plain-text config format: top-level key=value lines plus ordered [layer]
// blocks. Round-trips losslessly.

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::detect_head: return "detect_head";
    }
    return "conv";
}

inline LayerKind parse_layer_kind(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "maxpool") return LayerKind::maxpool;
    if (s == "detect_head") return LayerKind::detect_head;
    throw ConfigError("unknown layer kind: " + s);
}

inline Activation parse_activation(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "leaky") return Activation::leaky;
    if (s == "mish") return Activation::mish;
    throw ConfigError("unknown activation: " + s);
}

inline std::string serialize_network_config(const NetworkConfig& cfg) {
    std::ostringstream out;
    out << "variant=" << variant_name(cfg.variant) << "\n";
    out << "num_classes=" << cfg.num_classes << "\n";
    out << "boxes_per_cell=" << cfg.boxes_per_cell << "\n";
    out << "grid_size=" << cfg.grid_size << "\n";
    out << "input_size=" << cfg.input_size << "\n";
    for (const LayerSpec& l : cfg.layers) {
        out << "\n[layer]\n";
        out << "kind=" << layer_kind_name(l.kind) << "\n";
        out << "filters=" << l.filters << "\n";
        out << "kernel=" << l.kernel << "\n";
        out << "stride=" << l.stride << "\n";
        out << "pad=" << l.pad << "\n";
        out << "activation=" << activation_name(l.activation) << "\n";
    }
    return out.str();
}

inline NetworkConfig parse_network_config(const std::string& text) {
    NetworkConfig cfg;
    LayerSpec* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        std::string line = detail::trim_ws(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line == "[layer]") {
            cfg.layers.emplace_back();
            current = &cfg.layers.back();
            continue;
        }
        std::string key, value;
        if (!detail::split_kv(line, key, value))
            throw ConfigError("network config: bad line: " + raw);
        if (current) {
            if (key == "kind") current->kind = parse_layer_kind(value);
            else if (key == "filters") current->filters = std::stoi(value);
            else if (key == "kernel") current->kernel = std::stoi(value);
            else if (key == "stride") current->stride = std::stoi(value);
            else if (key == "pad") current->pad = std::stoi(value);
            else if (key == "activation") current->activation = parse_activation(value);
            else throw ConfigError("network config: unknown layer key: " + key);
        } else {
            if (key == "variant") cfg.variant = parse_variant(value);
            else if (key == "num_classes") cfg.num_classes = std::stoi(value);
            else if (key == "boxes_per_cell") cfg.boxes_per_cell = std::stoi(value);
            else if (key == "grid_size") cfg.grid_size = std::stoi(value);
            else if (key == "input_size") cfg.input_size = std::stoi(value);
            else throw ConfigError("network config: unknown key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace roadhawk
