#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace roadhawk {

// Deterministic, platform-independent RNG (splitmix64). std::uniform_*
// distributions are implementation-defined, so everything that must be
// reproducible draws through this type instead.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    // Independent stream derived from (seed, stream_id); used to key
    // per-sample / per-iteration randomness so parallel order cannot
    // change results.
    static Rng stream(uint64_t seed, uint64_t stream_id) {
        Rng mixer(seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
        mixer.next_u64();
        return Rng(mixer.next_u64());
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer on [0, n).
    uint64_t below(uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// FNV-1a, used to derive per-sample RNG streams from string ids.
inline uint64_t hash64(const char* data, size_t n) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace roadhawk
