#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace scwave {

// All randomness in the project flows from one root seed through named
// substreams so that single components can be ablated or replayed without
// reshuffling the others. mt19937_64 output is fixed by the standard and the
// Gaussian transform below is our own, so sequences are identical across
// platforms and library versions.
class RngStream {
public:
    RngStream(uint64_t root_seed, std::string_view substream, uint64_t index = 0)
        : eng_(mix(root_seed, hash_name(substream), index)) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint8_t bit() { return static_cast<uint8_t>(eng_() >> 63); }

    // N(0,1) via Box-Muller on owned uniforms (std::normal_distribution is
    // implementation-defined and would break bit-exact reproducibility).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        auto [a, b] = gaussian_pair();
        spare_ = b;
        have_spare_ = true;
        return a;
    }

    std::pair<double, double> gaussian_pair() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

    static uint64_t hash_name(std::string_view s) {
        // FNV-1a 64
        uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<uint8_t>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static uint64_t mix(uint64_t seed, uint64_t name, uint64_t index) {
        return splitmix(splitmix(seed ^ name) + index);
    }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace scwave
