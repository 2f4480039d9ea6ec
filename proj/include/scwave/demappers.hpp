#pragma once

#include "scwave/common.hpp"
#include "scwave/rng.hpp"
#include "scwave/waveform.hpp"

namespace scwave {

// Per-bit logits Gamma = log(P(bit=1)/P(bit=0)), the inverse of the classical
// LLR ratio so they plug straight into sigmoid/BCE.
struct LlrBlock {
    int k_bits = 0;
    std::vector<double> llr;  // n_symbols * k_bits, row-major per symbol

    size_t n_symbols() const { return k_bits ? llr.size() / static_cast<size_t>(k_bits) : 0; }
    double& at(size_t n, int k) { return llr[n * static_cast<size_t>(k_bits) + static_cast<size_t>(k)]; }
    double at(size_t n, int k) const { return llr[n * static_cast<size_t>(k_bits) + static_cast<size_t>(k)]; }
};

struct LlrOptions {
    double clamp = 30.0;  // infinity disables clamping
};

// C(b, k): indices of constellation points whose k-th bit equals b.
std::vector<int> bit_subset(const Constellation& c, int bit, int value);

// Gaussian-noise-optimal demapper.
LlrBlock aod_llrs(const ComplexBuffer& r, const Constellation& c, double sigma_n2,
                  const LlrOptions& opt = {});

enum class PndVariant { Lpn, Hsnr };

// Phase-noise-aware demappers from the low-PN / high-SNR likelihood
// approximations; hypothesis-independent constants are dropped (they cancel
// in the subset ratio).
LlrBlock pnd_llrs(const ComplexBuffer& r, const Constellation& c, double sigma_n2, double sigma_p2,
                  PndVariant variant, const LlrOptions& opt = {});

// Fully-connected demapper, (Re, Im) in, K logits out, ReLU hidden layers.
// Weights are flattened per layer as [W (out x in, row-major) | b (out)].
struct NnDemapper {
    int k_bits = 0;
    std::vector<int> dims;  // e.g. {2, 64, 64, K}
    std::vector<double> weights;

    size_t weight_count() const;
    static size_t weight_count(const std::vector<int>& dims);
    static NnDemapper init(int k_bits, const std::vector<int>& hidden, RngStream& rng);
};

LlrBlock nn_demap(const ComplexBuffer& r, const NnDemapper& net, const LlrOptions& opt = {});

}  // namespace scwave
