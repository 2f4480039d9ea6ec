#pragma once

#include <cstdint>

#include "scwave/common.hpp"

namespace scwave {

// points[i] is the point whose bit label is the binary value i, MSB first
// (bit k of a symbol contributes 2^(K-1-k)).
struct Constellation {
    int k_bits = 0;
    ComplexBuffer points;

    size_t size() const { return points.size(); }
};

// Zero-mean / unit-power projection of raw weights; throws on a degenerate
// (all-identical) input.
Constellation normalize_constellation(const ComplexBuffer& raw);

// Gray-labelled square QAM for K in {2,4,6}.
Constellation init_qam(int k);

// 8+16+20+20 APSK with a ring-major quasi-Gray labelling (see waveform.cpp).
Constellation init_apsk64();

struct PulseFilter {
    int span_symbols = 0;
    int oversampling = 1;
    RealBuffer taps;  // length span*oversampling + 1, unit energy

    int length() const { return static_cast<int>(taps.size()); }
    int group_delay() const { return (length() - 1) / 2; }
};

PulseFilter init_rrc(double beta, int span_symbols, int oversampling);

// Normalizes arbitrary taps to unit energy (used for learned filters).
PulseFilter make_filter(RealBuffer taps, int span_symbols, int oversampling);

// bits are column-major: bit (k, n) at bits[n*K + k]; output has bits.size()/K symbols.
ComplexBuffer map_bits(const std::vector<uint8_t>& bits, const Constellation& c);

// Constant-modulus Zadoff-Chu sequence; root must be coprime with length.
ComplexBuffer zadoff_chu(int length, int root);

struct FrameConfig {
    int k_bits = 2;
    int n_total = 0;   // N: full block length at symbol rate, CP included
    int n_cp = 0;      // N_CP
    int q_groups = 0;  // Q
    int n_ptrs = 0;    // N_P per group
    int n_rpn = 0;     // N_R per group
    int oversampling = 1;
    int zc_root = 1;

    int n_body() const { return n_total - n_cp; }
    int n_pilots() const { return q_groups * (n_ptrs + n_rpn); }
    int n_data() const { return n_body() - n_pilots(); }
    void validate() const;
};

// Index maps for one block. All group/data indices are body-relative
// (body = frame with the CP removed); the CP occupies frame [0, n_cp).
struct FrameLayout {
    int n_total = 0;
    int n_cp = 0;
    int n_ptrs = 0;
    int n_rpn = 0;
    std::vector<int> group_start;        // body index of each group's first PTRS sample
    std::vector<double> group_center;    // PTRS-part center, interpolation abscissa
    std::vector<int> data_body_index;    // body position of data symbol j
    std::vector<int> body_source;        // body[i] = src[body_source[i]], src = [data | pilots]
    std::vector<int> frame_from_body;    // frame[i] = body[frame_from_body[i]]

    int n_body() const { return n_total - n_cp; }
    int n_data() const { return static_cast<int>(data_body_index.size()); }
    std::vector<int> ptrs_body_indices(int q) const;
    std::vector<int> rpn_body_indices(int q) const;
};

FrameLayout make_layout(const FrameConfig& cfg);

// The full Q*(N_P+N_R) pilot sequence (one ZC split across groups, PTRS part
// first then RPN part within each group).
ComplexBuffer pilot_sequence(const FrameConfig& cfg);

// CP-extended symbol-rate block: Q pilot groups evenly interleaved with near-equal
// data runs, CP = copy of the last n_cp body symbols prepended.
std::pair<ComplexBuffer, FrameLayout> assemble_frame(const ComplexBuffer& data,
                                                     const FrameConfig& cfg);

// Upsample by M and filter with g_tx; length M*N + L - 1.
ComplexBuffer pulse_shape(const ComplexBuffer& frame, const PulseFilter& g_tx);

uint32_t gray_code(uint32_t v);
uint32_t gray_decode(uint32_t g);

}  // namespace scwave
