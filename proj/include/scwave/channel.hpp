#pragma once

#include "scwave/common.hpp"
#include "scwave/rng.hpp"
#include "scwave/waveform.hpp"

namespace scwave {

// sigma_n^2 = [ (Eb/N0)_lin * r * M * (N - Q*N_P) / (N + N_CP) ]^{-1}
double noise_variance(double ebn0_db, double code_rate, int m_oversampling, int n_block,
                      int q_groups, int n_ptrs, int n_cp);

// Oversampled-rate impairment state for one block.
struct ChannelRealization {
    RealBuffer pn_phase;  // Theta_tx + Theta_rx, radians, length = oversampled signal
    ComplexBuffer noise;  // CN(0, sigma_n^2) samples, same length
    double sigma_n2 = 0.0;
};

// Complex white Gaussian noise, per-component variance sigma_n2 / 2.
ComplexBuffer awgn(size_t n, double sigma_n2, RngStream& rng);

// r(n) = s(n) * exp(j*phase(n)) + noise(n)
ComplexBuffer apply_impairments(const ComplexBuffer& s, const ChannelRealization& real);

// Receive filtering and symbol-rate downsampling at the combined group delay.
// Returns the n_total symbol-rate samples (CP still attached).
ComplexBuffer receive_symbols(const ComplexBuffer& r_hat, const PulseFilter& g_rx,
                              int tx_filter_len, int n_total);

struct CompensationReport {
    std::vector<double> group_phase;  // Theta_bar_q, radians
    RealBuffer track;                 // interpolated estimate over the body
    bool skipped = false;             // Q < 1: compensation was a no-op
};

// Per-group average phase error from the PTRS samples, linearly interpolated
// across the body (constant beyond the outer group centers) and removed as
// body(n) * exp(-j*track(n)).
ComplexBuffer ptrs_compensate(const ComplexBuffer& body, const ComplexBuffer& pilots_tx,
                              const FrameLayout& layout, CompensationReport* report = nullptr);

// Residual-variance ML estimators on RPN pilots (u transmitted, v received).
std::pair<double, double> estimate_residual_lpn(const ComplexBuffer& u, const ComplexBuffer& v,
                                                double es);
std::pair<double, double> estimate_residual_hsnr(const ComplexBuffer& u, const ComplexBuffer& v,
                                                 double es);

// Convenience container for the symbol-rate outputs of one block.
struct ReceivedFrame {
    ComplexBuffer body;  // after CP removal and PTRS compensation
    CompensationReport comp;
    ComplexBuffer data;      // extracted per layout
    ComplexBuffer rpn_rx;    // compensated RPN pilots, group order
    ComplexBuffer rpn_tx;    // matching transmitted RPN pilots
};

ReceivedFrame receive_chain(const ComplexBuffer& r_hat, const PulseFilter& g_rx,
                            int tx_filter_len, const FrameConfig& cfg, const FrameLayout& layout);

}  // namespace scwave
