#pragma once

#include <optional>

#include "scwave/channel.hpp"
#include "scwave/demappers.hpp"
#include "scwave/phase_noise.hpp"
#include "scwave/waveform.hpp"

namespace scwave {

// (1/V) sum max(p_v / mean(p) - eps_p, 0) over raw instantaneous powers.
double papr_penalty(std::span<const double> power_samples, double eps_p_linear);

struct CcdfCurve {
    std::vector<double> nu_db;
    std::vector<double> ccdf;
    size_t n_samples = 0;
};

// Empirical CCDF of normalized power on a dB grid.
CcdfCurve papr_ccdf(std::span<const double> power_samples, double nu_min_db = 0.0,
                    double nu_max_db = 12.0, double step_db = 0.1);

// Smallest nu (dB) with Pr(p/mean > nu) <= delta_p; delta_p = 0 gives max/mean.
double papr_at(std::span<const double> power_samples, double delta_p);

struct StopbandForm {
    int length = 0;
    double beta = 0.0;
    int oversampling = 1;
    std::vector<double> phi;  // L x L, row-major, symmetric

    double at(int n, int m) const { return phi[static_cast<size_t>(n) * length + m]; }
};

StopbandForm stopband_matrix(int length, double beta, int oversampling);

// xi_S = g' Phi g for unit-energy taps; throws if outside [0, 1).
double stopband_energy(const RealBuffer& taps, const StopbandForm& form);

// ACLR_beta = 10 log10(xi_S / (1 - xi_S))
double aclr_beta_db(const RealBuffer& taps, const StopbandForm& form);
double aclr_beta_db(const PulseFilter& g, double beta);

// Welch PSD, Hann window, 50% overlap. Real input: one-sided (f, Sxx) pair.
struct WelchSpec {
    size_t segment = 4096;
    double overlap = 0.5;
};
std::pair<std::vector<double>, std::vector<double>> welch_psd_real(const RealBuffer& x, double fs,
                                                                   const WelchSpec& spec = {});
// Complex input: two-sided per-bin mean power, natural FFT bin order.
std::vector<double> welch_psd_complex(const ComplexBuffer& x, const WelchSpec& spec = {});

// Smallest symmetric band holding 99.9% of power, in symbol-rate units.
double obw_999_filter(const RealBuffer& taps, int oversampling);
double obw_999_samples(const ComplexBuffer& s, int oversampling, const WelchSpec& spec = {});

// Total binary cross entropy in bits: -(1/N) sum_n sum_k [b log2 s(G) + (1-b) log2(1-s(G))],
// computed in stable logit form. Bits are column-major (bit k of symbol n at n*K+k).
double bce_loss(const std::vector<uint8_t>& bits, const LlrBlock& llrs);

enum class DemapperKind { Aod, PndLpn, PndHsnr, Nnd };
DemapperKind demapper_from_name(const std::string& name);
std::string demapper_name(DemapperKind k);

struct LinkSetup {
    Constellation constellation;
    PulseFilter g_tx, g_rx;
    FrameConfig frame;
    double beta = 0.3;  // excess bandwidth for the ACLR report
    DemapperKind demapper = DemapperKind::Aod;
    std::optional<NnDemapper> nnd;
    double code_rate = 1.0;
    bool pn_enabled = false;
    PnModel pn_tx{"none", {}};
    PnModel pn_rx{"none", {}};
    double sample_rate = 1.0;  // Hz at the oversampled rate
    // true: demap with the exact sigma_n^2 (and measured sigma_p^2 when PN is
    // on); false: use the RPN-pilot estimators.
    bool true_variances = true;
    uint64_t seed = 1;
    int threads = 1;
    double llr_clamp = 30.0;
};

struct LinkPoint {
    double ebn0_db = 0.0;
    double ber = 0.0;
    double bler = 0.0;
    double se_bits_s_hz = 0.0;
    double papr_db_1e3 = 0.0;
    double aclr_db = 0.0;
    double obw = 0.0;
    size_t bits = 0, bit_errors = 0;
    size_t frames = 0, frame_errors = 0;
};

// Monte Carlo link sweep. BLER is the uncoded any-bit-error frame criterion
// standing in for a coded decoder behind this interface; SE deducts both PTRS
// and RPN pilots from the rate numerator and divides by the 99.9% occupied
// bandwidth.
std::vector<LinkPoint> evaluate_link(const LinkSetup& setup, std::span<const double> ebn0_grid,
                                     int n_frames);

}  // namespace scwave
