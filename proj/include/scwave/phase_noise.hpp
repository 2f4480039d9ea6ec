#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "scwave/common.hpp"

namespace scwave {

// Multi pole-zero PSD, linear-domain formula with carrier scaling:
//   S(f) = PSD0 * prod(1 + (f/f_z)^a_z) / prod(1 + (f/f_p)^a_p),
//   dBc/Hz value = 10*log10(S) + 20*log10(f_c / f_ref).
struct PoleZeroPsd {
    struct Term {
        double freq;   // Hz
        double alpha;  // exponent
    };
    double psd0 = 0.0;  // linear power at f = 0
    std::vector<Term> zeros;
    std::vector<Term> poles;
    double f_ref = 1.0;  // Hz, reference carrier of the measurement
    double f_c = 1.0;    // Hz, operating carrier
};

double eval_pole_zero(const PoleZeroPsd& m, double f);  // dBc/Hz, f >= 0

// Composite log-domain model: below the loop bandwidth the reference clock and
// PLL contributions apply, above it the VCO contributions. Components sum in
// linear power. Per component,
//   S_dB(f) = PSD0_dB + 10*log10(1 + (f/f_z)^k) - 10*log10(1 + f^k),
//   PSD0_dB = FOM + 20*log10(f_c) - 10*log10(POW / 1 mW).
struct CompositeComponent {
    double fom_db = 0.0;
    double f_z = 0.0;  // Hz; infinity removes the zero term
    double pow_mw = 1.0;
    double k = 1.0;
};

struct CompositeLogPsd {
    CompositeComponent ref, pll, vco2, vco3;
    double lbw = 1.0;  // Hz
    double f_c = 1.0;  // Hz
};

double composite_component_db(const CompositeComponent& c, double f_c, double f);
double eval_composite(const CompositeLogPsd& m, double f);  // dBc/Hz, f > 0

// Table presets (Tx: TI LMX2595 fit measured at 20 GHz; Rx: TR 38.803 UE model 1).
PoleZeroPsd tx_lmx2595(double f_c);
CompositeLogPsd rx_ue_38803(double f_c);

struct PnModel {
    std::string name;  // "none", "tx-lmx2595", "rx-ue1"
    std::variant<std::monostate, PoleZeroPsd, CompositeLogPsd> model;

    bool enabled() const { return !std::holds_alternative<std::monostate>(model); }
    double eval_dbchz(double f) const;
};

PnModel make_pn_model(const std::string& name, double f_c);

struct PnGenSpec {
    double sample_rate = 1.0;  // Hz (M x symbol rate)
    size_t n_samples = 0;
    uint64_t seed = 0;
};

// One-sided PSD sampled on the synthesis FFT grid: bin k holds the linear
// PSD at k*fs/nfft for k = 0..nfft/2, with the DC bin forced to zero (the
// absolute phase reference is unobservable).
std::vector<double> sample_psd_grid(const std::function<double(double)>& psd_dbchz, double fs,
                                    size_t nfft);
std::vector<double> sample_psd_grid(const PnModel& model, double fs, size_t nfft);

// Filtered-Gaussian synthesis: Hermitian-symmetric spectrum of white Gaussian
// samples scaled so the one-sided periodogram of the output converges to the
// given PSD; inverse transform gives the real phase sequence in radians.
RealBuffer generate_pn(std::span<const double> psd_onesided_linear, const PnGenSpec& spec);

// Convenience: sample the model on a grid sized for spec.n_samples and synthesize.
RealBuffer generate_pn(const PnModel& model, const PnGenSpec& spec);

}  // namespace scwave
