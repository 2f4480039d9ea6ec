#include "scwave/phase_noise.hpp"

#include <limits>

#include "scwave/dsp.hpp"
#include "scwave/rng.hpp"

namespace scwave {

double eval_pole_zero(const PoleZeroPsd& m, double f) {
    require(f >= 0.0, "eval_pole_zero: negative frequency");
    require(m.psd0 > 0.0, "eval_pole_zero: PSD0 must be positive");
    require(m.zeros.size() == m.poles.size(), "eval_pole_zero: zero/pole lists differ in length");
    double num = 1.0, den = 1.0;
    for (const auto& z : m.zeros) num *= 1.0 + std::pow(f / z.freq, z.alpha);
    for (const auto& p : m.poles) den *= 1.0 + std::pow(f / p.freq, p.alpha);
    return 10.0 * std::log10(m.psd0 * num / den) + 20.0 * std::log10(m.f_c / m.f_ref);
}

double composite_component_db(const CompositeComponent& c, double f_c, double f) {
    const double psd0_db = c.fom_db + 20.0 * std::log10(f_c) - 10.0 * std::log10(c.pow_mw);
    double zero_db = 0.0;
    if (std::isfinite(c.f_z)) zero_db = 10.0 * std::log10(1.0 + std::pow(f / c.f_z, c.k));
    const double pole_db = 10.0 * std::log10(1.0 + std::pow(f, c.k));
    return psd0_db + zero_db - pole_db;
}

double eval_composite(const CompositeLogPsd& m, double f) {
    require(f > 0.0, "eval_composite: log-domain model undefined at DC");
    require(m.lbw > 0.0, "eval_composite: loop bandwidth must be positive");
    double a_db, b_db;
    if (f <= m.lbw) {
        a_db = composite_component_db(m.ref, m.f_c, f);
        b_db = composite_component_db(m.pll, m.f_c, f);
    } else {
        a_db = composite_component_db(m.vco2, m.f_c, f);
        b_db = composite_component_db(m.vco3, m.f_c, f);
    }
    return lin_to_db(db_to_lin(a_db) + db_to_lin(b_db));
}

PoleZeroPsd tx_lmx2595(double f_c) {
    PoleZeroPsd m;
    m.psd0 = 6.3096e-8;
    m.zeros = {{3e-6, 1.4}, {1.75e7, 2.55}};
    m.poles = {{10.0, 1.0}, {3.0e5, 2.95}};
    m.f_ref = 20e9;
    m.f_c = f_c;
    return m;
}

CompositeLogPsd rx_ue_38803(double f_c) {
    const double inf = std::numeric_limits<double>::infinity();
    CompositeLogPsd m;
    m.ref = {-215.0, inf, 10.0, 2.0};
    m.pll = {-240.0, 1.0e4, 20.0, 1.0};
    m.vco2 = {-175.0, 50.3e6, 20.0, 2.0};
    m.vco3 = {-130.0, inf, 20.0, 3.0};
    m.lbw = 187e3;
    m.f_c = f_c;
    return m;
}

double PnModel::eval_dbchz(double f) const {
    if (const auto* pz = std::get_if<PoleZeroPsd>(&model)) return eval_pole_zero(*pz, f);
    if (const auto* cl = std::get_if<CompositeLogPsd>(&model)) return eval_composite(*cl, f);
    throw std::runtime_error("PnModel: eval on disabled model");
}

PnModel make_pn_model(const std::string& name, double f_c) {
    if (name == "none" || name.empty()) return PnModel{"none", std::monostate{}};
    if (name == "tx-lmx2595") return PnModel{name, tx_lmx2595(f_c)};
    if (name == "rx-ue1") return PnModel{name, rx_ue_38803(f_c)};
    throw std::invalid_argument("unknown phase-noise model: " + name);
}

std::vector<double> sample_psd_grid(const std::function<double(double)>& psd_dbchz, double fs,
                                    size_t nfft) {
    require(fs > 0.0 && nfft >= 2 && is_pow2(nfft), "sample_psd_grid: need pow2 nfft and fs > 0");
    std::vector<double> grid(nfft / 2 + 1, 0.0);
    for (size_t k = 1; k < grid.size(); ++k)
        grid[k] = db_to_lin(psd_dbchz(static_cast<double>(k) * fs / static_cast<double>(nfft)));
    return grid;
}

std::vector<double> sample_psd_grid(const PnModel& model, double fs, size_t nfft) {
    if (!model.enabled()) return std::vector<double>(nfft / 2 + 1, 0.0);
    return sample_psd_grid([&](double f) { return model.eval_dbchz(f); }, fs, nfft);
}

RealBuffer generate_pn(std::span<const double> psd_onesided_linear, const PnGenSpec& spec) {
    require(spec.n_samples >= 2, "generate_pn: need at least 2 samples");
    require(spec.sample_rate > 0.0, "generate_pn: sample rate must be positive");
    const size_t nfft = (psd_onesided_linear.size() - 1) * 2;
    require(is_pow2(nfft) && nfft >= spec.n_samples, "generate_pn: PSD grid too small for n_samples");

    // Hermitian spectrum with E|X_k|^2 = S1(f_k) * fs / 2 under the unitary
    // inverse transform; this makes E[x^2] = sum S1(f_k) df, the Riemann sum
    // of the one-sided PSD, and the averaged periodogram converge to S1.
    RngStream rng(spec.seed, "pn");
    ComplexBuffer spec_bins(nfft, Complex{0.0, 0.0});
    const double fs = spec.sample_rate;
    for (size_t k = 1; k < nfft / 2; ++k) {
        const double sd = std::sqrt(psd_onesided_linear[k] * fs / 2.0);
        auto [a, b] = rng.gaussian_pair();
        const Complex z = sd * Complex{a, b} * M_SQRT1_2;
        spec_bins[k] = z;
        spec_bins[nfft - k] = std::conj(z);
    }
    {
        // real Nyquist bin
        const double sd = std::sqrt(psd_onesided_linear[nfft / 2] * fs / 2.0);
        spec_bins[nfft / 2] = Complex{sd * rng.gaussian(), 0.0};
    }
    ComplexBuffer x = idft(spec_bins);
    RealBuffer out(spec.n_samples);
    for (size_t i = 0; i < spec.n_samples; ++i) out[i] = x[i].real();
    check_finite(out, "generate_pn");
    return out;
}

RealBuffer generate_pn(const PnModel& model, const PnGenSpec& spec) {
    const size_t nfft = next_pow2(std::max<size_t>(spec.n_samples, 2));
    return generate_pn(sample_psd_grid(model, spec.sample_rate, nfft), spec);
}

}  // namespace scwave
