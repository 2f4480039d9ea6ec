#include "scwave/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "scwave/dsp.hpp"

namespace scwave {

double papr_penalty(std::span<const double> power_samples, double eps_p_linear) {
    require(!power_samples.empty(), "papr_penalty: no samples");
    require(eps_p_linear > 0.0, "papr_penalty: eps_P must be positive");
    double mean = 0.0;
    for (double p : power_samples) mean += p;
    mean /= static_cast<double>(power_samples.size());
    require(mean > 0.0, "papr_penalty: zero mean power");
    double acc = 0.0;
    for (double p : power_samples) acc += std::max(p / mean - eps_p_linear, 0.0);
    return acc / static_cast<double>(power_samples.size());
}

namespace {
std::vector<double> normalized_sorted_desc(std::span<const double> power_samples) {
    double mean = 0.0;
    for (double p : power_samples) mean += p;
    mean /= static_cast<double>(power_samples.size());
    require(mean > 0.0, "papr: zero mean power");
    std::vector<double> norm(power_samples.begin(), power_samples.end());
    for (double& p : norm) p /= mean;
    std::sort(norm.begin(), norm.end(), std::greater<>());
    return norm;
}
}  // namespace

CcdfCurve papr_ccdf(std::span<const double> power_samples, double nu_min_db, double nu_max_db,
                    double step_db) {
    require(!power_samples.empty(), "papr_ccdf: no samples");
    auto norm = normalized_sorted_desc(power_samples);  // descending
    CcdfCurve out;
    out.n_samples = norm.size();
    for (double nu = nu_min_db; nu <= nu_max_db + 1e-12; nu += step_db) {
        const double thr = db_to_lin(nu);
        // count of samples > thr in a descending array
        const auto it = std::lower_bound(norm.begin(), norm.end(), thr, std::greater<>());
        const size_t count = static_cast<size_t>(it - norm.begin());
        out.nu_db.push_back(nu);
        out.ccdf.push_back(static_cast<double>(count) / static_cast<double>(norm.size()));
    }
    return out;
}

double papr_at(std::span<const double> power_samples, double delta_p) {
    require(!power_samples.empty(), "papr_at: no samples");
    require(delta_p >= 0.0 && delta_p < 1.0, "papr_at: delta_p must be in [0, 1)");
    auto norm = normalized_sorted_desc(power_samples);
    const size_t k = static_cast<size_t>(delta_p * static_cast<double>(norm.size()));
    return lin_to_db(norm[std::min(k, norm.size() - 1)]);
}

namespace {
double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x); }
}  // namespace

StopbandForm stopband_matrix(int length, double beta, int oversampling) {
    require(length >= 1 && oversampling >= 1 && beta >= 0.0, "stopband_matrix: bad parameters");
    StopbandForm f;
    f.length = length;
    f.beta = beta;
    f.oversampling = oversampling;
    f.phi.resize(static_cast<size_t>(length) * length);
    const double a = (1.0 + beta) / oversampling;
    for (int n = 0; n < length; ++n) {
        for (int m = 0; m < length; ++m) {
            f.phi[static_cast<size_t>(n) * length + m] =
                (n == m) ? 1.0 - a : -a * sinc(a * (n - m));
        }
    }
    return f;
}

double stopband_energy(const RealBuffer& taps, const StopbandForm& form) {
    require(static_cast<int>(taps.size()) == form.length, "stopband_energy: tap count mismatch");
    double energy = 0.0;
    for (double v : taps) energy += v * v;
    require(std::fabs(energy - 1.0) < 1e-6, "stopband_energy: taps must have unit energy");
    double xs = 0.0;
    for (int n = 0; n < form.length; ++n) {
        double row = 0.0;
        const double* pr = form.phi.data() + static_cast<size_t>(n) * form.length;
        for (int m = 0; m < form.length; ++m) row += pr[m] * taps[static_cast<size_t>(m)];
        xs += taps[static_cast<size_t>(n)] * row;
    }
    if (!(xs >= 0.0 && xs < 1.0))
        throw std::runtime_error("stopband_energy: xi_S outside [0, 1), inconsistent input");
    return xs;
}

double aclr_beta_db(const RealBuffer& taps, const StopbandForm& form) {
    const double xs = stopband_energy(taps, form);
    return lin_to_db(xs / (1.0 - xs));
}

double aclr_beta_db(const PulseFilter& g, double beta) {
    return aclr_beta_db(g.taps, stopband_matrix(g.length(), beta, g.oversampling));
}

namespace {

std::vector<double> hann(size_t n) {
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * double(i) / double(n)));
    return w;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> welch_psd_real(const RealBuffer& x, double fs,
                                                                   const WelchSpec& spec) {
    const size_t seg = spec.segment;
    require(is_pow2(seg) && x.size() >= seg, "welch_psd_real: need pow2 segment <= signal length");
    const size_t hop = std::max<size_t>(1, static_cast<size_t>(double(seg) * (1.0 - spec.overlap)));
    auto w = hann(seg);
    double wsum2 = 0.0;
    for (double v : w) wsum2 += v * v;
    std::vector<double> acc(seg / 2 + 1, 0.0);
    size_t nseg = 0;
    ComplexBuffer buf(seg);
    for (size_t s = 0; s + seg <= x.size(); s += hop, ++nseg) {
        for (size_t i = 0; i < seg; ++i) buf[i] = Complex{x[s + i] * w[i], 0.0};
        auto X = dft(buf);
        for (size_t k = 0; k <= seg / 2; ++k)
            acc[k] += 2.0 * double(seg) * std::norm(X[k]) / (fs * wsum2);
    }
    for (double& v : acc) v /= double(nseg);
    std::vector<double> freq(seg / 2 + 1);
    for (size_t k = 0; k <= seg / 2; ++k) freq[k] = double(k) * fs / double(seg);
    return {std::move(freq), std::move(acc)};
}

std::vector<double> welch_psd_complex(const ComplexBuffer& x, const WelchSpec& spec) {
    const size_t seg = spec.segment;
    require(is_pow2(seg) && x.size() >= seg, "welch_psd_complex: need pow2 segment <= signal length");
    const size_t hop = std::max<size_t>(1, static_cast<size_t>(double(seg) * (1.0 - spec.overlap)));
    auto w = hann(seg);
    double wsum2 = 0.0;
    for (double v : w) wsum2 += v * v;
    std::vector<double> acc(seg, 0.0);
    size_t nseg = 0;
    ComplexBuffer buf(seg);
    for (size_t s = 0; s + seg <= x.size(); s += hop, ++nseg) {
        for (size_t i = 0; i < seg; ++i) buf[i] = x[s + i] * w[i];
        auto X = dft(buf);
        for (size_t k = 0; k < seg; ++k) acc[k] += double(seg) * std::norm(X[k]) / wsum2;
    }
    for (double& v : acc) v /= double(nseg);
    return acc;
}

namespace {

// Smallest symmetric band holding `fraction` of the two-sided per-bin powers
// (natural FFT order). Returns the one-sided edge in bins.
size_t symmetric_band_bins(const std::vector<double>& power, double fraction) {
    const size_t n = power.size();
    double total = 0.0;
    for (double p : power) total += p;
    double acc = power[0];
    size_t edge = 0;
    while (acc < fraction * total && edge < n / 2) {
        ++edge;
        acc += power[edge];
        if (edge < n - edge) acc += power[n - edge];
    }
    return edge;
}

}  // namespace

double obw_999_filter(const RealBuffer& taps, int oversampling) {
    require(!taps.empty(), "obw: empty taps");
    const size_t nfft = std::max<size_t>(8192, next_pow2(taps.size() * 4));
    ComplexBuffer padded(nfft, Complex{0.0, 0.0});
    for (size_t i = 0; i < taps.size(); ++i) padded[i] = Complex{taps[i], 0.0};
    auto X = dft(padded);
    std::vector<double> power(nfft);
    for (size_t k = 0; k < nfft; ++k) power[k] = std::norm(X[k]);
    const size_t edge = symmetric_band_bins(power, 0.999);
    // two-sided width in cycles/sample, scaled to symbol-rate units
    return (2.0 * double(edge) + 1.0) / double(nfft) * oversampling;
}

double obw_999_samples(const ComplexBuffer& s, int oversampling, const WelchSpec& spec) {
    auto power = welch_psd_complex(s, spec);
    const size_t edge = symmetric_band_bins(power, 0.999);
    return (2.0 * double(edge) + 1.0) / double(power.size()) * oversampling;
}

double bce_loss(const std::vector<uint8_t>& bits, const LlrBlock& llrs) {
    require(bits.size() == llrs.llr.size(), "bce_loss: shape mismatch");
    require(llrs.k_bits > 0 && llrs.n_symbols() > 0, "bce_loss: empty block");
    double acc = 0.0;
    for (size_t i = 0; i < bits.size(); ++i) {
        const double g = llrs.llr[i];
        // -log p(correct) = softplus(g) - b*g, in nats
        const double softplus = std::max(g, 0.0) + std::log1p(std::exp(-std::fabs(g)));
        acc += softplus - (bits[i] ? g : 0.0);
    }
    return acc / (std::log(2.0) * static_cast<double>(llrs.n_symbols()));
}

DemapperKind demapper_from_name(const std::string& name) {
    if (name == "aod") return DemapperKind::Aod;
    if (name == "pnd-lpn") return DemapperKind::PndLpn;
    if (name == "pnd-hsnr") return DemapperKind::PndHsnr;
    if (name == "nnd") return DemapperKind::Nnd;
    throw std::invalid_argument("unknown demapper: " + name);
}

std::string demapper_name(DemapperKind k) {
    switch (k) {
        case DemapperKind::Aod: return "aod";
        case DemapperKind::PndLpn: return "pnd-lpn";
        case DemapperKind::PndHsnr: return "pnd-hsnr";
        case DemapperKind::Nnd: return "nnd";
    }
    return "?";
}

namespace {

struct FrameOutcome {
    size_t bit_errors = 0;
    size_t bits = 0;
    bool frame_error = false;
};

FrameOutcome run_one_frame(const LinkSetup& setup, const FrameLayout& layout, double sigma_n2,
                           uint64_t frame_index) {
    const FrameConfig& fc = setup.frame;
    const int k = setup.constellation.k_bits;
    const size_t nd = static_cast<size_t>(fc.n_data());

    RngStream bit_rng(setup.seed, "bits", frame_index);
    std::vector<uint8_t> bits(nd * static_cast<size_t>(k));
    for (auto& b : bits) b = bit_rng.bit();

    auto data = map_bits(bits, setup.constellation);
    auto [frame, lay_unused] = assemble_frame(data, fc);
    auto shaped = pulse_shape(frame, setup.g_tx);

    ChannelRealization real;
    real.sigma_n2 = sigma_n2;
    if (setup.pn_enabled && (setup.pn_tx.enabled() || setup.pn_rx.enabled())) {
        real.pn_phase.assign(shaped.size(), 0.0);
        if (setup.pn_tx.enabled()) {
            auto tx = generate_pn(setup.pn_tx,
                                  PnGenSpec{setup.sample_rate, shaped.size(),
                                            RngStream(setup.seed, "pn_tx", frame_index).next_u64()});
            for (size_t i = 0; i < shaped.size(); ++i) real.pn_phase[i] += tx[i];
        }
        if (setup.pn_rx.enabled()) {
            auto rx = generate_pn(setup.pn_rx,
                                  PnGenSpec{setup.sample_rate, shaped.size(),
                                            RngStream(setup.seed, "pn_rx", frame_index).next_u64()});
            for (size_t i = 0; i < shaped.size(); ++i) real.pn_phase[i] += rx[i];
        }
    }
    if (sigma_n2 > 0.0) {
        RngStream noise_rng(setup.seed, "awgn", frame_index);
        real.noise = awgn(shaped.size(), sigma_n2, noise_rng);
    }

    auto rhat = apply_impairments(shaped, real);
    auto rec = receive_chain(rhat, setup.g_rx, setup.g_tx.length(), fc, layout);

    // residual-variance inputs for the PN-aware demappers
    double sn2 = sigma_n2, sp2 = 0.0;
    const bool pnd = setup.demapper == DemapperKind::PndLpn || setup.demapper == DemapperKind::PndHsnr;
    if (pnd) {
        if (setup.true_variances) {
            if (!real.pn_phase.empty()) {
                // ground-truth proxy: oversampled phase at the symbol sampling
                // instants minus the interpolated track
                const int gd = (setup.g_tx.length() - 1) / 2;
                double acc = 0.0;
                for (size_t j = 0; j < rec.data.size(); ++j) {
                    const int body_idx = layout.data_body_index[j];
                    const size_t os_idx = static_cast<size_t>(gd) +
                                          static_cast<size_t>(fc.n_cp + body_idx) * fc.oversampling;
                    const double resid =
                        wrap_angle(real.pn_phase[os_idx] - rec.comp.track[static_cast<size_t>(body_idx)]);
                    acc += resid * resid;
                }
                sp2 = acc / static_cast<double>(rec.data.size());
            }
        } else {
            require(rec.rpn_rx.size() >= 2,
                    "evaluate_link: estimator mode needs Q*N_R >= 2 RPN pilots");
            auto est = (setup.demapper == DemapperKind::PndLpn)
                           ? estimate_residual_lpn(rec.rpn_tx, rec.rpn_rx, 1.0)
                           : estimate_residual_hsnr(rec.rpn_tx, rec.rpn_rx, 1.0);
            sn2 = std::max(est.first, 1e-12);
            sp2 = est.second;
        }
    }

    LlrOptions opt{setup.llr_clamp};
    LlrBlock llrs;
    switch (setup.demapper) {
        case DemapperKind::Aod: llrs = aod_llrs(rec.data, setup.constellation, sigma_n2, opt); break;
        case DemapperKind::PndLpn:
            llrs = pnd_llrs(rec.data, setup.constellation, sn2, sp2, PndVariant::Lpn, opt);
            break;
        case DemapperKind::PndHsnr:
            llrs = pnd_llrs(rec.data, setup.constellation, sn2, sp2, PndVariant::Hsnr, opt);
            break;
        case DemapperKind::Nnd:
            require(setup.nnd.has_value(), "evaluate_link: NND selected but no network provided");
            llrs = nn_demap(rec.data, *setup.nnd, opt);
            break;
    }

    FrameOutcome out;
    out.bits = bits.size();
    for (size_t i = 0; i < bits.size(); ++i) {
        const uint8_t hard = llrs.llr[i] > 0.0 ? 1 : 0;
        if (hard != bits[i]) ++out.bit_errors;
    }
    out.frame_error = out.bit_errors > 0;
    return out;
}

}  // namespace

std::vector<LinkPoint> evaluate_link(const LinkSetup& setup, std::span<const double> ebn0_grid,
                                     int n_frames) {
    require(n_frames >= 1, "evaluate_link: need at least one frame");
    setup.frame.validate();
    const FrameLayout layout = make_layout(setup.frame);

    // waveform-level figures, independent of Eb/N0
    const double aclr = aclr_beta_db(
        setup.g_tx.taps, stopband_matrix(setup.g_tx.length(), setup.beta, setup.g_tx.oversampling));
    const double obw = obw_999_filter(setup.g_tx.taps, setup.g_tx.oversampling);

    std::vector<double> power_samples;
    {
        RngStream prng(setup.seed, "papr");
        const size_t target = 200000;
        while (power_samples.size() < target) {
            std::vector<uint8_t> bits(static_cast<size_t>(setup.frame.n_data()) *
                                      static_cast<size_t>(setup.constellation.k_bits));
            for (auto& b : bits) b = prng.bit();
            auto data = map_bits(bits, setup.constellation);
            auto [frame, l2] = assemble_frame(data, setup.frame);
            auto shaped = pulse_shape(frame, setup.g_tx);
            for (const Complex& z : shaped) power_samples.push_back(std::norm(z));
        }
    }
    const double papr_1e3 = papr_at(power_samples, 1e-3);

    std::vector<LinkPoint> table;
    for (double ebn0 : ebn0_grid) {
        const double sigma_n2 = noise_variance(ebn0, setup.code_rate, setup.frame.oversampling,
                                               setup.frame.n_total, setup.frame.q_groups,
                                               setup.frame.n_ptrs, setup.frame.n_cp);
        std::vector<FrameOutcome> results(static_cast<size_t>(n_frames));
        const int n_threads = std::max(1, setup.threads);
        if (n_threads == 1) {
            for (int f = 0; f < n_frames; ++f)
                results[static_cast<size_t>(f)] =
                    run_one_frame(setup, layout, sigma_n2, static_cast<uint64_t>(f));
        } else {
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (int t = 0; t < n_threads; ++t) {
                pool.emplace_back([&] {
                    for (int f = next.fetch_add(1); f < n_frames; f = next.fetch_add(1))
                        results[static_cast<size_t>(f)] =
                            run_one_frame(setup, layout, sigma_n2, static_cast<uint64_t>(f));
                });
            }
            for (auto& th : pool) th.join();
        }
        LinkPoint pt;
        pt.ebn0_db = ebn0;
        for (const auto& r : results) {
            pt.bits += r.bits;
            pt.bit_errors += r.bit_errors;
            pt.frames += 1;
            pt.frame_errors += r.frame_error ? 1 : 0;
        }
        pt.ber = static_cast<double>(pt.bit_errors) / static_cast<double>(pt.bits);
        pt.bler = static_cast<double>(pt.frame_errors) / static_cast<double>(pt.frames);
        const double rate_num = static_cast<double>(setup.frame.n_total -
                                                    setup.frame.q_groups *
                                                        (setup.frame.n_ptrs + setup.frame.n_rpn));
        const double rate = static_cast<double>(setup.constellation.k_bits) * setup.code_rate *
                            rate_num / static_cast<double>(setup.frame.n_total + setup.frame.n_cp);
        pt.se_bits_s_hz = (1.0 - pt.bler) * rate / obw;
        pt.papr_db_1e3 = papr_1e3;
        pt.aclr_db = aclr;
        pt.obw = obw;
        table.push_back(pt);
    }
    return table;
}

}  // namespace scwave
