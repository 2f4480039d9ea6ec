#include "scwave/channel.hpp"

#include "scwave/dsp.hpp"

namespace scwave {

double noise_variance(double ebn0_db, double code_rate, int m_oversampling, int n_block,
                      int q_groups, int n_ptrs, int n_cp) {
    require(std::isfinite(ebn0_db), "noise_variance: Eb/N0 must be finite");
    require(code_rate > 0.0 && m_oversampling >= 1 && n_block >= 1, "noise_variance: bad parameters");
    const double num = static_cast<double>(n_block - q_groups * n_ptrs);
    const double den = static_cast<double>(n_block + n_cp);
    const double factor = db_to_lin(ebn0_db) * code_rate * m_oversampling * num / den;
    if (factor <= 0.0) throw std::invalid_argument("noise_variance: nonpositive rate factor");
    return 1.0 / factor;
}

ComplexBuffer awgn(size_t n, double sigma_n2, RngStream& rng) {
    require(sigma_n2 >= 0.0, "awgn: negative variance");
    ComplexBuffer w(n);
    const double sd = std::sqrt(sigma_n2 / 2.0);
    for (auto& z : w) {
        auto [a, b] = rng.gaussian_pair();
        z = Complex{sd * a, sd * b};
    }
    return w;
}

ComplexBuffer apply_impairments(const ComplexBuffer& s, const ChannelRealization& real) {
    require(real.pn_phase.empty() || real.pn_phase.size() == s.size(),
            "apply_impairments: phase length mismatch");
    require(real.noise.empty() || real.noise.size() == s.size(),
            "apply_impairments: noise length mismatch");
    ComplexBuffer r(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        Complex v = s[i];
        if (!real.pn_phase.empty()) {
            const double th = real.pn_phase[i];
            v *= Complex{std::cos(th), std::sin(th)};
        }
        if (!real.noise.empty()) v += real.noise[i];
        r[i] = v;
    }
    check_finite(r, "apply_impairments");
    return r;
}

ComplexBuffer receive_symbols(const ComplexBuffer& r_hat, const PulseFilter& g_rx,
                              int tx_filter_len, int n_total) {
    const ComplexBuffer filtered = convolve(r_hat, g_rx.taps);
    const int offset = (tx_filter_len - 1) / 2 + (g_rx.length() - 1) / 2;
    const int m = g_rx.oversampling;
    require(offset >= 0 &&
                static_cast<size_t>(offset) + static_cast<size_t>(n_total - 1) * m < filtered.size(),
            "receive_symbols: layout misaligned with signal length");
    ComplexBuffer symbols(static_cast<size_t>(n_total));
    for (int k = 0; k < n_total; ++k)
        symbols[static_cast<size_t>(k)] = filtered[static_cast<size_t>(offset) + static_cast<size_t>(k) * m];
    return symbols;
}

ComplexBuffer ptrs_compensate(const ComplexBuffer& body, const ComplexBuffer& pilots_tx,
                              const FrameLayout& layout, CompensationReport* report) {
    const int q = static_cast<int>(layout.group_start.size());
    CompensationReport rep;
    if (q == 0) {
        rep.skipped = true;
        rep.track.assign(body.size(), 0.0);
        if (report) *report = rep;
        return body;
    }
    require(static_cast<int>(body.size()) == layout.n_body(), "ptrs_compensate: body length mismatch");
    const int gsz = layout.n_ptrs + layout.n_rpn;

    // Theta_bar_q = arg( (1/N_P) sum r_q p*_q / |p_q|^2 )
    rep.group_phase.resize(static_cast<size_t>(q));
    for (int g = 0; g < q; ++g) {
        Complex acc{0.0, 0.0};
        for (int i = 0; i < layout.n_ptrs; ++i) {
            const int bi = layout.group_start[static_cast<size_t>(g)] + i;
            const Complex p = pilots_tx[static_cast<size_t>(g * gsz + i)];
            acc += body[static_cast<size_t>(bi)] * std::conj(p) / std::norm(p);
        }
        acc /= static_cast<double>(layout.n_ptrs);
        rep.group_phase[static_cast<size_t>(g)] = std::arg(acc);
    }

    // Linear interpolation between group centers, constant outside.
    rep.track.resize(body.size());
    int seg = 0;
    for (size_t n = 0; n < body.size(); ++n) {
        const double x = static_cast<double>(n);
        if (x <= layout.group_center.front()) {
            rep.track[n] = rep.group_phase.front();
        } else if (x >= layout.group_center.back()) {
            rep.track[n] = rep.group_phase.back();
        } else {
            while (layout.group_center[static_cast<size_t>(seg + 1)] < x) ++seg;
            const double x0 = layout.group_center[static_cast<size_t>(seg)];
            const double x1 = layout.group_center[static_cast<size_t>(seg + 1)];
            const double w = (x - x0) / (x1 - x0);
            rep.track[n] = (1.0 - w) * rep.group_phase[static_cast<size_t>(seg)] +
                           w * rep.group_phase[static_cast<size_t>(seg + 1)];
        }
    }

    ComplexBuffer out(body.size());
    for (size_t n = 0; n < body.size(); ++n) {
        const double th = rep.track[n];
        out[n] = body[n] * Complex{std::cos(th), -std::sin(th)};
    }
    if (report) *report = rep;
    check_finite(out, "ptrs_compensate");
    return out;
}

std::pair<double, double> estimate_residual_lpn(const ComplexBuffer& u, const ComplexBuffer& v,
                                                double es) {
    require(es > 0.0, "estimate_residual_lpn: E_s must be positive");
    require(u.size() == v.size() && u.size() >= 2, "estimate_residual_lpn: need >= 2 pilot pairs");
    const double rt = std::sqrt(es);
    double sn = 0.0, sp = 0.0;
    for (size_t l = 0; l < u.size(); ++l) {
        const double phi = std::arg(u[l]);
        const Complex d = v[l] * Complex{std::cos(phi), -std::sin(phi)};
        sn += (d.real() - rt) * (d.real() - rt);
        sp += d.imag() * d.imag();
    }
    sn /= static_cast<double>(u.size());
    sp = sp / static_cast<double>(u.size()) - sn / es;
    return {sn, std::max(sp, 0.0)};
}

std::pair<double, double> estimate_residual_hsnr(const ComplexBuffer& u, const ComplexBuffer& v,
                                                 double es) {
    require(es > 0.0, "estimate_residual_hsnr: E_s must be positive");
    require(u.size() == v.size() && u.size() >= 2, "estimate_residual_hsnr: need >= 2 pilot pairs");
    const double rt = std::sqrt(es);
    double sn = 0.0, sp = 0.0;
    for (size_t l = 0; l < u.size(); ++l) {
        const double dm = std::abs(v[l]) - rt;
        sn += dm * dm;
        const double da = wrap_angle(std::arg(v[l]) - std::arg(u[l]));
        sp += da * da;
    }
    sn /= static_cast<double>(u.size());
    sp = sp / static_cast<double>(u.size()) - sn / es;
    return {sn, std::max(sp, 0.0)};
}

ReceivedFrame receive_chain(const ComplexBuffer& r_hat, const PulseFilter& g_rx,
                            int tx_filter_len, const FrameConfig& cfg, const FrameLayout& layout) {
    const ComplexBuffer symbols = receive_symbols(r_hat, g_rx, tx_filter_len, cfg.n_total);
    // CP first, then PN compensation on the body.
    ComplexBuffer body(symbols.begin() + cfg.n_cp, symbols.end());
    const ComplexBuffer pilots = pilot_sequence(cfg);

    ReceivedFrame out;
    out.body = ptrs_compensate(body, pilots, layout, &out.comp);
    out.data.reserve(layout.data_body_index.size());
    for (int bi : layout.data_body_index) out.data.push_back(out.body[static_cast<size_t>(bi)]);
    const int gsz = cfg.n_ptrs + cfg.n_rpn;
    for (int g = 0; g < cfg.q_groups; ++g) {
        for (int i = 0; i < cfg.n_rpn; ++i) {
            const int bi = layout.group_start[static_cast<size_t>(g)] + cfg.n_ptrs + i;
            out.rpn_rx.push_back(out.body[static_cast<size_t>(bi)]);
            out.rpn_tx.push_back(pilots[static_cast<size_t>(g * gsz + cfg.n_ptrs + i)]);
        }
    }
    return out;
}

}  // namespace scwave
