#include "scwave/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "scwave/dsp.hpp"

namespace scwave {

double augmented_loss(double bce, double phi_p, double phi_a, const LagrangianState& st) {
    require(st.lambda > 0.0, "augmented_loss: lambda must be positive");
    const double hinge = std::max(0.0, st.mu_a + st.lambda * phi_a);
    return bce + st.mu_p * phi_p + 0.5 * st.lambda * phi_p * phi_p +
           (hinge * hinge - st.mu_a * st.mu_a) / (2.0 * st.lambda);
}

LagrangianState update_multipliers(const LagrangianState& st, double phi_p, double phi_a) {
    require(st.lambda > 0.0 && st.tau > 1.0, "update_multipliers: need lambda > 0, tau > 1");
    LagrangianState out = st;
    out.mu_p = st.mu_p + st.lambda * phi_p;
    out.mu_a = std::max(0.0, st.mu_a + st.lambda * phi_a);
    out.lambda = st.tau * st.lambda;
    return out;
}

LagrangianState TrainConfig::initial_lagrangian() const {
    LagrangianState s;
    s.lambda = lambda0;
    s.tau = tau;
    s.eps_p = db_to_lin(eps_p_db);
    s.eps_a = eps_a_db;
    s.beta = beta;
    return s;
}

void TrainConfig::validate() const {
    frame.validate();
    require(frame.oversampling >= 1 && span_symbols >= 1, "train: bad filter geometry");
    require(ebn0_lo_db <= ebn0_hi_db, "train: Eb/N0 range inverted");
    require(batch_size >= 1 && inner_steps >= 0 && outer_iters >= 1, "train: bad iteration counts");
    require(learning_rate > 0.0 && lambda0 > 0.0 && tau > 1.0, "train: bad optimizer constants");
}

namespace {

struct InterpMap {
    std::vector<int> left, right;
    std::vector<double> wl, wr;
};

InterpMap make_interp(const FrameLayout& lay) {
    InterpMap m;
    const int n = lay.n_body();
    m.left.resize(size_t(n));
    m.right.resize(size_t(n));
    m.wl.resize(size_t(n));
    m.wr.resize(size_t(n));
    const auto& c = lay.group_center;
    int seg = 0;
    for (int i = 0; i < n; ++i) {
        const double x = double(i);
        if (c.empty() || x <= c.front()) {
            m.left[size_t(i)] = m.right[size_t(i)] = 0;
            m.wl[size_t(i)] = 1.0;
            m.wr[size_t(i)] = 0.0;
        } else if (x >= c.back()) {
            m.left[size_t(i)] = m.right[size_t(i)] = int(c.size()) - 1;
            m.wl[size_t(i)] = 1.0;
            m.wr[size_t(i)] = 0.0;
        } else {
            while (c[size_t(seg + 1)] < x) ++seg;
            const double w = (x - c[size_t(seg)]) / (c[size_t(seg + 1)] - c[size_t(seg)]);
            m.left[size_t(i)] = seg;
            m.right[size_t(i)] = seg + 1;
            m.wl[size_t(i)] = 1.0 - w;
            m.wr[size_t(i)] = w;
        }
    }
    return m;
}

std::vector<int> labels_from_bits(const std::vector<uint8_t>& bits, int k) {
    std::vector<int> labels(bits.size() / size_t(k));
    for (size_t s = 0; s < labels.size(); ++s) {
        int v = 0;
        for (int b = 0; b < k; ++b) v = (v << 1) | bits[s * size_t(k) + size_t(b)];
        labels[s] = v;
    }
    return labels;
}

std::vector<std::vector<int>> label_subsets(int k, int value) {
    std::vector<std::vector<int>> sets(static_cast<size_t>(k));
    for (int b = 0; b < k; ++b)
        for (int i = 0; i < (1 << k); ++i)
            if (((i >> (k - 1 - b)) & 1) == value) sets[size_t(b)].push_back(i);
    return sets;
}

Constellation initial_constellation(const TrainConfig& cfg) {
    std::string kind = cfg.constellation_init;
    if (kind == "auto") kind = (cfg.frame.k_bits == 6) ? "apsk64" : "qam";
    if (kind == "apsk64") {
        require(cfg.frame.k_bits == 6, "train: apsk64 init requires K=6");
        return init_apsk64();
    }
    if (kind == "qam") return init_qam(cfg.frame.k_bits);
    throw std::invalid_argument("train: unknown constellation init " + kind);
}

}  // namespace

ParamSet init_params(const TrainConfig& cfg) {
    cfg.validate();
    ParamSet p;
    const Constellation c = initial_constellation(cfg);
    Vec cw(c.points.size() * 2);
    for (size_t i = 0; i < c.points.size(); ++i) {
        cw[2 * i] = c.points[i].real();
        cw[2 * i + 1] = c.points[i].imag();
    }
    p.add_group("constellation", std::move(cw));
    const PulseFilter rrc = init_rrc(cfg.beta, cfg.span_symbols, cfg.frame.oversampling);
    p.add_group("g_tx", rrc.taps);
    p.add_group("g_rx", rrc.taps);
    if (cfg.demapper == DemapperKind::Nnd) {
        RngStream r(cfg.seed, "init");
        p.add_group("nnd", NnDemapper::init(cfg.frame.k_bits, cfg.nn_hidden, r).weights);
    }
    return p;
}

WaveformBundle params_to_bundle(const ParamSet& params, const TrainConfig& cfg) {
    WaveformBundle b;
    const Vec& cw = params.group(params.find("constellation")).value;
    ComplexBuffer raw(cw.size() / 2);
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = Complex{cw[2 * i], cw[2 * i + 1]};
    b.constellation = normalize_constellation(raw);
    b.g_tx = make_filter(params.group(params.find("g_tx")).value, cfg.span_symbols,
                         cfg.frame.oversampling);
    b.g_rx = make_filter(params.group(params.find("g_rx")).value, cfg.span_symbols,
                         cfg.frame.oversampling);
    b.frame = cfg.frame;
    b.beta = cfg.beta;
    b.demapper = cfg.demapper;
    b.seed = cfg.seed;
    if (cfg.demapper == DemapperKind::Nnd) {
        NnDemapper net;
        net.k_bits = cfg.frame.k_bits;
        net.dims.push_back(2);
        for (int h : cfg.nn_hidden) net.dims.push_back(h);
        net.dims.push_back(cfg.frame.k_bits);
        net.weights = params.group(params.find("nnd")).value;
        b.nnd = std::move(net);
    }
    return b;
}

BatchRealization draw_batch(const TrainConfig& cfg, const FrameLayout& lay, uint64_t step_index,
                            std::string_view substream) {
    const std::string tag(substream);
    BatchRealization batch;
    {
        RngStream er(cfg.seed, tag + ":ebn0", step_index);
        batch.ebn0_db = er.uniform(cfg.ebn0_lo_db, cfg.ebn0_hi_db);
    }
    batch.sigma_n2 = noise_variance(batch.ebn0_db, cfg.code_rate, cfg.frame.oversampling,
                                    cfg.frame.n_total, cfg.frame.q_groups, cfg.frame.n_ptrs,
                                    cfg.frame.n_cp);
    const int m = cfg.frame.oversampling;
    const int filter_len = cfg.span_symbols * m + 1;
    const size_t os_len = size_t(cfg.frame.n_total) * size_t(m) + size_t(filter_len) - 1;
    const PnModel tx = make_pn_model(cfg.pn_enabled ? cfg.pn_tx_name : "none", cfg.carrier_hz);
    const PnModel rx = make_pn_model(cfg.pn_enabled ? cfg.pn_rx_name : "none", cfg.carrier_hz);

    const InterpMap interp = make_interp(lay);
    double resid_acc = 0.0;
    size_t resid_n = 0;

    for (int f = 0; f < cfg.batch_size; ++f) {
        const uint64_t fidx = step_index * uint64_t(cfg.batch_size) + uint64_t(f);
        FrameDraw draw;
        RngStream br(cfg.seed, tag + ":bits", fidx);
        draw.bits.resize(size_t(cfg.frame.n_data()) * size_t(cfg.frame.k_bits));
        for (auto& b : draw.bits) b = br.bit();

        if (tx.enabled() || rx.enabled()) {
            draw.pn_phase.assign(os_len, 0.0);
            if (tx.enabled()) {
                auto p = generate_pn(
                    tx, PnGenSpec{cfg.sample_rate, os_len,
                                  RngStream(cfg.seed, tag + ":pn_tx", fidx).next_u64()});
                for (size_t i = 0; i < os_len; ++i) draw.pn_phase[i] += p[i];
            }
            if (rx.enabled()) {
                auto p = generate_pn(
                    rx, PnGenSpec{cfg.sample_rate, os_len,
                                  RngStream(cfg.seed, tag + ":pn_rx", fidx).next_u64()});
                for (size_t i = 0; i < os_len; ++i) draw.pn_phase[i] += p[i];
            }
            // ground-truth residual proxy: the oversampled phase at the symbol
            // instants minus the PTRS-averaged, interpolated version of itself
            const int gd = (filter_len - 1) / 2;
            const int n_body = lay.n_body();
            RealBuffer pn_sym(static_cast<size_t>(n_body));
            for (int i = 0; i < n_body; ++i)
                pn_sym[size_t(i)] =
                    draw.pn_phase[size_t(gd) + size_t(cfg.frame.n_cp + i) * size_t(m)];
            if (!lay.group_start.empty()) {
                std::vector<double> gavg(lay.group_start.size(), 0.0);
                for (size_t q = 0; q < lay.group_start.size(); ++q) {
                    for (int i = 0; i < lay.n_ptrs; ++i)
                        gavg[q] += pn_sym[size_t(lay.group_start[q] + i)];
                    gavg[q] /= double(lay.n_ptrs);
                }
                for (int d : lay.data_body_index) {
                    const double tr = interp.wl[size_t(d)] * gavg[size_t(interp.left[size_t(d)])] +
                                      interp.wr[size_t(d)] * gavg[size_t(interp.right[size_t(d)])];
                    const double r = wrap_angle(pn_sym[size_t(d)] - tr);
                    resid_acc += r * r;
                    ++resid_n;
                }
            }
        }
        {
            RngStream nr(cfg.seed, tag + ":awgn", fidx);
            draw.noise = awgn(os_len, batch.sigma_n2, nr);
        }
        batch.frames.push_back(std::move(draw));
    }
    if (resid_n > 0) batch.sigma_p2_true = resid_acc / double(resid_n);
    return batch;
}

namespace {

using Var = Tape::Var;

struct WaveVars {
    Var c_re, c_im;
    Var g_tx, g_rx;
};

WaveVars build_waveform_vars(Tape& t, const std::vector<Var>& leaves, const ParamSet& params) {
    WaveVars w;
    const int ci = params.find("constellation");
    const size_t n_pts = params.group(ci).value.size() / 2;
    std::vector<int> even(n_pts), odd(n_pts);
    for (size_t i = 0; i < n_pts; ++i) {
        even[i] = int(2 * i);
        odd[i] = int(2 * i + 1);
    }
    Var raw_re = t.gather(leaves[size_t(ci)], even);
    Var raw_im = t.gather(leaves[size_t(ci)], odd);
    Var cen_re = t.sub(raw_re, t.mean(raw_re));
    Var cen_im = t.sub(raw_im, t.mean(raw_im));
    Var power = t.mean(t.add(t.vsquare(cen_re), t.vsquare(cen_im)));
    Var inv_rms = t.div(t.scalar(1.0), t.vsqrt(power));
    w.c_re = t.mul(cen_re, inv_rms);
    w.c_im = t.mul(cen_im, inv_rms);

    auto normalize_taps = [&](int gi) {
        Var raw = leaves[size_t(gi)];
        Var inv = t.div(t.scalar(1.0), t.vsqrt(t.sum(t.vsquare(raw))));
        return t.mul(raw, inv);
    };
    w.g_tx = normalize_taps(params.find("g_tx"));
    w.g_rx = normalize_taps(params.find("g_rx"));
    return w;
}

// Per-constellation-point scalars shared across the batch.
struct PointVars {
    std::vector<Var> re, im;
    std::vector<Var> mag;       // PND
    std::vector<Var> cosp, sinp;
    std::vector<Var> phase;     // HSNR
    std::vector<Var> tang_var;  // sp2 |c|^2 + sn2
    std::vector<Var> ang_var;   // sp2 + sn2 / |c|^2
    std::vector<Var> log_t;
};

PointVars build_point_vars(Tape& t, const WaveVars& w, size_t n_pts, DemapperKind dk,
                           double sigma_n2, double sigma_p2) {
    PointVars pv;
    const bool pnd = dk == DemapperKind::PndLpn || dk == DemapperKind::PndHsnr;
    for (size_t i = 0; i < n_pts; ++i) {
        Var re = t.gather(w.c_re, {int(i)});
        Var im = t.gather(w.c_im, {int(i)});
        pv.re.push_back(re);
        pv.im.push_back(im);
        if (!pnd) continue;
        Var m2 = t.add(t.vsquare(re), t.vsquare(im));
        Var mg = t.vsqrt(m2);
        pv.mag.push_back(mg);
        Var tv = t.offset(t.scale(m2, sigma_p2), sigma_n2);
        pv.tang_var.push_back(tv);
        pv.log_t.push_back(t.vlog(tv));
        if (dk == DemapperKind::PndLpn) {
            pv.cosp.push_back(t.div(re, mg));
            pv.sinp.push_back(t.div(im, mg));
        } else {
            pv.phase.push_back(t.vatan2(im, re));
            pv.ang_var.push_back(t.offset(t.scale(t.div(t.scalar(1.0), m2), sigma_n2), sigma_p2));
        }
    }
    return pv;
}

// Constants shared by every frame in the step graph.
struct StepConsts {
    std::vector<std::vector<double>> pc_re, pc_im;  // conj(p)/|p|^2 per group
    Vec pilots_re, pilots_im;
    std::vector<int> body_source, frame_from_body, data_idx, cp_skip;
    std::vector<std::vector<int>> ptrs_idx;  // per group, body-relative
    std::vector<int> interp_left, interp_right;
    Vec interp_wl, interp_wr;
    std::vector<std::vector<int>> set0, set1;
};

StepConsts make_step_consts(const TrainConfig& cfg, const FrameLayout& lay) {
    StepConsts sc;
    const ComplexBuffer pilots = pilot_sequence(cfg.frame);
    for (const Complex& p : pilots) {
        sc.pilots_re.push_back(p.real());
        sc.pilots_im.push_back(p.imag());
    }
    const int gsz = cfg.frame.n_ptrs + cfg.frame.n_rpn;
    for (int q = 0; q < cfg.frame.q_groups; ++q) {
        std::vector<double> pr, pi;
        for (int i = 0; i < cfg.frame.n_ptrs; ++i) {
            const Complex p = pilots[size_t(q * gsz + i)];
            const Complex pc = std::conj(p) / std::norm(p);
            pr.push_back(pc.real());
            pi.push_back(pc.imag());
        }
        sc.pc_re.push_back(std::move(pr));
        sc.pc_im.push_back(std::move(pi));
        sc.ptrs_idx.push_back(lay.ptrs_body_indices(q));
    }
    sc.body_source = lay.body_source;
    sc.frame_from_body = lay.frame_from_body;
    sc.data_idx = lay.data_body_index;
    for (int i = cfg.frame.n_cp; i < cfg.frame.n_total; ++i) sc.cp_skip.push_back(i);
    const InterpMap im = make_interp(lay);
    sc.interp_left = im.left;
    sc.interp_right = im.right;
    sc.interp_wl = im.wl;
    sc.interp_wr = im.wr;
    sc.set0 = label_subsets(cfg.frame.k_bits, 0);
    sc.set1 = label_subsets(cfg.frame.k_bits, 1);
    return sc;
}

struct FrameGraphOut {
    Var bce;
    Var power;  // |s_hat|^2, oversampled
};

FrameGraphOut build_frame_graph(Tape& t, const TrainConfig& cfg, const StepConsts& sc,
                                const WaveVars& w, const PointVars& pv, const FrameDraw& draw,
                                double sigma_n2, const std::vector<Var>& leaves,
                                const ParamSet& params) {
    const int k = cfg.frame.k_bits;
    const int m = cfg.frame.oversampling;
    const int n_total = cfg.frame.n_total;
    const size_t n_data = size_t(cfg.frame.n_data());
    const int flen = cfg.span_symbols * m + 1;

    // map bits and assemble the block
    const std::vector<int> labels = labels_from_bits(draw.bits, k);
    Var sym_re = t.gather(w.c_re, labels);
    Var sym_im = t.gather(w.c_im, labels);
    Var src_re = sc.pilots_re.empty() ? sym_re : t.concat({sym_re, t.constant(sc.pilots_re)});
    Var src_im = sc.pilots_im.empty() ? sym_im : t.concat({sym_im, t.constant(sc.pilots_im)});
    Var body_tx_re = t.gather(src_re, sc.body_source);
    Var body_tx_im = t.gather(src_im, sc.body_source);
    Var frame_re = t.gather(body_tx_re, sc.frame_from_body);
    Var frame_im = t.gather(body_tx_im, sc.frame_from_body);

    // pulse shaping
    Var s_re = t.conv_full(t.upsample(frame_re, m), w.g_tx);
    Var s_im = t.conv_full(t.upsample(frame_im, m), w.g_tx);
    Var power = t.add(t.vsquare(s_re), t.vsquare(s_im));

    // impairments
    Var r_re = s_re, r_im = s_im;
    if (!draw.pn_phase.empty()) {
        Vec cv(draw.pn_phase.size()), sv(draw.pn_phase.size());
        for (size_t i = 0; i < draw.pn_phase.size(); ++i) {
            cv[i] = std::cos(draw.pn_phase[i]);
            sv[i] = std::sin(draw.pn_phase[i]);
        }
        Var cosv = t.constant(cv);
        Var sinv = t.constant(sv);
        Var rr = t.sub(t.mul(r_re, cosv), t.mul(r_im, sinv));
        Var ri = t.add(t.mul(r_re, sinv), t.mul(r_im, cosv));
        r_re = rr;
        r_im = ri;
    }
    if (!draw.noise.empty()) {
        Vec nr(draw.noise.size()), ni(draw.noise.size());
        for (size_t i = 0; i < draw.noise.size(); ++i) {
            nr[i] = draw.noise[i].real();
            ni[i] = draw.noise[i].imag();
        }
        r_re = t.add(r_re, t.constant(nr));
        r_im = t.add(r_im, t.constant(ni));
    }

    // receive filter + symbol-rate sampling at the cascade group delay
    Var y_re = t.conv_full(r_re, w.g_rx);
    Var y_im = t.conv_full(r_im, w.g_rx);
    const int offset = (flen - 1) / 2 + (flen - 1) / 2;
    Var sym_rx_re = t.downsample(y_re, m, offset, n_total);
    Var sym_rx_im = t.downsample(y_im, m, offset, n_total);
    Var body_re = t.gather(sym_rx_re, sc.cp_skip);
    Var body_im = t.gather(sym_rx_im, sc.cp_skip);

    // PTRS compensation
    if (!sc.ptrs_idx.empty()) {
        std::vector<Var> group_phases;
        for (size_t q = 0; q < sc.ptrs_idx.size(); ++q) {
            Var prx_re = t.gather(body_re, sc.ptrs_idx[q]);
            Var prx_im = t.gather(body_im, sc.ptrs_idx[q]);
            Var pc_re = t.constant(sc.pc_re[q]);
            Var pc_im = t.constant(sc.pc_im[q]);
            Var e_re = t.sub(t.mul(prx_re, pc_re), t.mul(prx_im, pc_im));
            Var e_im = t.add(t.mul(prx_re, pc_im), t.mul(prx_im, pc_re));
            group_phases.push_back(t.vatan2(t.mean(e_im), t.mean(e_re)));
        }
        Var th = t.concat(group_phases);
        Var track = t.add(t.mul(t.gather(th, sc.interp_left), t.constant(sc.interp_wl)),
                          t.mul(t.gather(th, sc.interp_right), t.constant(sc.interp_wr)));
        Var cosT = t.vcos(track);
        Var sinT = t.vsin(track);
        Var comp_re = t.add(t.mul(body_re, cosT), t.mul(body_im, sinT));
        Var comp_im = t.sub(t.mul(body_im, cosT), t.mul(body_re, sinT));
        body_re = comp_re;
        body_im = comp_im;
    }
    Var data_re = t.gather(body_re, sc.data_idx);
    Var data_im = t.gather(body_im, sc.data_idx);

    // demapper -> per-bit clamped logits
    std::vector<Var> llr_bits(static_cast<size_t>(k));
    if (cfg.demapper == DemapperKind::Nnd) {
        std::vector<int> ix(2 * n_data);
        for (size_t s = 0; s < n_data; ++s) {
            ix[2 * s] = int(s);
            ix[2 * s + 1] = int(n_data + s);
        }
        Var x = t.gather(t.concat({data_re, data_im}), ix);
        const int ni = params.find("nnd");
        std::vector<int> dims{2};
        for (int h : cfg.nn_hidden) dims.push_back(h);
        dims.push_back(k);
        size_t off = 0;
        for (size_t l = 0; l + 1 < dims.size(); ++l) {
            const int nin = dims[l], nout = dims[l + 1];
            std::vector<int> widx(size_t(nout) * size_t(nin));
            std::vector<int> bidx(static_cast<size_t>(nout));
            for (size_t i = 0; i < widx.size(); ++i) widx[i] = int(off + i);
            for (size_t i = 0; i < bidx.size(); ++i) bidx[i] = int(off + widx.size() + i);
            Var wv = t.gather(leaves[size_t(ni)], widx);
            Var bv = t.gather(leaves[size_t(ni)], bidx);
            Var y = t.linear(x, wv, bv, int(n_data), nin, nout);
            x = (l + 2 == dims.size()) ? y : t.relu(y);
            off += widx.size() + bidx.size();
        }
        for (int b = 0; b < k; ++b) {
            std::vector<int> sel(n_data);
            for (size_t s = 0; s < n_data; ++s) sel[s] = int(s) * k + b;
            llr_bits[size_t(b)] = t.clamp(t.gather(x, sel), -cfg.llr_clamp, cfg.llr_clamp);
        }
    } else {
        const size_t n_pts = size_t(1) << k;
        std::vector<Var> loglik(n_pts);
        Var rmag, rang;
        if (cfg.demapper == DemapperKind::PndHsnr) {
            rmag = t.vsqrt(t.add(t.vsquare(data_re), t.vsquare(data_im)));
            rang = t.vatan2(data_im, data_re);
        }
        for (size_t i = 0; i < n_pts; ++i) {
            if (cfg.demapper == DemapperKind::Aod) {
                Var dre = t.sub(data_re, pv.re[i]);
                Var dim = t.sub(data_im, pv.im[i]);
                loglik[i] = t.scale(t.add(t.vsquare(dre), t.vsquare(dim)), -1.0 / sigma_n2);
            } else if (cfg.demapper == DemapperKind::PndLpn) {
                Var rp = t.add(t.mul(data_re, pv.cosp[i]), t.mul(data_im, pv.sinp[i]));
                Var ip = t.sub(t.mul(data_im, pv.cosp[i]), t.mul(data_re, pv.sinp[i]));
                Var radial = t.scale(t.vsquare(t.sub(rp, pv.mag[i])), 1.0 / sigma_n2);
                Var tang = t.div(t.vsquare(ip), pv.tang_var[i]);
                loglik[i] = t.neg(t.add(t.add(radial, tang), pv.log_t[i]));
            } else {
                Var radial = t.scale(t.vsquare(t.sub(rmag, pv.mag[i])), 1.0 / sigma_n2);
                Var draw_ang = t.sub(rang, pv.phase[i]);
                // wrap to (-pi, pi] via a piecewise-constant shift (zero grad)
                Vec corr(t.val(draw_ang).size());
                for (size_t n = 0; n < corr.size(); ++n)
                    corr[n] = 2.0 * M_PI * std::round(t.val(draw_ang)[n] / (2.0 * M_PI));
                Var wrapped = t.sub(draw_ang, t.constant(corr));
                Var ang = t.div(t.vsquare(wrapped), pv.ang_var[i]);
                loglik[i] = t.neg(t.add(t.add(radial, ang), pv.log_t[i]));
            }
        }
        for (int b = 0; b < k; ++b) {
            std::vector<Var> s1, s0;
            for (int i : sc.set1[size_t(b)]) s1.push_back(loglik[size_t(i)]);
            for (int i : sc.set0[size_t(b)]) s0.push_back(loglik[size_t(i)]);
            llr_bits[size_t(b)] =
                t.clamp(t.sub(t.lse_over(s1), t.lse_over(s0)), -cfg.llr_clamp, cfg.llr_clamp);
        }
    }

    // BCE over this frame, in bits per symbol
    Var acc;
    for (int b = 0; b < k; ++b) {
        Vec bconst(n_data);
        for (size_t s = 0; s < n_data; ++s) bconst[s] = double(draw.bits[s * size_t(k) + size_t(b)]);
        Var term = t.sub(t.softplus(llr_bits[size_t(b)]), t.mul(llr_bits[size_t(b)], t.constant(bconst)));
        acc = (b == 0) ? term : t.add(acc, term);
    }
    FrameGraphOut out;
    out.bce = t.scale(t.mean(acc), 1.0 / std::log(2.0));
    out.power = power;
    return out;
}

}  // namespace

GraphRefs build_step_graph(Tape& t, const std::vector<Tape::Var>& leaves, const TrainConfig& cfg,
                           const FrameLayout& lay, const BatchRealization& batch,
                           const LagrangianState& lagr) {
    require(!batch.frames.empty(), "build_step_graph: empty batch");
    require(lagr.lambda > 0.0, "build_step_graph: lambda must be positive");

    // params live outside the tape; reconstruct the set descriptor locally
    ParamSet params;
    params.add_group("constellation", t.val(leaves[0]));
    params.add_group("g_tx", t.val(leaves[1]));
    params.add_group("g_rx", t.val(leaves[2]));
    if (cfg.demapper == DemapperKind::Nnd) {
        require(leaves.size() >= 4, "build_step_graph: missing NND leaf");
        params.add_group("nnd", t.val(leaves[3]));
    }

    const StepConsts sc = make_step_consts(cfg, lay);
    const WaveVars w = build_waveform_vars(t, leaves, params);
    const PointVars pv = build_point_vars(t, w, size_t(1) << cfg.frame.k_bits, cfg.demapper,
                                          batch.sigma_n2, batch.sigma_p2_true);

    Var bce_sum;
    std::vector<Var> powers;
    for (size_t f = 0; f < batch.frames.size(); ++f) {
        auto fg = build_frame_graph(t, cfg, sc, w, pv, batch.frames[f], batch.sigma_n2, leaves,
                                    params);
        bce_sum = (f == 0) ? fg.bce : t.add(bce_sum, fg.bce);
        powers.push_back(fg.power);
    }
    GraphRefs refs;
    refs.bce = t.scale(bce_sum, 1.0 / double(batch.frames.size()));

    Var pcat = powers.size() == 1 ? powers[0] : t.concat(powers);
    if (t.len(pcat) > cfg.power_samples_cap) {
        std::vector<int> head(cfg.power_samples_cap);
        for (size_t i = 0; i < head.size(); ++i) head[i] = int(i);
        pcat = t.gather(pcat, head);
    }
    Var mean_p = t.mean(pcat);
    Var excess = t.relu(t.offset(t.div(pcat, mean_p), -lagr.eps_p));
    refs.phi_p = t.mean(excess);

    // xi_S = g' Phi g through a dense row, then the hinge-free linear ACLR term
    const int L = cfg.span_symbols * cfg.frame.oversampling + 1;
    const StopbandForm form = stopband_matrix(L, lagr.beta, cfg.frame.oversampling);
    Var phi_mat = t.constant(form.phi);
    Var zeros = t.constant(Vec(size_t(L), 0.0));
    Var row = t.linear(w.g_tx, phi_mat, zeros, 1, L, L);
    Var xi = t.sum(t.mul(row, w.g_tx));
    Var aclr_lin = t.div(xi, t.sub(t.scalar(1.0), xi));
    Var aclr_db = t.scale(t.vlog(aclr_lin), 10.0 / std::log(10.0));
    refs.phi_a = t.offset(aclr_db, -lagr.eps_a);

    Var hinge = t.relu(t.offset(t.scale(refs.phi_a, lagr.lambda), lagr.mu_a));
    Var aug_a = t.scale(t.offset(t.vsquare(hinge), -lagr.mu_a * lagr.mu_a),
                        1.0 / (2.0 * lagr.lambda));
    refs.loss = t.add(
        t.add(t.add(refs.bce, t.scale(refs.phi_p, lagr.mu_p)),
              t.scale(t.vsquare(refs.phi_p), 0.5 * lagr.lambda)),
        aug_a);
    return refs;
}

PlainLoss eval_loss_plain(const TrainConfig& cfg, const FrameLayout& lay, const ParamSet& params,
                          const BatchRealization& batch, const LagrangianState& lagr) {
    require(!batch.frames.empty(), "eval_loss_plain: empty batch");
    const WaveformBundle b = params_to_bundle(params, cfg);
    const LlrOptions opt{cfg.llr_clamp};

    PlainLoss out;
    std::vector<double> power;
    for (const FrameDraw& draw : batch.frames) {
        auto data_tx = map_bits(draw.bits, b.constellation);
        auto [frame, lay2] = assemble_frame(data_tx, cfg.frame);
        auto shaped = pulse_shape(frame, b.g_tx);
        for (const Complex& z : shaped) power.push_back(std::norm(z));

        ChannelRealization real;
        real.pn_phase = draw.pn_phase;
        real.noise = draw.noise;
        real.sigma_n2 = batch.sigma_n2;
        auto rhat = apply_impairments(shaped, real);
        auto rec = receive_chain(rhat, b.g_rx, b.g_tx.length(), cfg.frame, lay);

        LlrBlock llrs;
        switch (cfg.demapper) {
            case DemapperKind::Aod:
                llrs = aod_llrs(rec.data, b.constellation, batch.sigma_n2, opt);
                break;
            case DemapperKind::PndLpn:
                llrs = pnd_llrs(rec.data, b.constellation, batch.sigma_n2, batch.sigma_p2_true,
                                PndVariant::Lpn, opt);
                break;
            case DemapperKind::PndHsnr:
                llrs = pnd_llrs(rec.data, b.constellation, batch.sigma_n2, batch.sigma_p2_true,
                                PndVariant::Hsnr, opt);
                break;
            case DemapperKind::Nnd:
                llrs = nn_demap(rec.data, *b.nnd, opt);
                break;
        }
        out.bce += bce_loss(draw.bits, llrs);
    }
    out.bce /= double(batch.frames.size());
    if (power.size() > cfg.power_samples_cap) power.resize(cfg.power_samples_cap);
    out.phi_p = papr_penalty(power, lagr.eps_p);
    const StopbandForm form =
        stopband_matrix(b.g_tx.length(), lagr.beta, cfg.frame.oversampling);
    const double xi = stopband_energy(b.g_tx.taps, form);
    out.phi_a = lin_to_db(xi / (1.0 - xi)) - lagr.eps_a;
    out.loss = augmented_loss(out.bce, out.phi_p, out.phi_a, lagr);
    return out;
}

double inner_sgd(ParamSet& params, AdamState& adam, const LagrangianState& lagr,
                 const TrainConfig& cfg, const FrameLayout& lay, int steps,
                 uint64_t step_index_base) {
    Tape t;
    double acc = 0.0;
    for (int j = 0; j < steps; ++j) {
        const BatchRealization batch = draw_batch(cfg, lay, step_index_base + uint64_t(j));
        t.clear();
        const auto leaves = params.make_leaves(t);
        const GraphRefs refs = build_step_graph(t, leaves, cfg, lay, batch, lagr);
        const double loss = t.val(refs.loss)[0];
        if (!std::isfinite(loss))
            throw std::runtime_error("inner_sgd: non-finite loss at step " +
                                     std::to_string(step_index_base + uint64_t(j)));
        t.backward(refs.loss);
        params.accumulate_grads(t, leaves);
        adam_step(params, adam);
        acc += loss;
    }
    return steps > 0 ? acc / steps : 0.0;
}

double heldout_bce(const TrainConfig& cfg, const ParamSet& params, int n_batches) {
    TrainConfig fixed = cfg;
    const double mid = 0.5 * (cfg.ebn0_lo_db + cfg.ebn0_hi_db);
    fixed.ebn0_lo_db = fixed.ebn0_hi_db = mid;
    const FrameLayout lay = make_layout(cfg.frame);
    const LagrangianState lagr = cfg.initial_lagrangian();
    double acc = 0.0;
    for (int b = 0; b < n_batches; ++b) {
        const BatchRealization batch = draw_batch(fixed, lay, uint64_t(b), "heldout");
        acc += eval_loss_plain(fixed, lay, params, batch, lagr).bce;
    }
    return acc / double(n_batches);
}

namespace {

double papr_log_value(const TrainConfig& cfg, const ParamSet& params) {
    const WaveformBundle b = params_to_bundle(params, cfg);
    RngStream rng(cfg.seed, "papr_log");
    std::vector<double> power;
    while (power.size() < 100000) {
        std::vector<uint8_t> bits(size_t(cfg.frame.n_data()) * size_t(cfg.frame.k_bits));
        for (auto& v : bits) v = rng.bit();
        auto [frame, lay2] = assemble_frame(map_bits(bits, b.constellation), cfg.frame);
        for (const Complex& z : pulse_shape(frame, b.g_tx)) power.push_back(std::norm(z));
    }
    return papr_at(power, 1e-3);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Checkpoint* resume) {
    cfg.validate();
    const FrameLayout lay = make_layout(cfg.frame);

    ParamSet params;
    AdamState adam;
    LagrangianState lagr;
    int outer0 = 0;
    if (resume) {
        params = resume->params;
        adam = resume->adam;
        lagr = resume->lagr;
        outer0 = resume->outer_done;
    } else {
        params = init_params(cfg);
        adam = AdamState::init_for(params, AdamConfig{.lr = cfg.learning_rate});
        lagr = cfg.initial_lagrangian();
    }

    TrainResult res;
    auto log_row = [&](int outer) {
        const BatchRealization lb = draw_batch(cfg, lay, 1000000u + uint64_t(outer), "log");
        const PlainLoss pl = eval_loss_plain(cfg, lay, params, lb, lagr);
        TrainLogRow row;
        row.outer = outer;
        row.bce = pl.bce;
        row.phi_p = pl.phi_p;
        row.aclr_db = pl.phi_a + lagr.eps_a;
        row.papr_db_1e3 = papr_log_value(cfg, params);
        row.mu_p = lagr.mu_p;
        row.mu_a = lagr.mu_a;
        row.lambda = lagr.lambda;
        row.heldout = heldout_bce(cfg, params);
        res.log.push_back(row);
    };

    log_row(outer0);
    double initial_loss = std::numeric_limits<double>::quiet_NaN();
    int diverged_streak = 0;
    int outer_done = outer0;
    for (int i = outer0; i < cfg.outer_iters; ++i) {
        const double mean_loss =
            inner_sgd(params, adam, lagr, cfg, lay, cfg.inner_steps,
                      uint64_t(i) * uint64_t(std::max(cfg.inner_steps, 1)));
        if (std::isnan(initial_loss)) initial_loss = mean_loss;

        // Algorithm-step multiplier update on freshly recomputed constraints
        const BatchRealization rb = draw_batch(cfg, lay, 2000000u + uint64_t(i), "recompute");
        const PlainLoss pl = eval_loss_plain(cfg, lay, params, rb, lagr);
        lagr = update_multipliers(lagr, pl.phi_p, pl.phi_a);
        outer_done = i + 1;
        log_row(outer_done);

        if (mean_loss > 10.0 * initial_loss) {
            if (++diverged_streak >= 3) {
                res.aborted = true;
                res.abort_reason = "loss exceeded 10x its initial value for 3 outer iterations";
                break;
            }
        } else {
            diverged_streak = 0;
        }
    }

    res.bundle = params_to_bundle(params, cfg);
    res.checkpoint =
        Checkpoint{res.bundle, lagr, std::move(adam), std::move(params), outer_done};
    return res;
}

}  // namespace scwave
