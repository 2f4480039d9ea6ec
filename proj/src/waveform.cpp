#include "scwave/waveform.hpp"

#include <numeric>

#include "scwave/dsp.hpp"

namespace scwave {

namespace {

bool is_pow2_int(int v) { return v > 0 && (v & (v - 1)) == 0; }

int ilog2(int v) {
    int k = 0;
    while ((1 << k) < v) ++k;
    return k;
}

}  // namespace

uint32_t gray_code(uint32_t v) { return v ^ (v >> 1); }

uint32_t gray_decode(uint32_t g) {
    uint32_t b = g;
    while (g >>= 1) b ^= g;
    return b;
}

Constellation normalize_constellation(const ComplexBuffer& raw) {
    require(is_pow2_int(static_cast<int>(raw.size())) && raw.size() >= 2,
            "constellation: need 2^K points, K >= 1");
    Complex mean{0.0, 0.0};
    for (const Complex& c : raw) mean += c;
    mean /= static_cast<double>(raw.size());
    double power = 0.0;
    for (const Complex& c : raw) power += std::norm(c - mean);
    power /= static_cast<double>(raw.size());
    if (power <= 0.0 || !std::isfinite(power))
        throw std::invalid_argument("constellation: degenerate raw weights (zero RMS)");
    const double inv_rms = 1.0 / std::sqrt(power);
    Constellation out;
    out.k_bits = ilog2(static_cast<int>(raw.size()));
    out.points.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out.points[i] = (raw[i] - mean) * inv_rms;
    check_finite(out.points, "normalize_constellation");
    return out;
}

Constellation init_qam(int k) {
    require(k == 2 || k == 4 || k == 6, "init_qam: K must be 2, 4 or 6");
    const int half = k / 2;
    const int m = 1 << half;  // levels per axis
    ComplexBuffer pts(static_cast<size_t>(1) << k);
    for (uint32_t label = 0; label < pts.size(); ++label) {
        // First K/2 bits (MSBs) Gray-select the I level, the rest the Q level.
        const uint32_t gi = label >> half;
        const uint32_t gq = label & ((1u << half) - 1u);
        const int li = static_cast<int>(gray_decode(gi));
        const int lq = static_cast<int>(gray_decode(gq));
        pts[label] = Complex{double(2 * li - (m - 1)), double(2 * lq - (m - 1))};
    }
    return normalize_constellation(pts);
}

Constellation init_apsk64() {
    // DVB-S2 style 8+16+20+20 rings. Radii follow the published ring-ratio
    // tables (1 : 2.2 : 3.6 : 4.5) and are renormalized to unit power below.
    // Labelling: points ordered ring-major (inner to outer, by angle, with a
    // half-slot rotation per ring) and position p gets the 6-bit Gray code of
    // p, so angularly adjacent points differ in one bit within a ring and the
    // ring index varies only in the slow (high) bits.
    const int sizes[4] = {8, 16, 20, 20};
    const double radii[4] = {1.0, 2.2, 3.6, 4.5};
    ComplexBuffer pts(64);
    int p = 0;
    for (int ring = 0; ring < 4; ++ring) {
        const int n = sizes[ring];
        for (int i = 0; i < n; ++i) {
            const double ang = 2.0 * M_PI * (static_cast<double>(i) + 0.5) / n;
            const uint32_t label = gray_code(static_cast<uint32_t>(p));
            pts[label] = radii[ring] * Complex{std::cos(ang), std::sin(ang)};
            ++p;
        }
    }
    return normalize_constellation(pts);
}

namespace {

double rrc_impulse(double t, double beta) {
    // t in symbol periods
    if (std::fabs(t) < 1e-10) return 1.0 - beta + 4.0 * beta / M_PI;
    const double x = 4.0 * beta * t;
    if (std::fabs(std::fabs(x) - 1.0) < 1e-9) {
        const double a = M_PI / (4.0 * beta);
        return (beta / std::sqrt(2.0)) *
               ((1.0 + 2.0 / M_PI) * std::sin(a) + (1.0 - 2.0 / M_PI) * std::cos(a));
    }
    return (std::sin(M_PI * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(M_PI * t * (1.0 + beta))) /
           (M_PI * t * (1.0 - x * x));
}

}  // namespace

PulseFilter make_filter(RealBuffer taps, int span_symbols, int oversampling) {
    require(!taps.empty(), "filter: empty taps");
    require(static_cast<int>(taps.size()) == span_symbols * oversampling + 1,
            "filter: tap count must be span*M + 1");
    double e = 0.0;
    for (double v : taps) e += v * v;
    require(e > 0.0, "filter: zero-energy taps");
    const double inv = 1.0 / std::sqrt(e);
    for (double& v : taps) v *= inv;
    check_finite(taps, "make_filter");
    return PulseFilter{span_symbols, oversampling, std::move(taps)};
}

PulseFilter init_rrc(double beta, int span_symbols, int oversampling) {
    require(beta > 0.0 && beta <= 1.0, "init_rrc: beta must be in (0, 1]");
    require(span_symbols >= 1 && oversampling >= 1, "init_rrc: bad span/oversampling");
    const int L = span_symbols * oversampling + 1;
    const int c = (L - 1) / 2;
    RealBuffer taps(static_cast<size_t>(L));
    for (int i = 0; i < L; ++i)
        taps[static_cast<size_t>(i)] = rrc_impulse(double(i - c) / oversampling, beta);
    return make_filter(std::move(taps), span_symbols, oversampling);
}

ComplexBuffer map_bits(const std::vector<uint8_t>& bits, const Constellation& c) {
    const int k = c.k_bits;
    require(k >= 1 && bits.size() % static_cast<size_t>(k) == 0, "map_bits: bit count not a multiple of K");
    const size_t n = bits.size() / static_cast<size_t>(k);
    ComplexBuffer out(n);
    for (size_t s = 0; s < n; ++s) {
        uint32_t label = 0;
        for (int b = 0; b < k; ++b) label = (label << 1) | (bits[s * k + static_cast<size_t>(b)] & 1u);
        out[s] = c.points[label];
    }
    return out;
}

ComplexBuffer zadoff_chu(int length, int root) {
    require(length >= 1, "zadoff_chu: length must be positive");
    require(root >= 1 && std::gcd(root, length) == 1, "zadoff_chu: root must be coprime with length");
    ComplexBuffer out(static_cast<size_t>(length));
    for (int n = 0; n < length; ++n) {
        // odd length: u*n*(n+1); even: u*n^2
        const double num = (length % 2 == 1) ? double(n) * (n + 1) : double(n) * n;
        const double ph = -M_PI * root * num / length;
        out[static_cast<size_t>(n)] = Complex{std::cos(ph), std::sin(ph)};
    }
    return out;
}

void FrameConfig::validate() const {
    require(n_total >= 1 && n_cp >= 0 && q_groups >= 0 && n_ptrs >= 0 && n_rpn >= 0,
            "frame: negative counts");
    require(n_cp <= n_body() + n_cp && n_cp < n_total, "frame: CP exceeds block");
    require(q_groups == 0 || n_ptrs + n_rpn > 0, "frame: groups must be non-empty");
    if (n_data() < 0) throw std::invalid_argument("frame: pilot groups do not fit in block");
    require(oversampling >= 1, "frame: oversampling must be >= 1");
}

std::vector<int> FrameLayout::ptrs_body_indices(int q) const {
    std::vector<int> v(static_cast<size_t>(n_ptrs));
    for (int i = 0; i < n_ptrs; ++i) v[static_cast<size_t>(i)] = group_start[static_cast<size_t>(q)] + i;
    return v;
}

std::vector<int> FrameLayout::rpn_body_indices(int q) const {
    std::vector<int> v(static_cast<size_t>(n_rpn));
    for (int i = 0; i < n_rpn; ++i)
        v[static_cast<size_t>(i)] = group_start[static_cast<size_t>(q)] + n_ptrs + i;
    return v;
}

FrameLayout make_layout(const FrameConfig& cfg) {
    cfg.validate();
    const int nd = cfg.n_data();
    const int q = cfg.q_groups;
    const int gsz = cfg.n_ptrs + cfg.n_rpn;

    FrameLayout lay;
    lay.n_total = cfg.n_total;
    lay.n_cp = cfg.n_cp;
    lay.n_ptrs = cfg.n_ptrs;
    lay.n_rpn = cfg.n_rpn;

    // Body order: [G_0 D_0 G_1 D_1 ... G_{Q-1} D_{Q-1}] with near-equal runs
    // (the first nd % q runs take the extra symbol). Q = 0 degenerates to data only.
    const int base = q > 0 ? nd / q : 0;
    const int rem = q > 0 ? nd % q : 0;
    int body_pos = 0;
    int data_pos = 0;
    lay.body_source.resize(static_cast<size_t>(cfg.n_body()));
    if (q == 0) {
        for (int i = 0; i < nd; ++i) {
            lay.body_source[static_cast<size_t>(i)] = i;
            lay.data_body_index.push_back(i);
        }
        body_pos = nd;
    } else {
        for (int g = 0; g < q; ++g) {
            lay.group_start.push_back(body_pos);
            lay.group_center.push_back(body_pos + (cfg.n_ptrs - 1) / 2.0);
            for (int i = 0; i < gsz; ++i)
                lay.body_source[static_cast<size_t>(body_pos++)] = nd + g * gsz + i;
            const int run = base + (g < rem ? 1 : 0);
            for (int i = 0; i < run; ++i) {
                lay.data_body_index.push_back(body_pos);
                lay.body_source[static_cast<size_t>(body_pos++)] = data_pos++;
            }
        }
    }
    require(body_pos == cfg.n_body(), "frame: layout accounting error");

    lay.frame_from_body.resize(static_cast<size_t>(cfg.n_total));
    for (int i = 0; i < cfg.n_cp; ++i)
        lay.frame_from_body[static_cast<size_t>(i)] = cfg.n_body() - cfg.n_cp + i;
    for (int i = 0; i < cfg.n_body(); ++i)
        lay.frame_from_body[static_cast<size_t>(cfg.n_cp + i)] = i;
    return lay;
}

ComplexBuffer pilot_sequence(const FrameConfig& cfg) {
    const int n = cfg.n_pilots();
    if (n == 0) return {};
    return zadoff_chu(n, cfg.zc_root);
}

std::pair<ComplexBuffer, FrameLayout> assemble_frame(const ComplexBuffer& data,
                                                     const FrameConfig& cfg) {
    FrameLayout lay = make_layout(cfg);
    require(static_cast<int>(data.size()) == cfg.n_data(), "assemble_frame: data length != N_D");
    ComplexBuffer src = data;
    const ComplexBuffer pilots = pilot_sequence(cfg);
    src.insert(src.end(), pilots.begin(), pilots.end());

    ComplexBuffer body(static_cast<size_t>(cfg.n_body()));
    for (size_t i = 0; i < body.size(); ++i) body[i] = src[static_cast<size_t>(lay.body_source[i])];

    ComplexBuffer frame(static_cast<size_t>(cfg.n_total));
    for (size_t i = 0; i < frame.size(); ++i)
        frame[i] = body[static_cast<size_t>(lay.frame_from_body[i])];
    return {std::move(frame), std::move(lay)};
}

ComplexBuffer pulse_shape(const ComplexBuffer& frame, const PulseFilter& g_tx) {
    return convolve(upsample(frame, g_tx.oversampling), g_tx.taps);
}

}  // namespace scwave
