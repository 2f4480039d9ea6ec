#include "scwave/demappers.hpp"

namespace scwave {

namespace {

double lse(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

double clamp_llr(double g, double bound) {
    if (!std::isfinite(bound)) return g;
    return std::min(std::max(g, -bound), bound);
}

// Combine per-point log-likelihoods into per-bit logits via the subset LSE.
LlrBlock combine(const std::vector<std::vector<double>>& loglik, size_t n, int k,
                 const std::vector<std::vector<int>>& set0,
                 const std::vector<std::vector<int>>& set1, double clamp) {
    LlrBlock out;
    out.k_bits = k;
    out.llr.resize(n * static_cast<size_t>(k));
    std::vector<double> buf;
    for (size_t s = 0; s < n; ++s) {
        for (int b = 0; b < k; ++b) {
            buf.clear();
            for (int i : set1[static_cast<size_t>(b)]) buf.push_back(loglik[static_cast<size_t>(i)][s]);
            const double l1 = lse(buf);
            buf.clear();
            for (int i : set0[static_cast<size_t>(b)]) buf.push_back(loglik[static_cast<size_t>(i)][s]);
            const double l0 = lse(buf);
            out.at(s, b) = clamp_llr(l1 - l0, clamp);
        }
    }
    check_finite(out.llr, "llrs");
    return out;
}

}  // namespace

std::vector<int> bit_subset(const Constellation& c, int bit, int value) {
    require(bit >= 0 && bit < c.k_bits, "bit_subset: bit index out of range");
    require(value == 0 || value == 1, "bit_subset: value must be 0 or 1");
    std::vector<int> idx;
    const int shift = c.k_bits - 1 - bit;  // bit 0 is the MSB of the label
    for (int i = 0; i < static_cast<int>(c.size()); ++i)
        if (((i >> shift) & 1) == value) idx.push_back(i);
    return idx;
}

LlrBlock aod_llrs(const ComplexBuffer& r, const Constellation& c, double sigma_n2,
                  const LlrOptions& opt) {
    require(sigma_n2 > 0.0, "aod_llrs: sigma_n^2 must be positive");
    const size_t n = r.size();
    const int k = c.k_bits;
    std::vector<std::vector<int>> set0(static_cast<size_t>(k)), set1(static_cast<size_t>(k));
    for (int b = 0; b < k; ++b) {
        set0[static_cast<size_t>(b)] = bit_subset(c, b, 0);
        set1[static_cast<size_t>(b)] = bit_subset(c, b, 1);
    }
    std::vector<std::vector<double>> loglik(c.size(), std::vector<double>(n));
    for (size_t i = 0; i < c.size(); ++i) {
        const Complex ci = c.points[i];
        for (size_t s = 0; s < n; ++s) loglik[i][s] = -std::norm(r[s] - ci) / sigma_n2;
    }
    return combine(loglik, n, k, set0, set1, opt.clamp);
}

LlrBlock pnd_llrs(const ComplexBuffer& r, const Constellation& c, double sigma_n2, double sigma_p2,
                  PndVariant variant, const LlrOptions& opt) {
    require(sigma_n2 > 0.0, "pnd_llrs: sigma_n^2 must be positive");
    require(sigma_p2 >= 0.0, "pnd_llrs: sigma_p^2 must be nonnegative");
    const size_t n = r.size();
    const int k = c.k_bits;
    std::vector<std::vector<int>> set0(static_cast<size_t>(k)), set1(static_cast<size_t>(k));
    for (int b = 0; b < k; ++b) {
        set0[static_cast<size_t>(b)] = bit_subset(c, b, 0);
        set1[static_cast<size_t>(b)] = bit_subset(c, b, 1);
    }
    std::vector<std::vector<double>> loglik(c.size(), std::vector<double>(n));
    for (size_t i = 0; i < c.size(); ++i) {
        const Complex ci = c.points[i];
        const double mag = std::abs(ci);
        if (variant == PndVariant::Hsnr)
            require(mag > 0.0, "pnd_llrs: HSNR variant undefined for a zero-magnitude point");
        const double tang_var = sigma_p2 * mag * mag + sigma_n2;
        const double log_term = std::log(tang_var);
        if (variant == PndVariant::Lpn) {
            const double phi = std::arg(ci);
            const Complex rot{std::cos(phi), -std::sin(phi)};
            for (size_t s = 0; s < n; ++s) {
                const Complex d = r[s] * rot;
                const double radial = d.real() - mag;
                loglik[i][s] =
                    -radial * radial / sigma_n2 - d.imag() * d.imag() / tang_var - log_term;
            }
        } else {
            const double ang_var = sigma_p2 + sigma_n2 / (mag * mag);
            const double phi = std::arg(ci);
            for (size_t s = 0; s < n; ++s) {
                const double radial = std::abs(r[s]) - mag;
                const double dang = wrap_angle(std::arg(r[s]) - phi);
                loglik[i][s] = -radial * radial / sigma_n2 - dang * dang / ang_var - log_term;
            }
        }
    }
    return combine(loglik, n, k, set0, set1, opt.clamp);
}

size_t NnDemapper::weight_count(const std::vector<int>& dims) {
    size_t n = 0;
    for (size_t l = 0; l + 1 < dims.size(); ++l)
        n += static_cast<size_t>(dims[l + 1]) * dims[l] + static_cast<size_t>(dims[l + 1]);
    return n;
}

size_t NnDemapper::weight_count() const { return weight_count(dims); }

NnDemapper NnDemapper::init(int k_bits, const std::vector<int>& hidden, RngStream& rng) {
    NnDemapper net;
    net.k_bits = k_bits;
    net.dims.push_back(2);
    for (int h : hidden) net.dims.push_back(h);
    net.dims.push_back(k_bits);
    net.weights.reserve(weight_count(net.dims));
    for (size_t l = 0; l + 1 < net.dims.size(); ++l) {
        const int nin = net.dims[l];
        const int nout = net.dims[l + 1];
        const double sd = std::sqrt(2.0 / nin);
        for (int i = 0; i < nout * nin; ++i) net.weights.push_back(sd * rng.gaussian());
        for (int i = 0; i < nout; ++i) net.weights.push_back(0.0);
    }
    return net;
}

LlrBlock nn_demap(const ComplexBuffer& r, const NnDemapper& net, const LlrOptions& opt) {
    require(net.dims.size() >= 2 && net.dims.front() == 2 && net.dims.back() == net.k_bits,
            "nn_demap: inconsistent layer dimensions");
    require(net.weights.size() == net.weight_count(), "nn_demap: weight count mismatch");
    const size_t n = r.size();
    std::vector<double> act(n * 2);
    for (size_t s = 0; s < n; ++s) {
        act[s * 2] = r[s].real();
        act[s * 2 + 1] = r[s].imag();
    }
    size_t w_off = 0;
    for (size_t l = 0; l + 1 < net.dims.size(); ++l) {
        const int nin = net.dims[l];
        const int nout = net.dims[l + 1];
        const double* w = net.weights.data() + w_off;
        const double* b = w + static_cast<size_t>(nout) * nin;
        std::vector<double> next(n * static_cast<size_t>(nout));
        const bool last = (l + 2 == net.dims.size());
        for (size_t s = 0; s < n; ++s) {
            const double* x = act.data() + s * static_cast<size_t>(nin);
            double* y = next.data() + s * static_cast<size_t>(nout);
            for (int o = 0; o < nout; ++o) {
                double acc = b[o];
                const double* wo = w + static_cast<size_t>(o) * nin;
                for (int i = 0; i < nin; ++i) acc += wo[i] * x[i];
                y[o] = last ? acc : std::max(acc, 0.0);
            }
        }
        act = std::move(next);
        w_off += static_cast<size_t>(nout) * nin + static_cast<size_t>(nout);
    }
    LlrBlock out;
    out.k_bits = net.k_bits;
    out.llr.resize(act.size());
    for (size_t i = 0; i < act.size(); ++i) {
        out.llr[i] = std::isfinite(opt.clamp) ? std::min(std::max(act[i], -opt.clamp), opt.clamp)
                                              : act[i];
    }
    check_finite(out.llr, "nn_demap");
    return out;
}

}  // namespace scwave
