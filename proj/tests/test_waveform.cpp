#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "scwave/rng.hpp"
#include "scwave/waveform.hpp"

using namespace scwave;

TEST_CASE("normalize: unit-energy Gray QPSK passes through") {
    const double s = 1.0 / std::sqrt(2.0);
    ComplexBuffer raw{{-s, -s}, {-s, s}, {s, -s}, {s, s}};
    auto c = normalize_constellation(raw);
    for (size_t i = 0; i < 4; ++i) CHECK(std::abs(c.points[i] - raw[i]) < 1e-12);
}

TEST_CASE("normalize: K=1 raw {0,2} -> {-1,+1}") {
    auto c = normalize_constellation(ComplexBuffer{{0, 0}, {2, 0}});
    CHECK(std::abs(c.points[0] - Complex{-1, 0}) < 1e-12);
    CHECK(std::abs(c.points[1] - Complex{1, 0}) < 1e-12);
}

TEST_CASE("normalize: random weights satisfy invariants") {
    RngStream r(42, "raw");
    ComplexBuffer raw(64);
    for (auto& z : raw) z = Complex{r.uniform(-3, 3), r.uniform(-3, 3)};
    auto c = normalize_constellation(raw);
    Complex mean{0, 0};
    double p = 0;
    for (auto& z : c.points) {
        mean += z;
        p += std::norm(z);
    }
    mean /= 64.0;
    p /= 64.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::fabs(p - 1.0) < 1e-12);
}

TEST_CASE("normalize: degenerate input throws") {
    ComplexBuffer raw(4, Complex{0.7, -0.2});
    CHECK_THROWS(normalize_constellation(raw));
}

TEST_CASE("init_qam(2): QPSK points at (+-1 +-1i)/sqrt(2) with Gray labels") {
    auto c = init_qam(2);
    const double s = 1.0 / std::sqrt(2.0);
    REQUIRE(c.points.size() == 4);
    for (auto& z : c.points) {
        CHECK(std::fabs(std::fabs(z.real()) - s) < 1e-12);
        CHECK(std::fabs(std::fabs(z.imag()) - s) < 1e-12);
    }
    // Gray property: labels of nearest neighbours differ in exactly one bit.
    for (uint32_t a = 0; a < 4; ++a) {
        for (uint32_t b = 0; b < a; ++b) {
            const double d = std::abs(c.points[a] - c.points[b]);
            if (d < 2 * s + 1e-9) {
                const int bits = __builtin_popcount(a ^ b);
                CHECK(bits == 1);
            }
        }
    }
    CHECK_THROWS_AS(init_qam(3), std::invalid_argument);
    CHECK_THROWS_AS(init_qam(8), std::invalid_argument);
}

TEST_CASE("init_apsk64: ring sizes 8+16+20+20 and unit power") {
    auto c = init_apsk64();
    REQUIRE(c.points.size() == 64);
    std::map<long, int> rings;  // radius (rounded) -> count
    double p = 0;
    for (auto& z : c.points) {
        rings[std::lround(std::abs(z) * 1e9)]++;
        p += std::norm(z);
    }
    REQUIRE(rings.size() == 4);
    std::vector<int> counts;
    for (auto& [rad, n] : rings) counts.push_back(n);
    CHECK(counts == std::vector<int>{8, 16, 20, 20});
    CHECK(std::fabs(p / 64.0 - 1.0) < 1e-9);
}

TEST_CASE("init_rrc: peak at center, symmetric, unit energy") {
    auto f = init_rrc(0.3, 32, 4);
    REQUIRE(f.length() == 129);
    const int c = 64;
    for (int i = 0; i < f.length(); ++i) {
        CHECK(f.taps[size_t(i)] <= f.taps[size_t(c)] + 1e-15);
        CHECK(std::fabs(f.taps[size_t(i)] - f.taps[size_t(f.length() - 1 - i)]) < 1e-12);
    }
    double e = 0;
    for (double v : f.taps) e += v * v;
    CHECK(std::fabs(e - 1.0) < 1e-9);
    CHECK_THROWS(init_rrc(0.0, 32, 4));
}

TEST_CASE("init_rrc: beta=0.25 hits the removable singularity cleanly") {
    auto f = init_rrc(0.25, 8, 4);  // t = 1/(4*0.25) = 1 lies on the tap grid
    for (double v : f.taps) CHECK(std::isfinite(v));
}

TEST_CASE("init_rrc: cascade g*g is Nyquist at symbol instants") {
    auto f = init_rrc(0.3, 32, 4);
    const int L = f.length();
    // full self-convolution
    RealBuffer cas(size_t(2 * L - 1), 0.0);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) cas[size_t(i + j)] += f.taps[size_t(i)] * f.taps[size_t(j)];
    const int mid = L - 1;
    CHECK(std::fabs(cas[size_t(mid)] - 1.0) < 1e-6);
    for (int k = 1; k <= 32; ++k) {
        CHECK(std::fabs(cas[size_t(mid + 4 * k)]) < 1e-3);
        CHECK(std::fabs(cas[size_t(mid - 4 * k)]) < 1e-3);
    }
}

TEST_CASE("map_bits: label identity and full coverage") {
    auto c = init_qam(2);
    // column (0,0) -> label 0
    auto s = map_bits({0, 0}, c);
    CHECK(s[0] == c.points[0]);
    // all 4 distinct columns, MSB first
    std::vector<uint8_t> bits{0, 0, 0, 1, 1, 0, 1, 1};
    auto sym = map_bits(bits, c);
    REQUIRE(sym.size() == 4);
    std::set<std::pair<double, double>> seen;
    for (size_t i = 0; i < 4; ++i) {
        CHECK(sym[i] == c.points[i]);
        seen.insert({sym[i].real(), sym[i].imag()});
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("map_bits: noiseless nearest-point roundtrip recovers bits") {
    auto c = init_apsk64();
    RngStream r(7, "bits");
    std::vector<uint8_t> bits(6 * 200);
    for (auto& b : bits) b = r.bit();
    auto sym = map_bits(bits, c);
    for (size_t n = 0; n < sym.size(); ++n) {
        size_t best = 0;
        double bd = 1e300;
        for (size_t i = 0; i < c.points.size(); ++i) {
            const double d = std::norm(sym[n] - c.points[i]);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        for (int k = 0; k < 6; ++k) {
            const uint8_t want = bits[n * 6 + size_t(k)];
            const uint8_t got = (best >> (5 - k)) & 1u;
            CHECK(want == got);
        }
    }
}

TEST_CASE("zadoff_chu: constant modulus, closed form, autocorrelation") {
    auto z = zadoff_chu(7, 1);
    for (auto& v : z) CHECK(std::fabs(std::abs(v) - 1.0) < 1e-12);
    for (int n = 0; n < 7; ++n) {
        const double ph = -M_PI * n * (n + 1) / 7.0;
        CHECK(std::abs(z[size_t(n)] - Complex{std::cos(ph), std::sin(ph)}) < 1e-12);
    }
    // periodic autocorrelation ~ delta
    auto zz = zadoff_chu(63, 5);
    for (int lag = 1; lag < 63; ++lag) {
        Complex acc{0, 0};
        for (int n = 0; n < 63; ++n) acc += zz[size_t(n)] * std::conj(zz[size_t((n + lag) % 63)]);
        CHECK(std::abs(acc) < 1e-9);
    }
    CHECK_THROWS(zadoff_chu(8, 2));
}

TEST_CASE("assemble_frame: passthrough when Q=0, N_CP=0") {
    FrameConfig cfg{.k_bits = 2, .n_total = 8, .n_cp = 0, .q_groups = 0, .n_ptrs = 0, .n_rpn = 0};
    ComplexBuffer d(8);
    for (int i = 0; i < 8; ++i) d[size_t(i)] = Complex{double(i), 0};
    auto [frame, lay] = assemble_frame(d, cfg);
    CHECK(frame == d);
    CHECK(lay.n_data() == 8);
}

TEST_CASE("assemble_frame: hand-constructed layout N_D=8 Q=2 N_P=1 N_CP=2") {
    FrameConfig cfg{.k_bits = 2, .n_total = 12, .n_cp = 2, .q_groups = 2, .n_ptrs = 1, .n_rpn = 0};
    REQUIRE(cfg.n_data() == 8);
    ComplexBuffer d(8);
    for (int i = 0; i < 8; ++i) d[size_t(i)] = Complex{double(i + 1), 0};
    auto pil = pilot_sequence(cfg);
    auto [frame, lay] = assemble_frame(d, cfg);
    // body = [P0 d1 d2 d3 d4 P1 d5 d6 d7 d8]; CP = last 2 body symbols = d7 d8
    ComplexBuffer expect{d[6], d[7], pil[0], d[0], d[1], d[2], d[3], pil[1], d[4], d[5], d[6], d[7]};
    REQUIRE(frame.size() == 12);
    for (size_t i = 0; i < 12; ++i) CHECK(std::abs(frame[i] - expect[i]) < 1e-15);
    CHECK(lay.group_start == std::vector<int>{0, 5});
}

TEST_CASE("assemble_frame: layout partitions the body and roundtrips data") {
    RngStream r(3, "cfg");
    for (int trial = 0; trial < 20; ++trial) {
        FrameConfig cfg;
        cfg.k_bits = 2;
        cfg.q_groups = int(r.uniform(0, 5));
        cfg.n_ptrs = cfg.q_groups ? 1 + int(r.uniform(0, 3)) : 0;
        cfg.n_rpn = cfg.q_groups ? int(r.uniform(0, 3)) : 0;
        cfg.n_cp = int(r.uniform(0, 5));
        const int nd = 8 + int(r.uniform(0, 24));
        cfg.n_total = nd + cfg.n_pilots() + cfg.n_cp;
        ComplexBuffer d(static_cast<size_t>(nd));
        for (auto& z : d) z = Complex{r.uniform(-1, 1), r.uniform(-1, 1)};
        auto [frame, lay] = assemble_frame(d, cfg);

        // body positions are covered exactly once by groups + data
        std::vector<int> hit(size_t(cfg.n_body()), 0);
        for (int q = 0; q < cfg.q_groups; ++q) {
            for (int i : lay.ptrs_body_indices(q)) hit[size_t(i)]++;
            for (int i : lay.rpn_body_indices(q)) hit[size_t(i)]++;
        }
        for (int i : lay.data_body_index) hit[size_t(i)]++;
        for (int h : hit) CHECK(h == 1);

        // data extraction via layout recovers the input exactly
        for (int j = 0; j < nd; ++j) {
            const int body_idx = lay.data_body_index[size_t(j)];
            CHECK(frame[size_t(cfg.n_cp + body_idx)] == d[size_t(j)]);
        }
        // CP copies the body tail
        for (int i = 0; i < cfg.n_cp; ++i)
            CHECK(frame[size_t(i)] == frame[size_t(cfg.n_total - cfg.n_cp + i)]);
    }
}

TEST_CASE("assemble_frame: infeasible layout throws") {
    FrameConfig cfg{.k_bits = 2, .n_total = 6, .n_cp = 0, .q_groups = 4, .n_ptrs = 2, .n_rpn = 0};
    ComplexBuffer d;
    CHECK_THROWS(assemble_frame(d, cfg));
}

TEST_CASE("pulse_shape: single unit symbol reproduces the taps") {
    auto f = init_rrc(0.3, 4, 4);
    auto y = pulse_shape(ComplexBuffer{{1, 0}}, f);
    REQUIRE(int(y.size()) == 4 + f.length() - 1);
    for (int i = 0; i < f.length(); ++i) CHECK(std::fabs(y[size_t(i)].real() - f.taps[size_t(i)]) < 1e-12);
}

TEST_CASE("pulse_shape: constant frame interior equals polyphase branch sums") {
    auto f = init_rrc(0.3, 8, 4);
    const int n = 64;
    ComplexBuffer frame(n, Complex{1.0, 0.0});
    auto y = pulse_shape(frame, f);
    CHECK(int(y.size()) == 4 * n + f.length() - 1);
    // at steady state, output sample with phase p sums every 4th tap
    for (int p = 0; p < 4; ++p) {
        double branch = 0;
        for (int i = p; i < f.length(); i += 4) branch += f.taps[size_t(i)];
        const int mid = 4 * (n / 2) + p;
        CHECK(std::fabs(y[size_t(mid)].real() - branch) < 1e-9);
    }
}
