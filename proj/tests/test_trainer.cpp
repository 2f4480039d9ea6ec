#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scwave/rng.hpp"
#include "scwave/trainer.hpp"

using namespace scwave;

namespace {

TrainConfig small_cfg(DemapperKind dk, bool pn) {
    TrainConfig cfg;
    cfg.frame = FrameConfig{.k_bits = 2, .n_total = 64, .n_cp = 4, .q_groups = 2, .n_ptrs = 2,
                            .n_rpn = 1, .oversampling = 2, .zc_root = 1};
    cfg.span_symbols = 4;
    cfg.beta = 0.3;
    cfg.demapper = dk;
    cfg.nn_hidden = {8, 8};
    cfg.ebn0_lo_db = 6.0;
    cfg.ebn0_hi_db = 14.0;
    cfg.batch_size = 2;
    cfg.inner_steps = 5;
    cfg.outer_iters = 2;
    cfg.learning_rate = 1e-3;
    cfg.eps_p_db = 6.0;
    cfg.eps_a_db = -30.0;
    cfg.pn_enabled = pn;
    cfg.pn_rx_name = pn ? "rx-ue1" : "none";
    cfg.carrier_hz = 120e9;
    cfg.sample_rate = 3.93e9 * 4;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("augmented_loss: analytic branch values") {
    LagrangianState st;
    st.mu_p = 0.7;
    st.mu_a = 1.3;
    st.lambda = 2.0;
    // Phi_P = 0 and Phi_A <= -mu_A/lambda: hinge inactive
    const double bce = 3.21;
    CHECK(augmented_loss(bce, 0.0, -1.0, st) ==
          doctest::Approx(bce - st.mu_a * st.mu_a / (2.0 * st.lambda)).epsilon(1e-15));
    // mu=0, small lambda, satisfied constraints -> bce
    LagrangianState zero;
    zero.lambda = 1e-9;
    CHECK(augmented_loss(bce, 0.0, -1.0, zero) == doctest::Approx(bce).epsilon(1e-12));
    // Phi_P=0.1, mu_P=2, lambda=10, inactive ACLR hinge -> bce + 0.2 + 0.05
    LagrangianState p;
    p.mu_p = 2.0;
    p.lambda = 10.0;
    CHECK(augmented_loss(1.0, 0.1, -1.0, p) == doctest::Approx(1.0 + 0.25).epsilon(1e-15));
    LagrangianState bad;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(augmented_loss(1.0, 0.0, 0.0, bad), std::invalid_argument);
}

TEST_CASE("update_multipliers: exact rules and lambda sequence") {
    LagrangianState st;
    st.mu_p = 1.0;
    st.mu_a = 1.0;
    st.lambda = 2.0;
    st.tau = 2.0;
    auto s1 = update_multipliers(st, 0.5, -3.0);
    CHECK(s1.mu_p == 2.0);
    CHECK(s1.mu_a == 0.0);  // max(0, 1 + 2*(-3)) = 0
    CHECK(s1.lambda == 4.0);

    // scripted sequence equals the closed forms exactly
    LagrangianState s;
    s.lambda = 1.0;
    s.tau = 2.0;
    const double phip[] = {0.3, 0.0, 0.125};
    const double phia[] = {-1.0, 0.5, -0.25};
    double mu_p = 0.0, mu_a = 0.0, lambda = 1.0;
    for (int i = 0; i < 3; ++i) {
        s = update_multipliers(s, phip[i], phia[i]);
        mu_p = mu_p + lambda * phip[i];
        mu_a = std::max(0.0, mu_a + lambda * phia[i]);
        lambda *= 2.0;
        CHECK(s.mu_p == mu_p);
        CHECK(s.mu_a == mu_a);
        CHECK(s.lambda == lambda);
    }
    CHECK(s.lambda == 8.0);  // lambda0 * tau^3 exactly
}

TEST_CASE("initial bundle reproduces the baseline waveform") {
    auto cfg = small_cfg(DemapperKind::Aod, false);
    auto bundle = params_to_bundle(init_params(cfg), cfg);
    auto qpsk = init_qam(2);
    for (size_t i = 0; i < 4; ++i)
        CHECK(std::abs(bundle.constellation.points[i] - qpsk.points[i]) < 1e-12);
    auto rrc = init_rrc(0.3, 4, 2);
    for (int i = 0; i < rrc.length(); ++i) {
        CHECK(bundle.g_tx.taps[size_t(i)] == doctest::Approx(rrc.taps[size_t(i)]).epsilon(1e-15));
        CHECK(bundle.g_rx.taps[size_t(i)] == doctest::Approx(rrc.taps[size_t(i)]).epsilon(1e-15));
    }
}

TEST_CASE("training graph matches the plain-module loss path") {
    for (auto dk : {DemapperKind::Aod, DemapperKind::PndLpn, DemapperKind::PndHsnr,
                    DemapperKind::Nnd}) {
        for (bool pn : {false, true}) {
            auto cfg = small_cfg(dk, pn);
            const FrameLayout lay = make_layout(cfg.frame);
            ParamSet params = init_params(cfg);
            // nudge away from the symmetric init so nothing cancels by accident
            RngStream r(3, "nudge");
            for (size_t g = 0; g < params.n_groups(); ++g)
                for (auto& v : params.group(int(g)).value) v += 0.01 * r.uniform(-1, 1);

            const BatchRealization batch = draw_batch(cfg, lay, 7);
            LagrangianState lagr = cfg.initial_lagrangian();
            lagr.mu_p = 0.4;
            lagr.mu_a = 0.2;
            lagr.lambda = 3.0;

            const PlainLoss plain = eval_loss_plain(cfg, lay, params, batch, lagr);
            Tape t;
            const auto leaves = params.make_leaves(t);
            const GraphRefs refs = build_step_graph(t, leaves, cfg, lay, batch, lagr);
            CHECK(t.val(refs.bce)[0] == doctest::Approx(plain.bce).epsilon(1e-9));
            CHECK(t.val(refs.phi_p)[0] == doctest::Approx(plain.phi_p).epsilon(1e-9));
            CHECK(t.val(refs.phi_a)[0] == doctest::Approx(plain.phi_a).epsilon(1e-9));
            CHECK(t.val(refs.loss)[0] == doctest::Approx(plain.loss).epsilon(1e-9));
        }
    }
}

TEST_CASE("augmented-loss gradients match finite differences") {
    for (auto dk : {DemapperKind::Aod, DemapperKind::PndLpn, DemapperKind::Nnd}) {
        auto cfg = small_cfg(dk, dk != DemapperKind::Aod);
        const FrameLayout lay = make_layout(cfg.frame);
        ParamSet params = init_params(cfg);
        RngStream r(5, "nudge");
        for (size_t g = 0; g < params.n_groups(); ++g)
            for (auto& v : params.group(int(g)).value) v += 0.02 * r.uniform(-1, 1);
        const BatchRealization batch = draw_batch(cfg, lay, 3);
        LagrangianState lagr = cfg.initial_lagrangian();
        lagr.mu_p = 0.3;
        lagr.mu_a = 0.1;
        lagr.lambda = 2.0;

        Tape t;
        const auto leaves = params.make_leaves(t);
        const GraphRefs refs = build_step_graph(t, leaves, cfg, lay, batch, lagr);
        t.backward(refs.loss);

        RngStream pick(17, "probe");
        const double h = 1e-5;
        int checked = 0;
        for (size_t g = 0; g < params.n_groups(); ++g) {
            const size_t n = params.group(int(g)).value.size();
            for (int probe = 0; probe < 6; ++probe) {
                const size_t i = size_t(pick.uniform(0, double(n)));
                const double ad = t.grad(leaves[g])[i];
                auto probe_loss = [&](double delta) {
                    ParamSet p2 = params;
                    p2.group(int(g)).value[i] += delta;
                    Tape t2;
                    const auto lv = p2.make_leaves(t2);
                    return t2.val(build_step_graph(t2, lv, cfg, lay, batch, lagr).loss)[0];
                };
                const double fd = (probe_loss(h) - probe_loss(-h)) / (2 * h);
                const double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-8});
                CHECK(std::fabs(fd - ad) / denom < 1e-4);
                ++checked;
            }
        }
        CHECK(checked >= 18);
    }
}

TEST_CASE("smoke training: held-out BCE decreases with frozen constraints") {
    TrainConfig cfg = small_cfg(DemapperKind::Aod, false);
    cfg.frame = FrameConfig{.k_bits = 2, .n_total = 64, .n_cp = 0, .q_groups = 0, .n_ptrs = 0,
                            .n_rpn = 0, .oversampling = 2, .zc_root = 1};
    cfg.eps_p_db = 20.0;   // effectively frozen constraints
    cfg.eps_a_db = 0.0;
    cfg.ebn0_lo_db = cfg.ebn0_hi_db = 5.0;
    cfg.batch_size = 4;
    cfg.seed = 21;

    ParamSet params = init_params(cfg);
    // start from a deliberately bad constellation
    RngStream r(9, "scramble");
    for (auto& v : params.group(0).value) v += 0.35 * r.uniform(-1, 1);
    AdamState adam = AdamState::init_for(params, AdamConfig{.lr = 2e-3});
    const LagrangianState lagr = cfg.initial_lagrangian();
    const FrameLayout lay = make_layout(cfg.frame);

    const double before = heldout_bce(cfg, params);
    inner_sgd(params, adam, lagr, cfg, lay, 200, 0);
    const double after = heldout_bce(cfg, params);
    CHECK(after < before);
}

TEST_CASE("train: deterministic, resumable metadata, lambda schedule") {
    auto cfg = small_cfg(DemapperKind::Aod, false);
    auto r1 = train(cfg);
    auto r2 = train(cfg);
    CHECK(bundle_to_json(r1.bundle) == bundle_to_json(r2.bundle));
    CHECK(!r1.aborted);
    CHECK(r1.checkpoint.lagr.lambda == cfg.lambda0 * std::pow(cfg.tau, cfg.outer_iters));
    CHECK(r1.log.size() == size_t(cfg.outer_iters) + 1);
    // emitted waveform satisfies the structural invariants
    Complex mean{0, 0};
    double p = 0;
    for (auto& z : r1.bundle.constellation.points) {
        mean += z;
        p += std::norm(z);
    }
    CHECK(std::abs(mean) / 4.0 < 1e-12);
    CHECK(std::fabs(p / 4.0 - 1.0) < 1e-9);
    double e = 0;
    for (double v : r1.bundle.g_tx.taps) e += v * v;
    CHECK(std::fabs(e - 1.0) < 1e-9);
}

TEST_CASE("train: unattainable PAPR target grows mu_P monotonically") {
    auto cfg = small_cfg(DemapperKind::Aod, false);
    cfg.eps_p_db = 0.0;  // impossible for a filtered waveform
    cfg.outer_iters = 3;
    cfg.inner_steps = 3;
    auto res = train(cfg);
    double prev = -1.0;
    for (size_t i = 0; i < res.log.size(); ++i) {
        CHECK(res.log[i].mu_p >= prev);
        prev = res.log[i].mu_p;
        if (i > 0) CHECK(res.log[i].phi_p > 0.0);
    }
    CHECK(res.checkpoint.lagr.mu_p > 0.0);
}

TEST_CASE("checkpoint: save/load round trip preserves training state") {
    auto cfg = small_cfg(DemapperKind::Nnd, false);
    cfg.inner_steps = 3;
    cfg.outer_iters = 1;
    auto res = train(cfg);
    const std::string path = "/tmp/scwave_test_ckpt.json";
    save_checkpoint(res.checkpoint, path);
    auto back = load_checkpoint(path);
    CHECK(back.outer_done == res.checkpoint.outer_done);
    CHECK(back.lagr.lambda == res.checkpoint.lagr.lambda);
    CHECK(back.adam.step_count == res.checkpoint.adam.step_count);
    for (size_t g = 0; g < back.params.n_groups(); ++g)
        CHECK(back.params.group(int(g)).value == res.checkpoint.params.group(int(g)).value);

    // resuming continues the outer loop
    cfg.outer_iters = 2;
    auto cont = train(cfg, &back);
    CHECK(cont.checkpoint.outer_done == 2);
}

TEST_CASE("bundle: decimal serialization round-trips exactly") {
    auto cfg = small_cfg(DemapperKind::Nnd, false);
    ParamSet params = init_params(cfg);
    RngStream r(13, "jitter");
    for (size_t g = 0; g < params.n_groups(); ++g)
        for (auto& v : params.group(int(g)).value) v += 1e-3 * r.uniform(-1, 1);
    const WaveformBundle b = params_to_bundle(params, cfg);
    const WaveformBundle back = bundle_from_json(bundle_to_json(b));
    for (size_t i = 0; i < b.constellation.points.size(); ++i)
        CHECK(back.constellation.points[i] == b.constellation.points[i]);
    CHECK(back.g_tx.taps == b.g_tx.taps);
    CHECK(back.g_rx.taps == b.g_rx.taps);
    CHECK(back.nnd->weights == b.nnd->weights);
    CHECK(bundle_to_json(back) == bundle_to_json(b));
}

TEST_CASE("heldout_bce is stable for fixed parameters") {
    auto cfg = small_cfg(DemapperKind::Aod, false);
    auto params = init_params(cfg);
    const double a = heldout_bce(cfg, params);
    const double b = heldout_bce(cfg, params);
    CHECK(a == b);
    CHECK(a > 0.0);
    CHECK(a < 2.0 * cfg.frame.k_bits);
}
