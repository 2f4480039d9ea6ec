#pragma once

#include "scwave/bundle.hpp"
#include "scwave/channel.hpp"
#include "scwave/metrics.hpp"
#include "scwave/params.hpp"
#include "scwave/phase_noise.hpp"
#include "scwave/tape.hpp"

namespace scwave {

// L_aug = bce + mu_P*Phi_P + (lambda/2)*Phi_P^2
//             + (1/(2 lambda)) * (max(0, mu_A + lambda*Phi_A)^2 - mu_A^2)
double augmented_loss(double bce, double phi_p, double phi_a, const LagrangianState& st);

// mu_P += lambda*Phi_P; mu_A = max(0, mu_A + lambda*Phi_A); lambda *= tau.
LagrangianState update_multipliers(const LagrangianState& st, double phi_p, double phi_a);

struct TrainConfig {
    FrameConfig frame;
    int span_symbols = 32;
    double beta = 0.3;
    std::string constellation_init = "auto";  // auto | qam | apsk64
    DemapperKind demapper = DemapperKind::Aod;
    std::vector<int> nn_hidden = {64, 64};

    double ebn0_lo_db = 6.0, ebn0_hi_db = 18.0;
    int batch_size = 10;
    int inner_steps = 500;
    int outer_iters = 3;
    size_t power_samples_cap = 400000;
    double learning_rate = 1e-3;

    double eps_p_db = 6.5;
    double eps_a_db = -45.0;
    double lambda0 = 1.0;
    double tau = 2.0;

    bool pn_enabled = false;
    std::string pn_tx_name = "none";
    std::string pn_rx_name = "none";
    double carrier_hz = 120e9;
    double sample_rate = 3.93e9 * 4;

    double code_rate = 1.0;  // trained as an uncoded system
    uint64_t seed = 1;
    double llr_clamp = 30.0;

    LagrangianState initial_lagrangian() const;
    void validate() const;
};

// Frozen randomness for one SGD step (or a held-out evaluation): with the
// parameters as the only free variables the loss becomes deterministic,
// which is what both resumability and finite-difference checks need.
struct FrameDraw {
    std::vector<uint8_t> bits;  // K * N_D, column-major
    RealBuffer pn_phase;        // oversampled; empty when PN is off
    ComplexBuffer noise;        // oversampled; empty when noiseless
};

struct BatchRealization {
    double ebn0_db = 0.0;
    double sigma_n2 = 0.0;
    double sigma_p2_true = 0.0;  // ground-truth residual PN proxy for the PNDs
    std::vector<FrameDraw> frames;
};

BatchRealization draw_batch(const TrainConfig& cfg, const FrameLayout& lay, uint64_t step_index,
                            std::string_view substream = "train");

// Initial trainable state: APSK64/QAM constellation (raw weights equal the
// normalized init exactly), RRC filter pair, and NND weights when selected.
// Group order: constellation, g_tx, g_rx[, nnd].
ParamSet init_params(const TrainConfig& cfg);

WaveformBundle params_to_bundle(const ParamSet& params, const TrainConfig& cfg);

struct GraphRefs {
    Tape::Var loss, bce, phi_p, phi_a;
};

// Differentiable forward pass for one batch: normalizations, mapping, frame
// assembly, pulse shaping, impairments, receive chain, PTRS compensation,
// demapping, BCE and both constraint terms, combined into the augmented loss.
GraphRefs build_step_graph(Tape& t, const std::vector<Tape::Var>& leaves, const TrainConfig& cfg,
                           const FrameLayout& lay, const BatchRealization& batch,
                           const LagrangianState& lagr);

// Same quantities through the plain (non-tape) module path; used to pin the
// training graph to the evaluation implementation.
struct PlainLoss {
    double bce = 0.0, phi_p = 0.0, phi_a = 0.0, loss = 0.0;
};
PlainLoss eval_loss_plain(const TrainConfig& cfg, const FrameLayout& lay, const ParamSet& params,
                          const BatchRealization& batch, const LagrangianState& lagr);

// J steps of sample -> forward -> backward -> Adam on the given state.
// Returns the mean augmented loss over the executed steps.
double inner_sgd(ParamSet& params, AdamState& adam, const LagrangianState& lagr,
                 const TrainConfig& cfg, const FrameLayout& lay, int steps,
                 uint64_t step_index_base);

// BCE of the current parameters on frozen held-out batches at the midpoint
// Eb/N0 (constraints excluded).
double heldout_bce(const TrainConfig& cfg, const ParamSet& params, int n_batches = 4);

struct TrainLogRow {
    int outer = 0;
    double bce = 0.0, phi_p = 0.0, aclr_db = 0.0, papr_db_1e3 = 0.0;
    double mu_p = 0.0, mu_a = 0.0, lambda = 0.0;
    double heldout = 0.0;
};

struct TrainResult {
    WaveformBundle bundle;
    std::vector<TrainLogRow> log;
    Checkpoint checkpoint;
    bool aborted = false;
    std::string abort_reason;
};

TrainResult train(const TrainConfig& cfg, const Checkpoint* resume = nullptr);

}  // namespace scwave
