#pragma once

#include <map>
#include <string>

#include "scwave/bundle.hpp"
#include "scwave/metrics.hpp"
#include "scwave/trainer.hpp"

namespace scwave {

// Flat resolved experiment description. Every field starts at a documented
// default; presets, config files and CLI flags overwrite values and record
// where each one came from (for the resolved-config echo).
struct ExperimentConfig {
    std::string scenario = "custom";
    double carrier_ghz = 120.0;
    double bandwidth_ghz = 3.93;

    FrameConfig frame{.k_bits = 6, .n_total = 4096, .n_cp = 288, .q_groups = 32, .n_ptrs = 4,
                      .n_rpn = 1, .oversampling = 4, .zc_root = 1};
    int span_symbols = 32;
    double rolloff = 0.3;
    std::string constellation_init = "auto";

    bool pn_enabled = true;
    std::string pn_tx = "tx-lmx2595";
    std::string pn_rx = "rx-ue1";

    std::string demapper = "aod";
    std::vector<int> nn_hidden = {64, 64};

    double eps_p_db = 6.5;
    double eps_a_db = -45.0;

    double ebn0_lo_db = 6.0, ebn0_hi_db = 18.0;
    int batch_size = 10;
    int inner_steps = 500;
    int outer_iters = 3;
    size_t power_samples = 400000;
    double learning_rate = 1e-3;
    double lambda0 = 1.0;
    double tau = 2.0;

    std::vector<double> eval_ebn0_db = {6, 8, 10, 12, 14, 16, 18};
    int eval_frames = 50;
    double code_rate = 1.0;
    bool eval_true_variances = false;
    int threads = 1;
    double llr_clamp = 30.0;

    uint64_t seed = 1;
    std::string output_dir = "out";

    std::map<std::string, std::string> sources;  // field path -> origin

    double sample_rate_hz() const { return bandwidth_ghz * 1e9 * frame.oversampling; }
    void note(const std::string& field, const std::string& origin) { sources[field] = origin; }
};

ExperimentConfig default_config();

// Table-level presets named like "120ghz_p55_a45" / "220ghz_p65_a55":
// carrier, PAPR target (5.5/6.0/6.5 dB) and ACLR target (-45/-55 dB); the
// 220 GHz presets switch N_R to 4.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

// JSON config file with sections mirroring the module layout.
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
void apply_config_json(ExperimentConfig& cfg, const std::string& text, const std::string& origin);

// Canonical value dump (stable key order), its hash, and the annotated echo.
std::string config_canonical_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);
std::string resolved_config_json(const ExperimentConfig& cfg);

TrainConfig to_train_config(const ExperimentConfig& cfg);
LinkSetup to_link_setup(const ExperimentConfig& cfg, const WaveformBundle& bundle);

}  // namespace scwave
