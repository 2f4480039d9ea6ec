// scwave: single-carrier sub-THz waveform laboratory.
//
// Subcommands: train, eval, psd, gen-pn, papr, aclr, export-baseline.
// All randomness flows from --seed through named substreams, so identical
// invocations reproduce every output file byte for byte.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "scwave/runner.hpp"

using namespace scwave;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--preset", o.preset, "named parameter preset, e.g. 120ghz_p55_a45");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "root seed")->each([&](const std::string&) {
        o.seed_set = true;
    });
}

ExperimentConfig resolve(const CommonOpts& o) {
    ExperimentConfig cfg = default_config();
    if (!o.preset.empty()) apply_preset(cfg, o.preset);
    if (!o.config_path.empty()) apply_config_file(cfg, o.config_path);
    if (!o.out_dir.empty()) {
        cfg.output_dir = o.out_dir;
        cfg.note("output_dir", "cli");
    }
    if (o.seed_set) {
        cfg.seed = o.seed;
        cfg.note("seed", "cli");
    }
    return cfg;
}

void report_files(const RunResult& res) {
    for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scwave: single-carrier waveform laboratory"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    std::string resume_path;
    auto* cmd_train = app.add_subcommand("train", "augmented-Lagrangian waveform training");
    add_common(cmd_train, train_opts);
    cmd_train->add_option("--resume", resume_path, "checkpoint to resume from");

    CommonOpts eval_opts;
    std::string eval_bundle;
    std::vector<double> eval_grid;
    int eval_frames = 0;
    int eval_threads = 0;
    bool no_pn = false;
    bool true_vars = false;
    auto* cmd_eval = app.add_subcommand("eval", "BER/BLER/SE sweep and waveform reports");
    add_common(cmd_eval, eval_opts);
    cmd_eval->add_option("--bundle", eval_bundle, "waveform bundle")->required();
    cmd_eval->add_option("--ebn0", eval_grid, "Eb/N0 grid in dB");
    cmd_eval->add_option("--frames", eval_frames, "Monte Carlo frames per point");
    cmd_eval->add_option("--threads", eval_threads, "worker threads for the sweep");
    cmd_eval->add_flag("--no-pn", no_pn, "disable phase noise (loopback diagnostics)");
    cmd_eval->add_flag("--true-variances", true_vars,
                       "feed the PN demappers exact variances instead of RPN estimates");

    std::string psd_model = "tx-lmx2595", psd_out = "psd.csv";
    double psd_fc = 120e9, psd_fmin = 1e3, psd_fmax = 1e9;
    int psd_points = 200;
    uint64_t psd_seed = 1;
    auto* cmd_psd = app.add_subcommand("psd", "phase-noise PSD curve as CSV");
    cmd_psd->add_option("--model", psd_model, "tx-lmx2595 | rx-ue1");
    cmd_psd->add_option("--fc", psd_fc, "carrier frequency in Hz");
    cmd_psd->add_option("--fmin", psd_fmin, "start frequency in Hz");
    cmd_psd->add_option("--fmax", psd_fmax, "stop frequency in Hz");
    cmd_psd->add_option("--points", psd_points, "log-spaced point count");
    cmd_psd->add_option("--out", psd_out, "output CSV path");
    cmd_psd->add_option("--seed", psd_seed, "header seed");

    std::string pn_model = "rx-ue1", pn_out = "pn.csv";
    double pn_fc = 120e9, pn_fs = 3.93e9 * 4;
    size_t pn_samples = 16384;
    uint64_t pn_seed = 1;
    auto* cmd_genpn = app.add_subcommand("gen-pn", "synthesize a phase sequence as CSV");
    cmd_genpn->add_option("--model", pn_model, "tx-lmx2595 | rx-ue1 | none");
    cmd_genpn->add_option("--fc", pn_fc, "carrier frequency in Hz");
    cmd_genpn->add_option("--fs", pn_fs, "sample rate in Hz");
    cmd_genpn->add_option("--samples", pn_samples, "sequence length");
    cmd_genpn->add_option("--seed", pn_seed, "generator seed");
    cmd_genpn->add_option("--out", pn_out, "output CSV path");

    std::string papr_bundle, papr_out = "papr_ccdf.csv";
    size_t papr_samples = 400000;
    uint64_t papr_seed = 1;
    auto* cmd_papr = app.add_subcommand("papr", "PAPR CCDF of a bundle's transmit signal");
    cmd_papr->add_option("--bundle", papr_bundle, "waveform bundle")->required();
    cmd_papr->add_option("--samples", papr_samples, "minimum power-sample count");
    cmd_papr->add_option("--seed", papr_seed, "generator seed");
    cmd_papr->add_option("--out", papr_out, "output CSV path");

    std::string aclr_bundle;
    double aclr_beta = 0.0;
    auto* cmd_aclr = app.add_subcommand("aclr", "stopband quadratic-form ACLR of a bundle");
    cmd_aclr->add_option("--bundle", aclr_bundle, "waveform bundle")->required();
    cmd_aclr->add_option("--beta", aclr_beta, "excess bandwidth (default: bundle value)");

    CommonOpts base_opts;
    std::string base_const = "auto", base_out = "baseline_bundle.json";
    auto* cmd_base = app.add_subcommand("export-baseline",
                                        "emit the untrained APSK/QAM + RRC bundle");
    add_common(cmd_base, base_opts);
    cmd_base->add_option("--constellation", base_const, "auto | qam | apsk64");
    cmd_base->add_option("--output", base_out, "bundle path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_train) {
            report_files(run_train(resolve(train_opts), resume_path));
        } else if (*cmd_eval) {
            ExperimentConfig cfg = resolve(eval_opts);
            if (!eval_grid.empty()) {
                cfg.eval_ebn0_db = eval_grid;
                cfg.note("eval.ebn0_db", "cli");
            }
            if (eval_frames > 0) {
                cfg.eval_frames = eval_frames;
                cfg.note("eval.frames", "cli");
            }
            if (eval_threads > 0) {
                cfg.threads = eval_threads;
                cfg.note("eval.threads", "cli");
            }
            if (no_pn) {
                cfg.pn_enabled = false;
                cfg.note("phase_noise.enabled", "cli");
            }
            if (true_vars) {
                cfg.eval_true_variances = true;
                cfg.note("eval.true_variances", "cli");
            }
            report_files(run_eval(cfg, eval_bundle));
        } else if (*cmd_psd) {
            report_files(run_psd(psd_model, psd_fc, psd_fmin, psd_fmax, psd_points, psd_out,
                                 psd_seed));
        } else if (*cmd_genpn) {
            report_files(run_gen_pn(pn_model, pn_fc, pn_fs, pn_samples, pn_seed, pn_out));
        } else if (*cmd_papr) {
            report_files(run_papr(papr_bundle, papr_samples, papr_seed, papr_out));
        } else if (*cmd_aclr) {
            std::string report;
            run_aclr(aclr_bundle, aclr_beta, &report);
            std::cout << report;
        } else if (*cmd_base) {
            ExperimentConfig cfg = resolve(base_opts);
            if (base_const != "auto") {
                cfg.constellation_init = base_const;
                cfg.note("filter.constellation_init", "cli");
            }
            report_files(run_export_baseline(cfg, base_out));
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error category=config " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error category=runtime " << e.what() << "\n";
        return 2;
    }
    return 0;
}
