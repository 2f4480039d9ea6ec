#include "scwave/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "scwave/dsp.hpp"

namespace scwave {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& hash, uint64_t seed,
              const std::string& columns)
        : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + path);
        out_ << "# config_hash=" << hash << " seed=" << seed << "\n";
        out_ << columns << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

std::string out_file(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void ensure_parent(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_resolved_config(const ExperimentConfig& cfg, RunResult& res) {
    const std::string p = out_file(cfg, "resolved_config.json");
    write_text(p, resolved_config_json(cfg) + "\n");
    res.files.push_back(p);
}

std::vector<double> collect_power_samples(const WaveformBundle& b, const FrameConfig& frame,
                                          uint64_t seed, size_t min_samples) {
    RngStream rng(seed, "papr");
    std::vector<double> power;
    while (power.size() < min_samples) {
        std::vector<uint8_t> bits(size_t(frame.n_data()) * size_t(frame.k_bits));
        for (auto& v : bits) v = rng.bit();
        auto [fr, lay] = assemble_frame(map_bits(bits, b.constellation), frame);
        for (const Complex& z : pulse_shape(fr, b.g_tx)) power.push_back(std::norm(z));
    }
    return power;
}

}  // namespace

RunResult run_train(const ExperimentConfig& cfg, const std::string& resume_path) {
    RunResult res;
    const std::string hash = config_hash(cfg);
    write_resolved_config(cfg, res);

    TrainConfig tc = to_train_config(cfg);
    TrainResult tr;
    if (!resume_path.empty()) {
        Checkpoint ck = load_checkpoint(resume_path);
        tr = train(tc, &ck);
    } else {
        tr = train(tc);
    }
    tr.bundle.config_hash = hash;
    tr.checkpoint.bundle.config_hash = hash;

    const std::string bundle_path = out_file(cfg, "bundle.json");
    save_bundle(tr.bundle, bundle_path);
    res.files.push_back(bundle_path);

    const std::string ckpt_path = out_file(cfg, "checkpoint.json");
    save_checkpoint(tr.checkpoint, ckpt_path);
    res.files.push_back(ckpt_path);

    CsvWriter log(out_file(cfg, "train_log.csv"), hash, cfg.seed,
                  "outer,bce,phi_p,aclr_db,papr_db_1e3,mu_p,mu_a,lambda,heldout_bce");
    for (const auto& r : tr.log)
        log.row({std::to_string(r.outer), fmt(r.bce), fmt(r.phi_p), fmt(r.aclr_db),
                 fmt(r.papr_db_1e3), fmt(r.mu_p), fmt(r.mu_a), fmt(r.lambda), fmt(r.heldout)});
    res.files.push_back(log.path());

    if (tr.aborted)
        throw std::runtime_error("training aborted (" + tr.abort_reason +
                                 "); checkpoint written to " + ckpt_path);
    return res;
}

RunResult run_eval(const ExperimentConfig& cfg, const std::string& bundle_path) {
    RunResult res;
    const std::string hash = config_hash(cfg);
    write_resolved_config(cfg, res);
    const WaveformBundle bundle = load_bundle(bundle_path);
    const LinkSetup setup = to_link_setup(cfg, bundle);

    const auto table = evaluate_link(setup, cfg.eval_ebn0_db, cfg.eval_frames);
    CsvWriter metrics(out_file(cfg, "metrics.csv"), hash, cfg.seed,
                      "ebn0_db,ber,bler,se_bits_s_hz,papr_db_1e3,aclr_db,obw");
    for (const auto& p : table)
        metrics.row({fmt(p.ebn0_db), fmt(p.ber), fmt(p.bler), fmt(p.se_bits_s_hz),
                     fmt(p.papr_db_1e3), fmt(p.aclr_db), fmt(p.obw)});
    res.files.push_back(metrics.path());

    const auto power = collect_power_samples(bundle, cfg.frame, cfg.seed, 400000);
    const CcdfCurve ccdf = papr_ccdf(power);
    CsvWriter cc(out_file(cfg, "papr_ccdf.csv"), hash, cfg.seed, "nu_db,ccdf");
    for (size_t i = 0; i < ccdf.nu_db.size(); ++i) cc.row({fmt(ccdf.nu_db[i]), fmt(ccdf.ccdf[i])});
    res.files.push_back(cc.path());

    // Tx filter spectrum for plotting
    const size_t nfft = 8192;
    ComplexBuffer pad(nfft, Complex{0, 0});
    for (size_t i = 0; i < bundle.g_tx.taps.size(); ++i) pad[i] = Complex{bundle.g_tx.taps[i], 0};
    auto spec = dft(pad);
    CsvWriter psd(out_file(cfg, "tx_filter_psd.csv"), hash, cfg.seed, "freq_symrate,psd_db");
    for (size_t k = 0; k < nfft; ++k) {
        const size_t kk = (k + nfft / 2) % nfft;  // centered order
        double f = double(kk) / nfft;
        if (f > 0.5) f -= 1.0;
        psd.row({fmt(f * cfg.frame.oversampling), fmt(lin_to_db(std::norm(spec[kk]) + 1e-300))});
    }
    res.files.push_back(psd.path());

    const double aclr = aclr_beta_db(bundle.g_tx, bundle.beta);
    write_text(out_file(cfg, "aclr.txt"),
               "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + "\naclr_beta_db=" +
                   fmt(aclr) + " beta=" + fmt(bundle.beta) + "\n");
    res.files.push_back(out_file(cfg, "aclr.txt"));
    return res;
}

RunResult run_psd(const std::string& model, double f_c, double f_min, double f_max, int points,
                  const std::string& out_path, uint64_t seed) {
    require(f_min > 0.0 && f_max > f_min && points >= 2, "psd: bad frequency grid");
    const PnModel m = make_pn_model(model, f_c);
    require(m.enabled(), "psd: model 'none' has no spectrum");
    ExperimentConfig hcfg;  // hash over the closest canonical description
    hcfg.scenario = "psd:" + model;
    hcfg.carrier_ghz = f_c / 1e9;
    ensure_parent(out_path);
    CsvWriter csv(out_path, config_hash(hcfg), seed, "f_hz,psd_dbchz");
    const double lmin = std::log10(f_min), lmax = std::log10(f_max);
    for (int i = 0; i < points; ++i) {
        const double f = std::pow(10.0, lmin + (lmax - lmin) * double(i) / double(points - 1));
        csv.row({fmt(f), fmt(m.eval_dbchz(f))});
    }
    RunResult res;
    res.files.push_back(out_path);
    return res;
}

RunResult run_gen_pn(const std::string& model, double f_c, double fs, size_t n_samples,
                     uint64_t seed, const std::string& out_path) {
    const PnModel m = make_pn_model(model, f_c);
    const RealBuffer ph = generate_pn(m, PnGenSpec{fs, n_samples, seed});
    ExperimentConfig hcfg;
    hcfg.scenario = "gen-pn:" + model;
    hcfg.carrier_ghz = f_c / 1e9;
    hcfg.seed = seed;
    ensure_parent(out_path);
    CsvWriter csv(out_path, config_hash(hcfg), seed, "n,phase_rad");
    for (size_t i = 0; i < ph.size(); ++i) csv.row({std::to_string(i), fmt(ph[i])});
    RunResult res;
    res.files.push_back(out_path);
    return res;
}

RunResult run_papr(const std::string& bundle_path, size_t min_samples, uint64_t seed,
                   const std::string& out_path) {
    const WaveformBundle b = load_bundle(bundle_path);
    const auto power = collect_power_samples(b, b.frame, seed, min_samples);
    const CcdfCurve c = papr_ccdf(power);
    ExperimentConfig hcfg;
    hcfg.scenario = "papr";
    hcfg.seed = seed;
    ensure_parent(out_path);
    CsvWriter csv(out_path, b.config_hash.empty() ? config_hash(hcfg) : b.config_hash, seed,
                  "nu_db,ccdf");
    for (size_t i = 0; i < c.nu_db.size(); ++i) csv.row({fmt(c.nu_db[i]), fmt(c.ccdf[i])});
    RunResult res;
    res.files.push_back(out_path);
    return res;
}

double run_aclr(const std::string& bundle_path, double beta, std::string* report) {
    const WaveformBundle b = load_bundle(bundle_path);
    const double use_beta = beta > 0.0 ? beta : b.beta;
    const double aclr = aclr_beta_db(b.g_tx, use_beta);
    if (report)
        *report = "aclr_beta_db=" + fmt(aclr) + " beta=" + fmt(use_beta) +
                  " obw=" + fmt(obw_999_filter(b.g_tx.taps, b.g_tx.oversampling)) + "\n";
    return aclr;
}

RunResult run_export_baseline(const ExperimentConfig& cfg, const std::string& out_path) {
    // Shared init path with the trainer: iteration-0 equals this bundle.
    TrainConfig tc = to_train_config(cfg);
    WaveformBundle b = params_to_bundle(init_params(tc), tc);
    b.config_hash = config_hash(cfg);
    ensure_parent(out_path);
    save_bundle(b, out_path);
    RunResult res;
    res.files.push_back(out_path);
    return res;
}

}  // namespace scwave
