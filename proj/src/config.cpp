#include "scwave/config.hpp"

#include <fstream>

#include <json.hpp>

namespace scwave {

using nlohmann::json;

ExperimentConfig default_config() { return ExperimentConfig{}; }

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    // <carrier>ghz_p<PP>_a<AA>, e.g. 120ghz_p55_a45
    const auto bad = [&] {
        throw std::invalid_argument("unknown preset: " + name +
                                    " (expected <120|220>ghz_p<55|60|65>_a<45|55>)");
    };
    const size_t g = name.find("ghz_p");
    const size_t a = name.find("_a");
    if (g == std::string::npos || a == std::string::npos || a < g) bad();
    const std::string carrier = name.substr(0, g);
    const std::string pp = name.substr(g + 5, a - (g + 5));
    const std::string aa = name.substr(a + 2);
    if ((carrier != "120" && carrier != "220") || (pp != "55" && pp != "60" && pp != "65") ||
        (aa != "45" && aa != "55"))
        bad();
    const std::string origin = "preset:" + name;
    cfg.scenario = name;
    cfg.note("scenario", origin);
    cfg.carrier_ghz = carrier == "120" ? 120.0 : 220.0;
    cfg.note("system.carrier_ghz", origin);
    cfg.frame.n_rpn = carrier == "120" ? 1 : 4;
    cfg.note("frame.n_rpn", origin);
    cfg.eps_p_db = pp == "55" ? 5.5 : (pp == "60" ? 6.0 : 6.5);
    cfg.note("constraints.eps_p_db", origin);
    cfg.eps_a_db = aa == "45" ? -45.0 : -55.0;
    cfg.note("constraints.eps_a_db", origin);
}

namespace {

template <typename T>
void take(const json& j, const char* section, const char* key, T& out, ExperimentConfig& cfg,
          const std::string& origin) {
    if (!j.contains(section)) return;
    const json& s = j.at(section);
    if (!s.contains(key)) return;
    try {
        out = s.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config field ") + section + "." + key + ": " +
                                    e.what());
    }
    cfg.note(std::string(section) + "." + key, origin);
}

template <typename T>
void take_top(const json& j, const char* key, T& out, ExperimentConfig& cfg,
              const std::string& origin) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config field ") + key + ": " + e.what());
    }
    cfg.note(key, origin);
}

}  // namespace

void apply_config_json(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (j.contains("preset")) apply_preset(cfg, j.at("preset").get<std::string>());

    take_top(j, "scenario", cfg.scenario, cfg, origin);
    take(j, "system", "carrier_ghz", cfg.carrier_ghz, cfg, origin);
    take(j, "system", "bandwidth_ghz", cfg.bandwidth_ghz, cfg, origin);

    take(j, "frame", "k_bits", cfg.frame.k_bits, cfg, origin);
    take(j, "frame", "n_total", cfg.frame.n_total, cfg, origin);
    take(j, "frame", "n_cp", cfg.frame.n_cp, cfg, origin);
    take(j, "frame", "q_groups", cfg.frame.q_groups, cfg, origin);
    take(j, "frame", "n_ptrs", cfg.frame.n_ptrs, cfg, origin);
    take(j, "frame", "n_rpn", cfg.frame.n_rpn, cfg, origin);
    take(j, "frame", "oversampling", cfg.frame.oversampling, cfg, origin);
    take(j, "frame", "zc_root", cfg.frame.zc_root, cfg, origin);

    take(j, "filter", "span_symbols", cfg.span_symbols, cfg, origin);
    take(j, "filter", "rolloff", cfg.rolloff, cfg, origin);
    take(j, "filter", "constellation_init", cfg.constellation_init, cfg, origin);

    take(j, "phase_noise", "enabled", cfg.pn_enabled, cfg, origin);
    take(j, "phase_noise", "tx", cfg.pn_tx, cfg, origin);
    take(j, "phase_noise", "rx", cfg.pn_rx, cfg, origin);

    take(j, "demapper", "kind", cfg.demapper, cfg, origin);
    take(j, "demapper", "nn_hidden", cfg.nn_hidden, cfg, origin);

    take(j, "constraints", "eps_p_db", cfg.eps_p_db, cfg, origin);
    take(j, "constraints", "eps_a_db", cfg.eps_a_db, cfg, origin);

    if (j.contains("training") && j["training"].contains("ebn0_db")) {
        const auto v = j["training"]["ebn0_db"].get<std::vector<double>>();
        require(v.size() == 2, "config: training.ebn0_db must be [lo, hi]");
        cfg.ebn0_lo_db = v[0];
        cfg.ebn0_hi_db = v[1];
        cfg.note("training.ebn0_db", origin);
    }
    take(j, "training", "batch_size", cfg.batch_size, cfg, origin);
    take(j, "training", "inner_steps", cfg.inner_steps, cfg, origin);
    take(j, "training", "outer_iters", cfg.outer_iters, cfg, origin);
    take(j, "training", "power_samples", cfg.power_samples, cfg, origin);
    take(j, "training", "learning_rate", cfg.learning_rate, cfg, origin);
    take(j, "training", "lambda0", cfg.lambda0, cfg, origin);
    take(j, "training", "tau", cfg.tau, cfg, origin);

    take(j, "eval", "ebn0_db", cfg.eval_ebn0_db, cfg, origin);
    take(j, "eval", "frames", cfg.eval_frames, cfg, origin);
    take(j, "eval", "code_rate", cfg.code_rate, cfg, origin);
    take(j, "eval", "true_variances", cfg.eval_true_variances, cfg, origin);
    take(j, "eval", "threads", cfg.threads, cfg, origin);
    take(j, "eval", "llr_clamp", cfg.llr_clamp, cfg, origin);

    take_top(j, "seed", cfg.seed, cfg, origin);
    take_top(j, "output_dir", cfg.output_dir, cfg, origin);
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    apply_config_json(cfg, text, "config:" + path);
}

std::string config_canonical_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["system"] = {{"carrier_ghz", c.carrier_ghz}, {"bandwidth_ghz", c.bandwidth_ghz}};
    j["frame"] = {{"k_bits", c.frame.k_bits},     {"n_total", c.frame.n_total},
                  {"n_cp", c.frame.n_cp},         {"q_groups", c.frame.q_groups},
                  {"n_ptrs", c.frame.n_ptrs},     {"n_rpn", c.frame.n_rpn},
                  {"oversampling", c.frame.oversampling}, {"zc_root", c.frame.zc_root}};
    j["filter"] = {{"span_symbols", c.span_symbols},
                   {"rolloff", c.rolloff},
                   {"constellation_init", c.constellation_init}};
    j["phase_noise"] = {{"enabled", c.pn_enabled}, {"tx", c.pn_tx}, {"rx", c.pn_rx}};
    j["demapper"] = {{"kind", c.demapper}, {"nn_hidden", c.nn_hidden}};
    j["constraints"] = {{"eps_p_db", c.eps_p_db}, {"eps_a_db", c.eps_a_db}};
    j["training"] = {{"ebn0_db", std::vector<double>{c.ebn0_lo_db, c.ebn0_hi_db}},
                     {"batch_size", c.batch_size},
                     {"inner_steps", c.inner_steps},
                     {"outer_iters", c.outer_iters},
                     {"power_samples", c.power_samples},
                     {"learning_rate", c.learning_rate},
                     {"lambda0", c.lambda0},
                     {"tau", c.tau}};
    j["eval"] = {{"ebn0_db", c.eval_ebn0_db},   {"frames", c.eval_frames},
                 {"code_rate", c.code_rate},    {"true_variances", c.eval_true_variances},
                 {"threads", c.threads},        {"llr_clamp", c.llr_clamp}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
    // Hash only result-determining fields: where outputs land and how many
    // workers ran cannot change a single emitted byte.
    nlohmann::json j = nlohmann::json::parse(config_canonical_json(cfg));
    j.erase("output_dir");
    j["eval"].erase("threads");
    const std::string text = j.dump(2);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    json j = json::parse(config_canonical_json(cfg));
    json sources = json::object();
    // every canonical leaf appears with its origin, defaulted fields included
    const std::vector<std::string> fields = {
        "scenario", "system.carrier_ghz", "system.bandwidth_ghz", "frame.k_bits", "frame.n_total",
        "frame.n_cp", "frame.q_groups", "frame.n_ptrs", "frame.n_rpn", "frame.oversampling",
        "frame.zc_root", "filter.span_symbols", "filter.rolloff", "filter.constellation_init",
        "phase_noise.enabled", "phase_noise.tx", "phase_noise.rx", "demapper.kind",
        "demapper.nn_hidden", "constraints.eps_p_db", "constraints.eps_a_db", "training.ebn0_db",
        "training.batch_size", "training.inner_steps", "training.outer_iters",
        "training.power_samples", "training.learning_rate", "training.lambda0", "training.tau",
        "eval.ebn0_db", "eval.frames", "eval.code_rate", "eval.true_variances", "eval.threads",
        "eval.llr_clamp", "seed", "output_dir"};
    for (const auto& f : fields) {
        const auto it = cfg.sources.find(f);
        sources[f] = it == cfg.sources.end() ? "default" : it->second;
    }
    j["config_hash"] = config_hash(cfg);
    j["sources"] = sources;
    return j.dump(2);
}

TrainConfig to_train_config(const ExperimentConfig& c) {
    TrainConfig t;
    t.frame = c.frame;
    t.span_symbols = c.span_symbols;
    t.beta = c.rolloff;
    t.constellation_init = c.constellation_init;
    t.demapper = demapper_from_name(c.demapper);
    t.nn_hidden = c.nn_hidden;
    t.ebn0_lo_db = c.ebn0_lo_db;
    t.ebn0_hi_db = c.ebn0_hi_db;
    t.batch_size = c.batch_size;
    t.inner_steps = c.inner_steps;
    t.outer_iters = c.outer_iters;
    t.power_samples_cap = c.power_samples;
    t.learning_rate = c.learning_rate;
    t.eps_p_db = c.eps_p_db;
    t.eps_a_db = c.eps_a_db;
    t.lambda0 = c.lambda0;
    t.tau = c.tau;
    t.pn_enabled = c.pn_enabled;
    t.pn_tx_name = c.pn_tx;
    t.pn_rx_name = c.pn_rx;
    t.carrier_hz = c.carrier_ghz * 1e9;
    t.sample_rate = c.sample_rate_hz();
    t.code_rate = 1.0;  // trained uncoded
    t.seed = c.seed;
    t.llr_clamp = c.llr_clamp;
    return t;
}

LinkSetup to_link_setup(const ExperimentConfig& c, const WaveformBundle& b) {
    require(b.constellation.k_bits == c.frame.k_bits,
            "bundle/config mismatch: modulation order K differs");
    require(b.g_tx.oversampling == c.frame.oversampling,
            "bundle/config mismatch: oversampling M differs");
    LinkSetup s;
    s.constellation = b.constellation;
    s.g_tx = b.g_tx;
    s.g_rx = b.g_rx;
    s.frame = c.frame;
    s.beta = b.beta;
    s.demapper = demapper_from_name(c.demapper);
    s.nnd = b.nnd;
    s.code_rate = c.code_rate;
    s.pn_enabled = c.pn_enabled;
    s.pn_tx = make_pn_model(c.pn_enabled ? c.pn_tx : "none", c.carrier_ghz * 1e9);
    s.pn_rx = make_pn_model(c.pn_enabled ? c.pn_rx : "none", c.carrier_ghz * 1e9);
    s.sample_rate = c.sample_rate_hz();
    s.true_variances = c.eval_true_variances;
    s.seed = c.seed;
    s.threads = c.threads;
    s.llr_clamp = c.llr_clamp;
    return s;
}

}  // namespace scwave
