#include "scwave/bundle.hpp"

#include <fstream>

#include <json.hpp>

namespace scwave {

using nlohmann::json;

namespace {

json cbuf_to_json(const ComplexBuffer& v) {
    json re = json::array(), im = json::array();
    for (const Complex& z : v) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    return json{{"re", re}, {"im", im}};
}

ComplexBuffer cbuf_from_json(const json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    require(re.size() == im.size(), "bundle: re/im length mismatch");
    ComplexBuffer out(re.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = Complex{re[i].get<double>(), im[i].get<double>()};
    return out;
}

json frame_to_json(const FrameConfig& f) {
    return json{{"k_bits", f.k_bits},       {"n_total", f.n_total}, {"n_cp", f.n_cp},
                {"q_groups", f.q_groups},   {"n_ptrs", f.n_ptrs},   {"n_rpn", f.n_rpn},
                {"oversampling", f.oversampling}, {"zc_root", f.zc_root}};
}

FrameConfig frame_from_json(const json& j) {
    FrameConfig f;
    f.k_bits = j.at("k_bits").get<int>();
    f.n_total = j.at("n_total").get<int>();
    f.n_cp = j.at("n_cp").get<int>();
    f.q_groups = j.at("q_groups").get<int>();
    f.n_ptrs = j.at("n_ptrs").get<int>();
    f.n_rpn = j.at("n_rpn").get<int>();
    f.oversampling = j.at("oversampling").get<int>();
    f.zc_root = j.at("zc_root").get<int>();
    return f;
}

}  // namespace

std::string bundle_to_json(const WaveformBundle& b) {
    json j;
    j["format"] = "scwave-bundle-v1";
    j["config_hash"] = b.config_hash;
    j["seed"] = b.seed;
    j["labeling"] = b.labeling;
    j["waveform"] = {
        {"k_bits", b.constellation.k_bits},
        {"constellation", cbuf_to_json(b.constellation.points)},
        {"tx_taps", b.g_tx.taps},
        {"rx_taps", b.g_rx.taps},
        {"span_symbols", b.g_tx.span_symbols},
        {"oversampling", b.g_tx.oversampling},
        {"beta", b.beta},
    };
    j["frame"] = frame_to_json(b.frame);
    j["demapper"] = demapper_name(b.demapper);
    if (b.nnd) {
        j["nnd"] = {{"k_bits", b.nnd->k_bits}, {"dims", b.nnd->dims}, {"weights", b.nnd->weights}};
    }
    return j.dump(2);
}

WaveformBundle bundle_from_json(const std::string& text) {
    const json j = json::parse(text);
    require(j.at("format").get<std::string>() == "scwave-bundle-v1", "bundle: unknown format");
    WaveformBundle b;
    b.config_hash = j.at("config_hash").get<std::string>();
    b.seed = j.at("seed").get<uint64_t>();
    b.labeling = j.at("labeling").get<std::string>();
    const json& w = j.at("waveform");
    b.constellation.k_bits = w.at("k_bits").get<int>();
    b.constellation.points = cbuf_from_json(w.at("constellation"));
    require(b.constellation.points.size() == (size_t(1) << b.constellation.k_bits),
            "bundle: constellation size mismatch");
    const int span = w.at("span_symbols").get<int>();
    const int m = w.at("oversampling").get<int>();
    b.g_tx = make_filter(w.at("tx_taps").get<RealBuffer>(), span, m);
    b.g_rx = make_filter(w.at("rx_taps").get<RealBuffer>(), span, m);
    b.beta = w.at("beta").get<double>();
    b.frame = frame_from_json(j.at("frame"));
    b.frame.validate();
    b.demapper = demapper_from_name(j.at("demapper").get<std::string>());
    if (j.contains("nnd")) {
        NnDemapper net;
        net.k_bits = j["nnd"].at("k_bits").get<int>();
        net.dims = j["nnd"].at("dims").get<std::vector<int>>();
        net.weights = j["nnd"].at("weights").get<std::vector<double>>();
        require(net.weights.size() == net.weight_count(), "bundle: NND weight count mismatch");
        b.nnd = std::move(net);
    }
    return b;
}

void save_bundle(const WaveformBundle& b, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << bundle_to_json(b) << "\n";
}

WaveformBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bundle_from_json(text);
}

namespace {

json lagr_to_json(const LagrangianState& s) {
    return json{{"mu_p", s.mu_p},   {"mu_a", s.mu_a},   {"lambda", s.lambda}, {"tau", s.tau},
                {"eps_p", s.eps_p}, {"eps_a", s.eps_a}, {"beta", s.beta}};
}

LagrangianState lagr_from_json(const json& j) {
    LagrangianState s;
    s.mu_p = j.at("mu_p").get<double>();
    s.mu_a = j.at("mu_a").get<double>();
    s.lambda = j.at("lambda").get<double>();
    s.tau = j.at("tau").get<double>();
    s.eps_p = j.at("eps_p").get<double>();
    s.eps_a = j.at("eps_a").get<double>();
    s.beta = j.at("beta").get<double>();
    return s;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
    json j;
    j["format"] = "scwave-checkpoint-v1";
    j["bundle"] = json::parse(bundle_to_json(c.bundle));
    j["lagrangian"] = lagr_to_json(c.lagr);
    j["outer_done"] = c.outer_done;
    json groups = json::array();
    for (size_t k = 0; k < c.params.n_groups(); ++k) {
        const auto& g = c.params.group(static_cast<int>(k));
        groups.push_back(json{{"name", g.name}, {"value", g.value}});
    }
    j["params"] = groups;
    j["adam"] = {{"lr", c.adam.cfg.lr},       {"beta1", c.adam.cfg.beta1},
                 {"beta2", c.adam.cfg.beta2}, {"eps", c.adam.cfg.eps},
                 {"step_count", c.adam.step_count}, {"m", c.adam.m}, {"v", c.adam.v}};
    return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
    const json j = json::parse(text);
    require(j.at("format").get<std::string>() == "scwave-checkpoint-v1", "checkpoint: unknown format");
    Checkpoint c;
    c.bundle = bundle_from_json(j.at("bundle").dump());
    c.lagr = lagr_from_json(j.at("lagrangian"));
    c.outer_done = j.at("outer_done").get<int>();
    for (const auto& g : j.at("params"))
        c.params.add_group(g.at("name").get<std::string>(), g.at("value").get<Vec>());
    c.adam.cfg.lr = j["adam"].at("lr").get<double>();
    c.adam.cfg.beta1 = j["adam"].at("beta1").get<double>();
    c.adam.cfg.beta2 = j["adam"].at("beta2").get<double>();
    c.adam.cfg.eps = j["adam"].at("eps").get<double>();
    c.adam.step_count = j["adam"].at("step_count").get<long>();
    c.adam.m = j["adam"].at("m").get<std::vector<Vec>>();
    c.adam.v = j["adam"].at("v").get<std::vector<Vec>>();
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << checkpoint_to_json(c) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return checkpoint_from_json(text);
}

}  // namespace scwave
