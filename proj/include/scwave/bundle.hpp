#pragma once

#include <optional>
#include <string>

#include "scwave/demappers.hpp"
#include "scwave/metrics.hpp"
#include "scwave/params.hpp"
#include "scwave/waveform.hpp"

namespace scwave {

// Everything needed to reproduce and evaluate one waveform: constellation,
// filter pair, frame geometry and (for NND training runs) the demapper
// network. Serialized as JSON; doubles survive a decimal round trip exactly.
struct WaveformBundle {
    Constellation constellation;
    PulseFilter g_tx, g_rx;
    FrameConfig frame;
    double beta = 0.3;
    DemapperKind demapper = DemapperKind::Aod;
    std::optional<NnDemapper> nnd;

    uint64_t seed = 0;
    std::string config_hash;
    std::string labeling = "index-is-binary-label-msb-first";
};

std::string bundle_to_json(const WaveformBundle& b);
WaveformBundle bundle_from_json(const std::string& text);
void save_bundle(const WaveformBundle& b, const std::string& path);
WaveformBundle load_bundle(const std::string& path);

struct LagrangianState {
    double mu_p = 0.0;
    double mu_a = 0.0;
    double lambda = 1.0;
    double tau = 2.0;
    double eps_p = 1.0;    // linear PAPR target (normalized instantaneous power)
    double eps_a = -45.0;  // ACLR target in dB; Phi_A works on the dB scale so the
                           // hinge has usable magnitude at moderate lambda
    double beta = 0.3;
};

// Resumable training snapshot.
struct Checkpoint {
    WaveformBundle bundle;
    LagrangianState lagr;
    AdamState adam;
    ParamSet params;
    int outer_done = 0;
};

std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace scwave
