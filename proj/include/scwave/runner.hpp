#pragma once

#include "scwave/config.hpp"

namespace scwave {

// Command implementations behind the CLI (and directly callable from tests).
// Every emitted file starts with a provenance header (config hash + seed);
// re-running with identical inputs reproduces each file byte for byte.
struct RunResult {
    std::vector<std::string> files;
};

RunResult run_train(const ExperimentConfig& cfg, const std::string& resume_path = "");
RunResult run_eval(const ExperimentConfig& cfg, const std::string& bundle_path);
RunResult run_psd(const std::string& model, double f_c, double f_min, double f_max, int points,
                  const std::string& out_path, uint64_t seed);
RunResult run_gen_pn(const std::string& model, double f_c, double fs, size_t n_samples,
                     uint64_t seed, const std::string& out_path);
RunResult run_papr(const std::string& bundle_path, size_t min_samples, uint64_t seed,
                   const std::string& out_path);
// Prints the ACLR report to `report`; returns the ACLR in dB.
double run_aclr(const std::string& bundle_path, double beta, std::string* report);
RunResult run_export_baseline(const ExperimentConfig& cfg, const std::string& out_path);

}  // namespace scwave
