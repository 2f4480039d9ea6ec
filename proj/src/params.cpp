#include "scwave/params.hpp"

#include <cmath>

namespace scwave {

void adam_step(ParamSet& params, AdamState& state) {
    require(state.m.size() == params.n_groups() && state.v.size() == params.n_groups(),
            "adam_step: state/params group mismatch");
    state.step_count += 1;
    const double b1 = state.cfg.beta1;
    const double b2 = state.cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (size_t k = 0; k < params.n_groups(); ++k) {
        ParamGroup& g = params.group(static_cast<int>(k));
        Vec& m = state.m[k];
        Vec& v = state.v[k];
        require(m.size() == g.value.size() && v.size() == g.value.size(),
                "adam_step: moment cardinality mismatch");
        for (size_t i = 0; i < g.value.size(); ++i) {
            const double gr = g.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gr;
            v[i] = b2 * v[i] + (1.0 - b2) * gr * gr;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            g.value[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
        }
        std::fill(g.grad.begin(), g.grad.end(), 0.0);
    }
}

}  // namespace scwave
