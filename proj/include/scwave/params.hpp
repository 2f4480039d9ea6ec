#pragma once

#include <string>

#include "scwave/tape.hpp"

namespace scwave {

// Named groups of trainable real scalars with gradient accumulators.
// Complex quantities are stored as interleaved (re, im) pairs.
struct ParamGroup {
    std::string name;
    Vec value;
    Vec grad;  // same cardinality as value
};

class ParamSet {
public:
    int add_group(std::string name, Vec init) {
        ParamGroup g;
        g.name = std::move(name);
        g.grad.assign(init.size(), 0.0);
        g.value = std::move(init);
        groups_.push_back(std::move(g));
        return static_cast<int>(groups_.size()) - 1;
    }

    ParamGroup& group(int i) { return groups_.at(static_cast<size_t>(i)); }
    const ParamGroup& group(int i) const { return groups_.at(static_cast<size_t>(i)); }
    int find(std::string_view name) const {
        for (size_t i = 0; i < groups_.size(); ++i)
            if (groups_[i].name == name) return static_cast<int>(i);
        return -1;
    }
    size_t n_groups() const { return groups_.size(); }

    size_t total_size() const {
        size_t n = 0;
        for (const auto& g : groups_) n += g.value.size();
        return n;
    }

    void zero_grads() {
        for (auto& g : groups_) std::fill(g.grad.begin(), g.grad.end(), 0.0);
    }

    // Register all groups as tape inputs (one leaf per group, group order).
    std::vector<Tape::Var> make_leaves(Tape& t) const {
        std::vector<Tape::Var> leaves;
        leaves.reserve(groups_.size());
        for (const auto& g : groups_) leaves.push_back(t.input(g.value));
        return leaves;
    }

    // Accumulate tape leaf gradients into the group accumulators.
    void accumulate_grads(const Tape& t, const std::vector<Tape::Var>& leaves) {
        require(leaves.size() == groups_.size(), "accumulate_grads: leaf count mismatch");
        for (size_t k = 0; k < groups_.size(); ++k) {
            const Vec& g = t.grad(leaves[k]);
            require(g.size() == groups_[k].grad.size(), "accumulate_grads: cardinality mismatch");
            for (size_t i = 0; i < g.size(); ++i) groups_[k].grad[i] += g[i];
        }
    }

private:
    std::vector<ParamGroup> groups_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long step_count = 0;
    std::vector<Vec> m, v;  // first/second moments, one entry per group

    static AdamState init_for(const ParamSet& p, AdamConfig cfg = {}) {
        AdamState s;
        s.cfg = cfg;
        for (size_t k = 0; k < p.n_groups(); ++k) {
            s.m.emplace_back(p.group(static_cast<int>(k)).value.size(), 0.0);
            s.v.emplace_back(p.group(static_cast<int>(k)).value.size(), 0.0);
        }
        return s;
    }
};

// Standard Adam with bias correction; zeroes the gradients afterwards.
void adam_step(ParamSet& params, AdamState& state);

}  // namespace scwave
