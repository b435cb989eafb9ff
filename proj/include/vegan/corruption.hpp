#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vegan/dataset.hpp"
#include "vegan/rng.hpp"

namespace vegan {

/// Runtime corruption: independent per-cell distribution shift and
/// zero-padded missingness on a target feature set, both at rate cl.
struct CorruptionSpec {
    std::vector<std::string> target_features;  // empty means all features
    double cl = 0.0;
    double noise_variance = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (cl < 0.0 || cl > 1.0) throw DataError("corruption: cl must be in [0, 1]");
        if (noise_variance <= 0.0) throw DataError("corruption: noise variance must be positive");
    }

    std::vector<std::size_t> target_indices(const CausalDataset& ds) const {
        std::vector<std::size_t> idx;
        if (target_features.empty()) {
            idx.resize(ds.d());
            for (std::size_t j = 0; j < ds.d(); ++j) idx[j] = j;
        } else {
            for (const auto& name : target_features) idx.push_back(ds.feature_index(name));
        }
        return idx;
    }

    bool covers_all_features(const CausalDataset& ds) const {
        return target_indices(ds).size() == ds.d();
    }
};

/// Distribution shift: with probability cl per cell, continuous targets gain
/// Gaussian noise centred on the training-set feature mean; binary targets
/// (+/-1 encoded) are negated. Outcomes and ground truth are untouched.
inline CausalDataset shift(const CausalDataset& ds, const CorruptionSpec& spec,
                           const std::vector<double>& train_means) {
    spec.validate();
    if (train_means.size() != ds.d())
        throw DataError("corruption: training means length mismatch");
    CausalDataset out = ds;
    Rng rng(mix_seed(spec.seed, 0x5417));
    const double noise_sd = std::sqrt(spec.noise_variance);
    const auto targets = spec.target_indices(ds);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (auto j : targets) {
            if (!rng.bernoulli(spec.cl)) continue;
            if (ds.feature_kinds[j] == FeatureKind::Binary) {
                out.X.at(i, j) = -ds.X.at(i, j);
            } else {
                out.X.at(i, j) += train_means[j] + noise_sd * rng.normal();
            }
        }
    }
    return out;
}

/// Missingness: each target cell is set to exactly 0 with probability cl.
inline CausalDataset drop(const CausalDataset& ds, const CorruptionSpec& spec) {
    spec.validate();
    CausalDataset out = ds;
    Rng rng(mix_seed(spec.seed, 0xd209));
    const auto targets = spec.target_indices(ds);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (auto j : targets)
            if (rng.bernoulli(spec.cl)) out.X.at(i, j) = 0.0;
    return out;
}

/// Shift then drop with independent draws; drop wins on cells hit by both.
inline CausalDataset corrupt(const CausalDataset& ds, const CorruptionSpec& spec,
                             const std::vector<double>& train_means) {
    return drop(shift(ds, spec, train_means), spec);
}

/// True when every covariate cell is zero, i.e. the corruption wiped out all
/// information and prediction is infeasible.
inline bool wiped_out(const CausalDataset& ds) {
    for (double v : ds.X.data)
        if (v != 0.0) return false;
    return true;
}

}  // namespace vegan
