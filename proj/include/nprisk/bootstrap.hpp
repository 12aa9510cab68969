#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nprisk/fit.hpp"
#include "nprisk/types.hpp"

namespace nprisk {

struct BootstrapConfig {
    int replicates = 1000;  // B
    std::uint64_t seed = 0;
    int threads = 0;  // 0: hardware concurrency
};

enum class BootstrapMode { Unconditional, Conditional };

/// Replicate values at the estimation locations; conditional mode also keeps
/// the replicate values at the sample locations (they reproduce the
/// observations when the fitted variogram has no nugget).
struct BootstrapEnsemble {
    BootstrapMode mode = BootstrapMode::Unconditional;
    Mat target_values;  // B x n0
    Mat sample_values;  // B x n, conditional mode only
};

struct RiskMap {
    std::vector<Location> locations;
    double threshold = 0.0;
    Vec probabilities;  // multiples of 1/B in [0, 1]
};

/// Decorrelated residuals e = L0^{-1} D0^{-1} r, empirically standardized
/// (mean 0, sd 1 with the n-1 convention). L0 factors the correlation matrix
/// of the pilot residual variogram. Throws DegenerateResiduals when the
/// residuals have zero spread.
Vec uncorrelated_errors(const FittedComponents& fit);

/// Shared precomputation for one fit: the joint correlation factor over
/// sample + estimation locations, the factored simple-kriging system and its
/// per-target weights. Immutable once built; replicates draw from it in
/// parallel.
class BootstrapEngine {
public:
    explicit BootstrapEngine(const FittedComponents& fit);

    int n() const { return n_; }
    int n_targets() const { return n0_; }

    /// One coherent draw of the process over [sample..., targets...]:
    /// mu-hat + D (L_joint e*), e* resampled i.i.d. from e.
    Vec unconditional_replicate(std::mt19937_64& rng) const;

    struct ConditionalReplicate {
        Vec at_targets;
        Vec at_sample;
    };
    ConditionalReplicate conditional_replicate(std::mt19937_64& rng) const;

    BootstrapEnsemble run(BootstrapMode mode, const BootstrapConfig& config) const;

private:
    int n_ = 0;
    int n0_ = 0;
    Vec errors_;      // e
    Vec mean_all_;    // mu-hat over sample + targets
    Vec sd_all_;      // sigma-hat over sample + targets
    Mat chol_joint_;  // L with L L^t the joint correlation from gamma-bar
    Mat sk_weights_targets_;  // n0 x n
    Mat sk_weights_sample_;   // n x n
    Vec delta_hat_targets_;   // kriged residuals at targets
    Vec delta_hat_sample_;
};

/// Generates the ensemble with per-replicate RNG substreams derived from the
/// seed; results are identical for any thread count.
BootstrapEnsemble run_bootstrap(const FittedComponents& fit, BootstrapMode mode,
                                const BootstrapConfig& config);

RiskMap risk_from_ensemble(const BootstrapEnsemble& ensemble,
                           const std::vector<Location>& targets, double threshold);

RiskMap estimate_conditional_risk(const FittedComponents& fit, double threshold,
                                  const BootstrapConfig& config);
RiskMap estimate_unconditional_risk(const FittedComponents& fit, double threshold,
                                    const BootstrapConfig& config);

}  // namespace nprisk
