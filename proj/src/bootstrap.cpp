#include "nprisk/bootstrap.hpp"

#include <cmath>

#include "nprisk/kriging.hpp"
#include "nprisk/parallel.hpp"
#include "nprisk/rng.hpp"

namespace nprisk {

Vec uncorrelated_errors(const FittedComponents& fit) {
    const int n = fit.sample.n();
    Mat R0 = correlation_matrix(fit.sample.locations, variogram_fn(fit.pilot_variogram_model));
    Mat L0 = cholesky_psd(R0);
    Vec scaled = fit.residuals.cwiseQuotient(fit.pilot_variance_sample.cwiseSqrt());
    Vec e = L0.triangularView<Eigen::Lower>().solve(scaled);
    double mean = e.mean();
    double sd = std::sqrt((e.array() - mean).square().sum() / std::max(n - 1, 1));
    if (!(sd > 0.0))
        throw DegenerateResiduals("uncorrelated_errors: residuals have zero spread");
    return (e.array() - mean) / sd;
}

BootstrapEngine::BootstrapEngine(const FittedComponents& fit) {
    n_ = fit.sample.n();
    n0_ = static_cast<int>(fit.targets.size());
    errors_ = uncorrelated_errors(fit);

    std::vector<Location> all_locs = fit.sample.locations;
    all_locs.insert(all_locs.end(), fit.targets.begin(), fit.targets.end());
    mean_all_.resize(n_ + n0_);
    mean_all_ << fit.trend_sample, fit.trend_targets;
    sd_all_.resize(n_ + n0_);
    sd_all_ << fit.variance_sample.cwiseSqrt(), fit.variance_targets.cwiseSqrt();

    const VariogramFn gamma = variogram_fn(fit.corrected_variogram_model);
    chol_joint_ = cholesky_psd(correlation_matrix(all_locs, gamma));

    SimpleKriging sk(fit.sample.locations, fit.variance_sample.cwiseSqrt(), gamma);
    sk_weights_targets_.resize(n0_, n_);
    for (int a = 0; a < n0_; ++a)
        sk_weights_targets_.row(a) =
            sk.weights(sk.cross_covariance(fit.targets[a], sd_all_[n_ + a])).transpose();
    sk_weights_sample_.resize(n_, n_);
    for (int i = 0; i < n_; ++i)
        sk_weights_sample_.row(i) =
            sk.weights(sk.cross_covariance(fit.sample.locations[i], sd_all_[i])).transpose();

    delta_hat_targets_ = sk_weights_targets_ * fit.residuals;
    delta_hat_sample_ = sk_weights_sample_ * fit.residuals;
}

Vec BootstrapEngine::unconditional_replicate(std::mt19937_64& rng) const {
    const int total = n_ + n0_;
    std::uniform_int_distribution<int> pick(0, n_ - 1);
    Vec estar(total);
    for (int i = 0; i < total; ++i) estar[i] = errors_[pick(rng)];
    Vec eps = chol_joint_.triangularView<Eigen::Lower>() * estar;
    return mean_all_ + sd_all_.cwiseProduct(eps);
}

BootstrapEngine::ConditionalReplicate BootstrapEngine::conditional_replicate(
    std::mt19937_64& rng) const {
    Vec unconditional = unconditional_replicate(rng);
    Vec delta_nc = unconditional - mean_all_;  // heteroscedastic errors of the draw
    Vec delta_nc_sample = delta_nc.head(n_);

    ConditionalReplicate out;
    out.at_targets = mean_all_.tail(n0_) + delta_hat_targets_ + delta_nc.tail(n0_) -
                     sk_weights_targets_ * delta_nc_sample;
    out.at_sample = mean_all_.head(n_) + delta_hat_sample_ + delta_nc_sample -
                    sk_weights_sample_ * delta_nc_sample;
    return out;
}

BootstrapEnsemble BootstrapEngine::run(BootstrapMode mode, const BootstrapConfig& config) const {
    if (config.replicates < 1) throw ConfigError("bootstrap: need at least one replicate");
    BootstrapEnsemble ensemble;
    ensemble.mode = mode;
    ensemble.target_values.resize(config.replicates, n0_);
    if (mode == BootstrapMode::Conditional)
        ensemble.sample_values.resize(config.replicates, n_);

    parallel_for(config.replicates, config.threads, [&](int j) {
        std::mt19937_64 rng = substream(config.seed, static_cast<std::uint64_t>(j));
        if (mode == BootstrapMode::Conditional) {
            ConditionalReplicate rep = conditional_replicate(rng);
            ensemble.target_values.row(j) = rep.at_targets.transpose();
            ensemble.sample_values.row(j) = rep.at_sample.transpose();
        } else {
            Vec rep = unconditional_replicate(rng);
            ensemble.target_values.row(j) = rep.tail(n0_).transpose();
        }
    });
    return ensemble;
}

BootstrapEnsemble run_bootstrap(const FittedComponents& fit, BootstrapMode mode,
                                const BootstrapConfig& config) {
    return BootstrapEngine(fit).run(mode, config);
}

RiskMap risk_from_ensemble(const BootstrapEnsemble& ensemble,
                           const std::vector<Location>& targets, double threshold) {
    const int B = static_cast<int>(ensemble.target_values.rows());
    const int n0 = static_cast<int>(ensemble.target_values.cols());
    if (static_cast<int>(targets.size()) != n0)
        throw ConfigError("risk_from_ensemble: target count mismatch");
    RiskMap map;
    map.locations = targets;
    map.threshold = threshold;
    map.probabilities.resize(n0);
    for (int a = 0; a < n0; ++a) {
        int count = 0;
        for (int j = 0; j < B; ++j)
            if (ensemble.target_values(j, a) >= threshold) ++count;
        map.probabilities[a] = static_cast<double>(count) / B;
    }
    return map;
}

RiskMap estimate_conditional_risk(const FittedComponents& fit, double threshold,
                                  const BootstrapConfig& config) {
    BootstrapEnsemble ensemble = run_bootstrap(fit, BootstrapMode::Conditional, config);
    return risk_from_ensemble(ensemble, fit.targets, threshold);
}

RiskMap estimate_unconditional_risk(const FittedComponents& fit, double threshold,
                                    const BootstrapConfig& config) {
    BootstrapEnsemble ensemble = run_bootstrap(fit, BootstrapMode::Unconditional, config);
    return risk_from_ensemble(ensemble, fit.targets, threshold);
}

}  // namespace nprisk
