#include "nprisk/fit.hpp"

#include <algorithm>
#include <cmath>

namespace nprisk {

Mat residual_covariance(const Mat& S, const Mat& Sigma) {
    if (S.rows() != Sigma.rows() || S.cols() != Sigma.cols() || Sigma.rows() != Sigma.cols())
        throw ConfigError("residual_covariance: shape mismatch");
    Mat SSigma = S * Sigma;
    return Sigma + S * Sigma * S.transpose() - SSigma.transpose() - SSigma;
}

Mat bias_matrix(const Vec& stddev, const Mat& S, const Mat& Sigma) {
    const int n = static_cast<int>(stddev.size());
    if (S.rows() != n || Sigma.rows() != n)
        throw ConfigError("bias_matrix: shape mismatch");
    if (stddev.minCoeff() <= 0.0)
        throw ConfigError("bias_matrix: standard deviations must be positive");
    Mat SSigma = S * Sigma;
    Mat core = S * Sigma * S.transpose() - SSigma.transpose() - SSigma;
    Vec inv = stddev.cwiseInverse();
    Mat B = inv.asDiagonal() * core * inv.asDiagonal();
    return 0.5 * (B + B.transpose());  // kill roundoff asymmetry
}

Mat squared_residual_cov_normal(const Mat& Sigma_r) {
    return 2.0 * Sigma_r.cwiseProduct(Sigma_r);
}

Vec corrected_variance(const std::vector<Location>& locs, const Vec& squared_residuals,
                       const Mat& bias, const BandwidthMatrix& H2,
                       const std::vector<Location>& targets, double floor, KernelType kernel) {
    Vec debiased(squared_residuals.size());
    for (int i = 0; i < squared_residuals.size(); ++i)
        debiased[i] = squared_residuals[i] / std::max(1.0 + bias(i, i), 0.1);
    return variance_pilot(locs, debiased, H2, targets, floor, kernel);
}

SemivarianceCloud corrected_cloud(const SemivarianceCloud& cloud, const Mat& bias) {
    SemivarianceCloud out = cloud;
    for (auto& p : out.pairs) {
        if (p.i >= bias.rows() || p.j >= bias.rows())
            throw ConfigError("corrected_cloud: pair index outside the bias matrix");
        p.sqdiff += -bias(p.i, p.i) - bias(p.j, p.j) + 2.0 * bias(p.i, p.j);
    }
    return out;
}

SmoothingPlan make_smoothing_plan(const std::vector<Location>& locs,
                                  const std::vector<Location>& targets, const BandwidthMatrix& H,
                                  const BandwidthMatrix& H2, KernelType kernel) {
    SmoothingPlan plan;
    plan.H = H;
    plan.H2 = H2;
    plan.S_trend = smoothing_matrix(locs, H, kernel);
    plan.S_variance = smoothing_matrix(locs, H2, kernel);
    plan.S_trend_targets = smoother_rows(targets, locs, H, kernel);
    plan.S_variance_targets = smoother_rows(targets, locs, H2, kernel);
    return plan;
}

namespace {

Vec debias_squared_residuals(const Vec& r2, const Mat& bias) {
    Vec out(r2.size());
    for (int i = 0; i < r2.size(); ++i) out[i] = r2[i] / std::max(1.0 + bias(i, i), 0.1);
    return out;
}

double max_relative_change(const Vec& updated, const Vec& previous) {
    double worst = 0.0;
    for (int i = 0; i < updated.size(); ++i)
        worst = std::max(worst,
                         std::abs(updated[i] - previous[i]) / (std::abs(previous[i]) + 1e-10));
    return worst;
}

Vec evaluate_on_grid(const SBModel& model, const Vec& grid) {
    Vec out(grid.size());
    for (int g = 0; g < grid.size(); ++g) out[g] = model(grid[g]);
    return out;
}

// Bandwidth resolution for the data-driven path: a GCV pre-stage supplies a
// pilot correlation estimate, then H and H2 are re-selected by CGCV with that
// estimate plugged in.
struct ResolvedBandwidths {
    BandwidthMatrix H;
    BandwidthMatrix H2;
};

ResolvedBandwidths resolve_bandwidths(const SpatialSample& sample, const FitConfig& config,
                                      double variance_floor) {
    const auto& locs = sample.locations;
    const Vec& y = sample.values;
    const int n = sample.n();
    Mat identity = Mat::Identity(n, n);
    BandwidthMatrix ref = reference_bandwidth(locs);

    auto trend_objective = [&](const Mat& Rhat) {
        return [&locs, &y, Rhat, &config](const BandwidthMatrix& h) {
            return cgcv(y, smoothing_matrix(locs, h, config.kernel), Rhat);
        };
    };

    BandwidthMatrix H_stage =
        config.trend_bandwidth ? *config.trend_bandwidth
                               : select_bandwidth(trend_objective(identity), ref, config.simplex);

    // stage A: pilot fit under a working independence assumption
    Mat S_a = smoothing_matrix(locs, H_stage, config.kernel);
    Vec r_a = y - S_a * y;
    Vec r2_a = r_a.cwiseProduct(r_a);
    auto var_objective = [&](const Vec& r2, const Mat& Rhat) {
        return [&locs, r2, Rhat, &config](const BandwidthMatrix& h) {
            return cgcv_variance(r2, smoothing_matrix(locs, h, config.kernel), Rhat);
        };
    };
    BandwidthMatrix H2_stage =
        config.variance_bandwidth
            ? *config.variance_bandwidth
            : select_bandwidth(var_objective(r2_a, identity), ref, config.simplex);

    Vec var_a = variance_pilot(locs, r2_a, H2_stage, locs, variance_floor, config.kernel);
    Vec eps_a = r_a.cwiseQuotient(var_a.cwiseSqrt());
    SemivarianceCloud cloud_a = semivariance_cloud(eps_a, locs);
    double h3_a = config.h3 ? *config.h3 : select_h3_cv(cloud_a, config.h3_grid);
    double cutoff_a = config.variogram_cutoff * cloud_a.max_lag();
    SBModel pilot_a = rescale_to_unit_sill(fit_shapiro_botha(
        pilot_variogram(cloud_a, h3_a, config.pilot_grid, cutoff_a),
        cloud_lag_quantiles(cloud_a, config.pilot_grid, cutoff_a), config.sb_basis));
    Mat Rhat = correlation_matrix(locs, variogram_fn(pilot_a));

    ResolvedBandwidths out;
    out.H = config.trend_bandwidth
                ? *config.trend_bandwidth
                : select_bandwidth(trend_objective(Rhat), H_stage, config.simplex);

    if (config.variance_bandwidth) {
        out.H2 = *config.variance_bandwidth;
        return out;
    }
    Mat S_H = smoothing_matrix(locs, out.H, config.kernel);
    Vec r = y - S_H * y;
    Vec r2 = r.cwiseProduct(r);
    Vec sd_a = variance_pilot(locs, r2, H2_stage, locs, variance_floor, config.kernel).cwiseSqrt();
    Mat Sigma_hat = sd_a.asDiagonal() * Rhat * sd_a.asDiagonal();
    Mat Sigma_r2 = squared_residual_cov_normal(residual_covariance(S_H, Sigma_hat));
    Vec d = Sigma_r2.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Mat Rhat_r2 = d.asDiagonal() * Sigma_r2 * d.asDiagonal();
    Rhat_r2.diagonal().setOnes();
    out.H2 = select_bandwidth(var_objective(r2, Rhat_r2), H2_stage, config.simplex);
    return out;
}

}  // namespace

FittedComponents fit_components(const SpatialSample& sample, const std::vector<Location>& targets,
                                const FitConfig& config) {
    validate_sample(sample, 3);
    const auto& locs = sample.locations;
    const Vec& y = sample.values;
    const int n = sample.n();

    double y_mean = y.mean();
    double y_var = (y.array() - y_mean).square().sum() / std::max(n - 1, 1);
    double floor = 1e-6 * std::max(y_var, 1e-300);

    std::shared_ptr<const SmoothingPlan> plan = config.plan;
    if (!plan) {
        ResolvedBandwidths bw = resolve_bandwidths(sample, config, floor);
        plan = std::make_shared<SmoothingPlan>(
            make_smoothing_plan(locs, targets, bw.H, bw.H2, config.kernel));
    }
    if (plan->S_trend.rows() != n || plan->S_variance.rows() != n ||
        plan->S_trend_targets.rows() != static_cast<int>(targets.size()) ||
        plan->S_trend.cols() != n)
        throw ConfigError("fit_components: smoothing plan does not match sample/targets");

    FittedComponents fit;
    fit.sample = sample;
    fit.targets = targets;
    fit.S_trend = plan->S_trend;
    fit.S_variance = plan->S_variance;
    fit.H = plan->H;
    fit.H2 = plan->H2;
    fit.variance_floor = floor;

    fit.trend_sample = plan->S_trend * y;
    fit.trend_targets = plan->S_trend_targets * y;
    fit.residuals = y - fit.trend_sample;
    Vec r2 = fit.residuals.cwiseProduct(fit.residuals);

    fit.pilot_variance_sample = (plan->S_variance * r2).cwiseMax(floor);
    Vec sigma0 = fit.pilot_variance_sample.cwiseSqrt();
    fit.std_residuals = fit.residuals.cwiseQuotient(sigma0);

    SemivarianceCloud cloud = semivariance_cloud(fit.std_residuals, locs);
    fit.h3 = config.h3 ? *config.h3 : select_h3_cv(cloud, config.h3_grid);
    double cutoff = config.variogram_cutoff * cloud.max_lag();
    PilotVariogram pilot_curve = pilot_variogram(cloud, fit.h3, config.pilot_grid, cutoff);
    Vec fit_lags = cloud_lag_quantiles(cloud, config.pilot_grid, cutoff);
    fit.pilot_variogram_model =
        rescale_to_unit_sill(fit_shapiro_botha(pilot_curve, fit_lags, config.sb_basis));

    // iterative debiasing: current (sigma^2, gamma-bar) feed the plug-in
    // Sigma-hat = D R D that defines the next bias matrix
    Vec variance = fit.pilot_variance_sample;
    SBModel gamma = fit.pilot_variogram_model;
    Vec gamma_grid = evaluate_on_grid(gamma, pilot_curve.grid());
    Vec debiased = r2;
    fit.bias = Mat::Zero(n, n);
    fit.iterations = 0;
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        Mat R = correlation_matrix(locs, variogram_fn(gamma));
        Vec sd = variance.cwiseSqrt();
        Mat Sigma_hat = sd.asDiagonal() * R * sd.asDiagonal();
        fit.bias = bias_matrix(sd, plan->S_trend, Sigma_hat);

        debiased = debias_squared_residuals(r2, fit.bias);
        Vec variance_new = (plan->S_variance * debiased).cwiseMax(floor);
        SemivarianceCloud cleaned = corrected_cloud(cloud, fit.bias);
        PilotVariogram corrected_curve =
            pilot_variogram(cleaned, fit.h3, config.pilot_grid, cutoff);
        SBModel gamma_new =
            rescale_to_unit_sill(fit_shapiro_botha(corrected_curve, fit_lags, config.sb_basis));
        Vec gamma_grid_new = evaluate_on_grid(gamma_new, pilot_curve.grid());

        double change = std::max(max_relative_change(variance_new, variance),
                                 max_relative_change(gamma_grid_new, gamma_grid));
        variance = variance_new;
        gamma = gamma_new;
        gamma_grid = gamma_grid_new;
        ++fit.iterations;
        if (change < config.rel_tol) break;
    }

    fit.variance_sample = variance;
    fit.variance_targets = targets.empty()
                               ? Vec(0)
                               : (plan->S_variance_targets * debiased).cwiseMax(floor);
    fit.corrected_variogram_model = gamma;
    return fit;
}

}  // namespace nprisk
