#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nprisk/smoothing.hpp"
#include "nprisk/types.hpp"
#include "nprisk/variogram.hpp"

namespace nprisk {

/// Covariance of the residuals r = (I - S) Y:
///   Sigma_r = Sigma + S Sigma S^t - Sigma S^t - S Sigma = (I - S) Sigma (I - S)^t.
Mat residual_covariance(const Mat& S, const Mat& Sigma);

/// Bias matrix of direct residual use:
///   B = D^{-1} (S Sigma S^t - Sigma S^t - S Sigma) D^{-1},
/// so that Var(r_i) = sigma_i^2 (1 + b_ii).
Mat bias_matrix(const Vec& stddev, const Mat& S, const Mat& Sigma);

/// Gaussian approximation of the squared-residual covariance: 2 Sigma_r o Sigma_r.
Mat squared_residual_cov_normal(const Mat& Sigma_r);

/// Debiased variance estimate: the pilot smoother applied to
/// r_i^2 / (1 + b_ii), with 1 + b_ii floored at 0.1 and the result at floor.
Vec corrected_variance(const std::vector<Location>& locs, const Vec& squared_residuals,
                       const Mat& bias, const BandwidthMatrix& H2,
                       const std::vector<Location>& targets, double floor,
                       KernelType kernel = KernelType::Triweight);

/// Per-pair bias correction of the semivariance cloud:
///   sqdiff_ij -> sqdiff_ij - b_ii - b_jj + 2 b_ij  (may be negative).
SemivarianceCloud corrected_cloud(const SemivarianceCloud& cloud, const Mat& bias);

/// Precomputed smoothing matrices for one (locations, targets, H, H2) tuple.
/// The simulation harness builds this once per scenario and reuses it across
/// every simulated field.
struct SmoothingPlan {
    BandwidthMatrix H;
    BandwidthMatrix H2;
    Mat S_trend;             // n x n
    Mat S_variance;          // n x n
    Mat S_trend_targets;     // n0 x n
    Mat S_variance_targets;  // n0 x n
};

SmoothingPlan make_smoothing_plan(const std::vector<Location>& locs,
                                  const std::vector<Location>& targets, const BandwidthMatrix& H,
                                  const BandwidthMatrix& H2,
                                  KernelType kernel = KernelType::Triweight);

struct FitConfig {
    std::optional<BandwidthMatrix> trend_bandwidth;     // unset: CGCV selection
    std::optional<BandwidthMatrix> variance_bandwidth;  // unset: CGCV selection
    std::optional<double> h3;                           // unset: leave-pair-out CV
    KernelType kernel = KernelType::Triweight;
    int max_iterations = 10;
    double rel_tol = 1e-3;
    int sb_basis = 50;
    int pilot_grid = 100;
    int h3_grid = 30;
    double variogram_cutoff = 0.55;  // estimate/fit lags up to this fraction of max lag
    SimplexOptions simplex{};
    std::shared_ptr<const SmoothingPlan> plan;  // overrides bandwidth resolution
};

/// The joint nonparametric fit of trend, variance and variogram.
struct FittedComponents {
    SpatialSample sample;
    std::vector<Location> targets;

    Vec trend_sample;            // mu-hat at the sample locations
    Vec trend_targets;           // mu-hat at the estimation locations
    Vec pilot_variance_sample;   // initial variance estimate
    Vec variance_sample;         // debiased variance at the sample locations
    Vec variance_targets;        // debiased variance at the estimation locations
    Vec residuals;               // r = y - S y
    Vec std_residuals;           // r / sigma0-hat

    SBModel pilot_variogram_model;      // from raw standardized residuals (unit sill)
    SBModel corrected_variogram_model;  // after bias correction (unit sill)

    Mat S_trend;
    Mat S_variance;
    Mat bias;  // B-hat from the last iteration

    BandwidthMatrix H;
    BandwidthMatrix H2;
    double h3 = 0.0;
    double variance_floor = 0.0;
    int iterations = 0;
};

/// Full pipeline: trend smoothing, pilot variance/variogram, then the
/// iterative bias correction of variance and variogram until the maximum
/// relative change drops below rel_tol or max_iterations is hit.
FittedComponents fit_components(const SpatialSample& sample, const std::vector<Location>& targets,
                                const FitConfig& config = {});

}  // namespace nprisk
