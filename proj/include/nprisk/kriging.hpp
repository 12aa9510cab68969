#pragma once

#include <vector>

#include "nprisk/types.hpp"
#include "nprisk/variogram.hpp"

namespace nprisk {

/// Simple kriging for a zero-mean heteroscedastic error process with
/// covariance C_ij = sd_i sd_j rho(|x_i - x_j|), rho = 1 - gamma. The system
/// is factored once and shared across targets and bootstrap replicates.
class SimpleKriging {
public:
    SimpleKriging(std::vector<Location> locs, Vec sd, VariogramFn unit_sill_gamma);

    int n() const { return static_cast<int>(locs_.size()); }

    /// Covariance between the process at target (with standard deviation
    /// target_sd) and each conditioning site.
    Vec cross_covariance(const Location& target, double target_sd) const;

    /// Kriging weights lambda = C^{-1} c; reusable against any data vector.
    Vec weights(const Vec& cross_cov) const;

    /// Prediction c^t C^{-1} data for zero-mean data.
    double predict(const Vec& cross_cov, const Vec& data) const;

    /// prior_var - c^t C^{-1} c, floored at zero.
    double variance(const Vec& cross_cov, double prior_var) const;

private:
    std::vector<Location> locs_;
    Vec sd_;
    VariogramFn gamma_;
    Mat chol_;  // lower factor of C
};

double simple_kriging_predict(const SimpleKriging& system, const Location& target,
                              double target_sd, const Vec& data);
double simple_kriging_variance(const SimpleKriging& system, const Location& target,
                               double target_sd);

/// Ordinary kriging in variogram form with a Lagrange multiplier; weights sum
/// to one. The bordered system is factored once and reused per target.
class OrdinaryKriging {
public:
    OrdinaryKriging(std::vector<Location> locs, VariogramFn gamma);

    double predict(const Location& target, const Vec& values) const;
    Vec weights(const Location& target) const;  // length n (multiplier dropped)

private:
    std::vector<Location> locs_;
    VariogramFn gamma_;
    Eigen::PartialPivLU<Mat> lu_;
};

double ordinary_kriging_predict(const Vec& values, const VariogramFn& gamma,
                                const std::vector<Location>& locs, const Location& target);

}  // namespace nprisk
