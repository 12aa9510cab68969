#pragma once

#include <functional>
#include <vector>

#include "nprisk/types.hpp"

namespace nprisk {

/// Evaluable isotropic semivariogram, lag >= 0.
using VariogramFn = std::function<double(double)>;

/// Sample semivariances of standardized residuals: one entry per unordered
/// pair i < j, sqdiff = (e_i - e_j)^2. Bias correction may drive sqdiff
/// negative; the local linear fit absorbs that and only the fitted curve is
/// truncated at zero.
struct SemivarianceCloud {
    struct Pair {
        double lag;
        double sqdiff;
        int i;
        int j;
    };
    std::vector<Pair> pairs;

    double max_lag() const;
    double min_lag() const;
};

SemivarianceCloud semivariance_cloud(const Vec& std_residuals, const std::vector<Location>& locs);

/// Local linear pilot variogram: the cloud is smoothed against lag on a
/// fixed grid, halved (the cloud estimates 2*gamma) and truncated at zero.
/// Evaluation interpolates linearly and clamps outside [0, max_lag].
class PilotVariogram {
public:
    PilotVariogram(Vec grid, Vec values, double h3);

    double operator()(double lag) const;
    const Vec& grid() const { return grid_; }
    const Vec& values() const { return values_; }
    double bandwidth() const { return h3_; }
    double max_lag() const { return grid_[grid_.size() - 1]; }

private:
    Vec grid_;
    Vec values_;
    double h3_;
};

/// grid_max 0 means the cloud's max lag. Estimating only to a fraction of the
/// max lag (the pipeline uses 0.55) is the usual variography cutoff: extreme
/// lags hold few pairs and unstable estimates.
PilotVariogram pilot_variogram(const SemivarianceCloud& cloud, double h3, int grid_points = 100,
                               double grid_max = 0.0);

/// Leave-pair-out relative squared error of the lag smoother at bandwidth h3:
///   sum_{i<j} [ sqdiff_ij / (2 gamma^{-(i,j)}(lag_ij)) - 1 ]^2.
/// Each excluded fit is exact: the pair's own contribution is removed from
/// the local moments at its lag. +inf when some pair's window holds no other
/// data.
double h3_cv_objective(const SemivarianceCloud& cloud, double h3);

/// Scalar bandwidth minimizing h3_cv_objective over a logarithmic candidate
/// grid from min lag to max lag.
double select_h3_cv(const SemivarianceCloud& cloud, int grid_size = 30);

/// Isotropic Matern variogram with unit sill.
struct MaternParams {
    double c0 = 0.0;  // nugget, in [0, 1)
    double a = 1.0;   // scale, proportional to the practical range
    double nu = 0.5;  // smoothness

    void validate() const;
};

double matern_variogram(double lag, const MaternParams& p);

/// Valid isotropic variogram in R^2: nonnegative combination of
/// 1 - J0(t_j h) basis functions plus a nugget.
class SBModel {
public:
    SBModel() = default;
    SBModel(double nugget, Vec nodes, Vec weights);

    double operator()(double lag) const;
    double nugget() const { return nugget_; }
    const Vec& nodes() const { return nodes_; }
    const Vec& weights() const { return weights_; }
    double sill() const { return nugget_ + weights_.sum(); }

private:
    double nugget_ = 0.0;
    Vec nodes_;
    Vec weights_;
};

/// Nonnegative least squares fit of an SBModel to a pilot curve, by default
/// on the pilot's own positive lag grid. The overload fits on caller-supplied
/// lags instead; the joint-estimation pipeline passes pair-count quantiles of
/// the semivariance cloud there, so sparsely-populated extreme lags do not
/// dominate the equal-weight fit. Node half-decays span [min fit lag,
/// max fit lag / 2]; slower basis terms would count toward the sill without
/// lifting the in-range curve.
SBModel fit_shapiro_botha(const PilotVariogram& pilot, int basis_size = 50);
SBModel fit_shapiro_botha(const PilotVariogram& pilot, const Vec& fit_lags, int basis_size = 50);

/// Pair-lag quantiles (deduplicated) for the fit grid above; lags beyond
/// max_lag are dropped first when max_lag > 0.
Vec cloud_lag_quantiles(const SemivarianceCloud& cloud, int count = 100, double max_lag = 0.0);

/// Divides all coefficients by the sill. Throws ZeroSill.
SBModel rescale_to_unit_sill(const SBModel& model);

/// Lawson-Hanson active-set nonnegative least squares: min |A x - b| s.t. x >= 0.
Vec nnls(const Mat& A, const Vec& b, double tol = 1e-10, int max_iterations = 0);

/// R_ij = 1 - gamma(|x_i - x_j|); unit diagonal. gamma must have unit sill.
Mat correlation_matrix(const std::vector<Location>& locs, const VariogramFn& gamma);

/// rho(|target - x_i|) per sample location.
Vec cross_correlation(const Location& target, const std::vector<Location>& locs,
                      const VariogramFn& gamma);

/// Cholesky factor of a symmetric PSD matrix, retrying with diagonal jitter
/// 1e-10, 1e-8, 1e-6 before throwing NotPSD.
Mat cholesky_psd(const Mat& M);

inline VariogramFn variogram_fn(const SBModel& m) {
    return [m](double h) { return m(h); };
}
inline VariogramFn variogram_fn(const MaternParams& p) {
    return [p](double h) { return matern_variogram(h, p); };
}
inline VariogramFn variogram_fn(const PilotVariogram& pv) {
    return [pv](double h) { return pv(h); };
}

namespace detail {

/// Windowed moment index over sorted (lag, value) pairs. Answers
///   M_j(t) = sum_{q in [lo,hi)} (lag_q - t)^j   and the value-weighted
///   Z_j(t) analogue for j = 0..8 in O(log n), with per-node centered moments
/// so recentering stays cancellation-free. Backs the exact leave-pair-out
/// cross-validation; the direct scan in pilot_variogram is its oracle.
class LagMomentIndex {
public:
    static constexpr int kMoments = 9;

    LagMomentIndex(const std::vector<double>& sorted_lags, const std::vector<double>& values);

    /// Centered moments of entries in index range [lo, hi) about t.
    void query(int lo, int hi, double t, double* M, double* Z) const;

private:
    struct Node {
        double center;
        double M[kMoments];
        double Z[kMoments];
    };

    void fill_leaf(int chunk, Node& node) const;
    void combine(const Node& a, const Node& b, Node& out) const;

    const std::vector<double>& lags_;
    const std::vector<double>& values_;
    int chunk_size_;
    int n_chunks_;
    std::vector<Node> tree_;  // 1-based heap layout over chunks
    int tree_base_ = 0;
};

}  // namespace detail

}  // namespace nprisk
