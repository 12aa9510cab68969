#pragma once

#include <functional>
#include <vector>

#include "nprisk/types.hpp"

namespace nprisk {

/// Symmetric positive definite 2x2 bandwidth matrix.
class BandwidthMatrix {
public:
    BandwidthMatrix() : BandwidthMatrix(Eigen::Matrix2d::Identity()) {}
    explicit BandwidthMatrix(const Eigen::Matrix2d& H);
    static BandwidthMatrix diagonal(double h1, double h2);
    static BandwidthMatrix from_elements(double h11, double h12, double h22);

    const Eigen::Matrix2d& matrix() const { return H_; }
    const Eigen::Matrix2d& inverse() const { return Hinv_; }
    double det() const { return det_; }

private:
    Eigen::Matrix2d H_;
    Eigen::Matrix2d Hinv_;
    double det_;
};

enum class KernelType { Triweight, Epanechnikov, GaussianTruncated };

/// One-dimensional kernel on [-1, 1] (Gaussian truncated at |t| = 3, rescaled
/// argument). Triweight: (35/32)(1 - t^2)^3.
double kernel_1d(KernelType kernel, double t);

/// Multiplicative triweight on the unit box.
double triweight_kernel_2d(double u1, double u2);

/// Product kernel K_H(u) = |H|^{-1} K(H^{-1} u).
double scaled_kernel_2d(KernelType kernel, const BandwidthMatrix& H, double u1, double u2);

/// Local linear smoother vector s such that the fit at x is s . y.
/// Entries sum to 1. Throws SingularLocalFit when the kernel window holds too
/// little data even after the ridge rescue.
Vec smoother_vector(const Location& x, const std::vector<Location>& locs,
                    const BandwidthMatrix& H, KernelType kernel = KernelType::Triweight);

/// n x n matrix whose i-th row is the smoother vector at locs[i].
Mat smoothing_matrix(const std::vector<Location>& locs, const BandwidthMatrix& H,
                     KernelType kernel = KernelType::Triweight);

/// m x n matrix of smoother vectors at arbitrary targets.
Mat smoother_rows(const std::vector<Location>& targets, const std::vector<Location>& locs,
                  const BandwidthMatrix& H, KernelType kernel = KernelType::Triweight);

/// Local linear fits of sample.values at each target.
Vec smooth_at(const SpatialSample& sample, const BandwidthMatrix& H,
              const std::vector<Location>& targets, KernelType kernel = KernelType::Triweight);

/// Local linear smoothing of squared residuals, truncated below at floor.
Vec variance_pilot(const std::vector<Location>& locs, const Vec& squared_residuals,
                   const BandwidthMatrix& H2, const std::vector<Location>& targets,
                   double floor, KernelType kernel = KernelType::Triweight);

/// Correlation-corrected generalized cross-validation score
///   (1/n) sum_i [ (y_i - (S y)_i) / (1 - tr(S Rhat)/n) ]^2.
/// Rhat = I reduces to ordinary GCV. Throws DegenerateDenominator when
/// |1 - tr(S Rhat)/n| < 1e-10.
double cgcv(const Vec& y, const Mat& S, const Mat& Rhat);

/// Same criterion with squared residuals in place of y.
double cgcv_variance(const Vec& squared_residuals, const Mat& S2, const Mat& Rhat_r2);

/// Mean average squared error of a linear smoother against known truth:
///   (1/n) |S mu - mu|^2 + (1/n) tr(S Sigma S^t).
double mase(const Mat& S, const Vec& mu_true, const Mat& Sigma_true);

struct SimplexOptions {
    int max_evaluations = 200;
    double relative_tolerance = 1e-6;
    double log_step = 0.25;  // initial simplex displacement per coordinate
};

/// Derivative-free Nelder-Mead minimization over the 3-parameter log-Cholesky
/// encoding of H (H = L L^t; parameters log L11, log L22, L21). Deterministic
/// given the objective and init. Non-finite objective values during the search
/// are treated as +inf; a non-finite value at init throws NonFiniteObjective.
BandwidthMatrix select_bandwidth(const std::function<double(const BandwidthMatrix&)>& objective,
                                 const BandwidthMatrix& init, const SimplexOptions& opts = {});

/// Scale-rule bandwidth (diagonal, sd(x_j) n^{-1/6}); search starting point.
BandwidthMatrix reference_bandwidth(const std::vector<Location>& locs);

}  // namespace nprisk
