#include "nprisk/kriging.hpp"

#include <algorithm>
#include <cmath>

namespace nprisk {

SimpleKriging::SimpleKriging(std::vector<Location> locs, Vec sd, VariogramFn unit_sill_gamma)
    : locs_(std::move(locs)), sd_(std::move(sd)), gamma_(std::move(unit_sill_gamma)) {
    const int n = static_cast<int>(locs_.size());
    if (sd_.size() != n || n < 1) throw ConfigError("SimpleKriging: invalid inputs");
    if (sd_.minCoeff() < 0.0) throw ConfigError("SimpleKriging: negative standard deviation");
    Mat C = correlation_matrix(locs_, gamma_);
    C = sd_.asDiagonal() * C * sd_.asDiagonal();
    chol_ = cholesky_psd(C);
}

Vec SimpleKriging::cross_covariance(const Location& target, double target_sd) const {
    Vec rho = cross_correlation(target, locs_, gamma_);
    return target_sd * rho.cwiseProduct(sd_);
}

Vec SimpleKriging::weights(const Vec& cross_cov) const {
    Vec v = chol_.triangularView<Eigen::Lower>().solve(cross_cov);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(v);
}

double SimpleKriging::predict(const Vec& cross_cov, const Vec& data) const {
    return weights(cross_cov).dot(data);
}

double SimpleKriging::variance(const Vec& cross_cov, double prior_var) const {
    Vec v = chol_.triangularView<Eigen::Lower>().solve(cross_cov);
    return std::max(prior_var - v.squaredNorm(), 0.0);
}

double simple_kriging_predict(const SimpleKriging& system, const Location& target,
                              double target_sd, const Vec& data) {
    return system.predict(system.cross_covariance(target, target_sd), data);
}

double simple_kriging_variance(const SimpleKriging& system, const Location& target,
                               double target_sd) {
    return system.variance(system.cross_covariance(target, target_sd), target_sd * target_sd);
}

OrdinaryKriging::OrdinaryKriging(std::vector<Location> locs, VariogramFn gamma)
    : locs_(std::move(locs)), gamma_(std::move(gamma)) {
    const int n = static_cast<int>(locs_.size());
    if (n < 2) throw ConfigError("OrdinaryKriging: need at least two locations");
    Mat A = Mat::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            A(i, j) = A(j, i) = gamma_(distance(locs_[i], locs_[j]));
    A.row(n).head(n).setOnes();
    A.col(n).head(n).setOnes();
    lu_.compute(A);
    Vec probe = lu_.solve(Vec::Unit(n + 1, n));
    if (!probe.allFinite() || (A * probe - Vec::Unit(n + 1, n)).cwiseAbs().maxCoeff() > 1e-6)
        throw SingularSystem("OrdinaryKriging: singular kriging system");
}

Vec OrdinaryKriging::weights(const Location& target) const {
    const int n = static_cast<int>(locs_.size());
    Vec rhs(n + 1);
    for (int i = 0; i < n; ++i) {
        double d = distance(target, locs_[i]);
        rhs[i] = d == 0.0 ? 0.0 : gamma_(d);
    }
    rhs[n] = 1.0;
    Vec sol = lu_.solve(rhs);
    if (!sol.allFinite()) throw SingularSystem("OrdinaryKriging: solve failed");
    return sol.head(n);
}

double OrdinaryKriging::predict(const Location& target, const Vec& values) const {
    if (values.size() != static_cast<int>(locs_.size()))
        throw ConfigError("OrdinaryKriging: data length mismatch");
    return weights(target).dot(values);
}

double ordinary_kriging_predict(const Vec& values, const VariogramFn& gamma,
                                const std::vector<Location>& locs, const Location& target) {
    return OrdinaryKriging(locs, gamma).predict(target, values);
}

}  // namespace nprisk
