// Independent brute-force references used by the tests. These deliberately
// avoid the library's solution paths: plain normal equations and dense
// inversions only.
#pragma once

#include <random>
#include <vector>

#include "nprisk/smoothing.hpp"
#include "nprisk/types.hpp"
#include "nprisk/variogram.hpp"

namespace oracle {

using nprisk::BandwidthMatrix;
using nprisk::Location;
using nprisk::Mat;
using nprisk::Vec;

// Local linear smoother vector by explicit weighted normal equations
// s^t = e1^t (X^t W X)^{-1} X^t W with full dense inversion.
inline Vec smoother_vector_wls(const Location& x, const std::vector<Location>& locs,
                               const BandwidthMatrix& H) {
    const int n = static_cast<int>(locs.size());
    Mat X(n, 3);
    Mat W = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double u1 = locs[i].x1 - x.x1;
        double u2 = locs[i].x2 - x.x2;
        X(i, 0) = 1.0;
        X(i, 1) = u1;
        X(i, 2) = u2;
        Eigen::Vector2d v = H.inverse() * Eigen::Vector2d(u1, u2);
        auto k = [](double t) {
            double a = std::abs(t);
            if (a >= 1.0) return 0.0;
            double q = 1.0 - t * t;
            return 35.0 / 32.0 * q * q * q;
        };
        W(i, i) = k(v[0]) * k(v[1]) / H.det();
    }
    Mat A = X.transpose() * W * X;
    Vec e1 = Vec::Zero(3);
    e1[0] = 1.0;
    Vec g = A.inverse() * e1;
    return (g.transpose() * X.transpose() * W).transpose();
}

// Simple kriging prediction by dense inversion of the covariance matrix.
inline double simple_kriging_dense(const std::vector<Location>& locs, const Vec& sd,
                                   const nprisk::VariogramFn& gamma, const Location& target,
                                   double target_sd, const Vec& data) {
    const int n = static_cast<int>(locs.size());
    Mat C(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = nprisk::distance(locs[i], locs[j]);
            double rho = d == 0.0 ? 1.0 : 1.0 - gamma(d);
            C(i, j) = sd[i] * sd[j] * rho;
        }
    Vec c(n);
    for (int i = 0; i < n; ++i) {
        double d = nprisk::distance(target, locs[i]);
        double rho = d == 0.0 ? 1.0 : 1.0 - gamma(d);
        c[i] = target_sd * sd[i] * rho;
    }
    return c.transpose() * C.inverse() * data;
}

// Ordinary kriging by dense inversion of the bordered variogram system.
inline double ordinary_kriging_dense(const std::vector<Location>& locs,
                                     const nprisk::VariogramFn& gamma, const Location& target,
                                     const Vec& data) {
    const int n = static_cast<int>(locs.size());
    Mat A = Mat::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A(i, j) = i == j ? 0.0 : gamma(nprisk::distance(locs[i], locs[j]));
    A.row(n).head(n).setOnes();
    A.col(n).head(n).setOnes();
    Vec rhs(n + 1);
    for (int i = 0; i < n; ++i) {
        double d = nprisk::distance(target, locs[i]);
        rhs[i] = d == 0.0 ? 0.0 : gamma(d);
    }
    rhs[n] = 1.0;
    Vec sol = A.inverse() * rhs;
    return sol.head(n).dot(data);
}

inline std::vector<Location> random_locations(int n, std::mt19937_64& rng,
                                              double min_separation = 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Location> locs;
    while (static_cast<int>(locs.size()) < n) {
        Location p{unit(rng), unit(rng)};
        bool ok = true;
        for (const Location& q : locs)
            if (nprisk::distance(p, q) < min_separation) {
                ok = false;
                break;
            }
        if (ok) locs.push_back(p);
    }
    return locs;
}

inline Vec random_vector(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

// Random SPD matrix M = G G^t + eps I.
inline Mat random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = gauss(rng);
    return G * G.transpose() + 0.1 * Mat::Identity(n, n);
}

// Random valid variogram: nonneg combination of J0 basis terms, unit sill,
// optionally with a nugget share.
inline nprisk::SBModel random_sb_model(std::mt19937_64& rng, double nugget_share = 0.0,
                                       int terms = 4) {
    std::uniform_real_distribution<double> node_dist(2.0, 40.0);
    std::uniform_real_distribution<double> weight_dist(0.1, 1.0);
    Vec nodes(terms), weights(terms);
    for (int j = 0; j < terms; ++j) {
        nodes[j] = node_dist(rng);
        weights[j] = weight_dist(rng);
    }
    weights *= (1.0 - nugget_share) / weights.sum();
    return nprisk::SBModel(nugget_share, nodes, weights);
}

}  // namespace oracle
