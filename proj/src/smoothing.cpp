#include "nprisk/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nprisk {

BandwidthMatrix::BandwidthMatrix(const Eigen::Matrix2d& H) : H_(H) {
    if (!H.allFinite() || std::abs(H(0, 1) - H(1, 0)) > 1e-12 * (1.0 + H.cwiseAbs().maxCoeff()))
        throw ConfigError("bandwidth matrix must be finite and symmetric");
    H_(0, 1) = H_(1, 0) = 0.5 * (H(0, 1) + H(1, 0));
    det_ = H_(0, 0) * H_(1, 1) - H_(0, 1) * H_(1, 0);
    double tr = H_(0, 0) + H_(1, 1);
    if (det_ <= 0.0 || tr <= 0.0)
        throw ConfigError("bandwidth matrix must be positive definite");
    Hinv_ << H_(1, 1) / det_, -H_(0, 1) / det_, -H_(1, 0) / det_, H_(0, 0) / det_;
}

BandwidthMatrix BandwidthMatrix::diagonal(double h1, double h2) {
    Eigen::Matrix2d H;
    H << h1, 0.0, 0.0, h2;
    return BandwidthMatrix(H);
}

BandwidthMatrix BandwidthMatrix::from_elements(double h11, double h12, double h22) {
    Eigen::Matrix2d H;
    H << h11, h12, h12, h22;
    return BandwidthMatrix(H);
}

double kernel_1d(KernelType kernel, double t) {
    double a = std::abs(t);
    switch (kernel) {
        case KernelType::Triweight: {
            if (a >= 1.0) return 0.0;
            double q = 1.0 - t * t;
            return (35.0 / 32.0) * q * q * q;
        }
        case KernelType::Epanechnikov:
            return a >= 1.0 ? 0.0 : 0.75 * (1.0 - t * t);
        case KernelType::GaussianTruncated: {
            // support scaled to [-1, 1]; standard normal truncated at 3 sigma
            if (a >= 1.0) return 0.0;
            double z = 3.0 * t;
            return 3.0 * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        }
    }
    return 0.0;
}

double triweight_kernel_2d(double u1, double u2) {
    return kernel_1d(KernelType::Triweight, u1) * kernel_1d(KernelType::Triweight, u2);
}

double scaled_kernel_2d(KernelType kernel, const BandwidthMatrix& H, double u1, double u2) {
    const Eigen::Matrix2d& Hinv = H.inverse();
    double v1 = Hinv(0, 0) * u1 + Hinv(0, 1) * u2;
    double v2 = Hinv(1, 0) * u1 + Hinv(1, 1) * u2;
    return kernel_1d(kernel, v1) * kernel_1d(kernel, v2) / H.det();
}

namespace {

// Weighted normal equations of the local plane fit at x, accumulated in
// centered coordinates. Solve g = A^{-1} e1; smoother entries are then
// g . [1, dx, dy] * w per point.
struct LocalFit {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    double weight_sum = 0.0;
    int support = 0;
};

LocalFit accumulate(const Location& x, const std::vector<Location>& locs,
                    const BandwidthMatrix& H, KernelType kernel, std::vector<double>& w,
                    std::vector<double>& dx, std::vector<double>& dy) {
    const int n = static_cast<int>(locs.size());
    w.resize(n);
    dx.resize(n);
    dy.resize(n);
    LocalFit fit;
    for (int i = 0; i < n; ++i) {
        dx[i] = locs[i].x1 - x.x1;
        dy[i] = locs[i].x2 - x.x2;
        double wi = scaled_kernel_2d(kernel, H, dx[i], dy[i]);
        w[i] = wi;
        if (wi <= 0.0) continue;
        ++fit.support;
        fit.weight_sum += wi;
        fit.A(0, 0) += wi;
        fit.A(0, 1) += wi * dx[i];
        fit.A(0, 2) += wi * dy[i];
        fit.A(1, 1) += wi * dx[i] * dx[i];
        fit.A(1, 2) += wi * dx[i] * dy[i];
        fit.A(2, 2) += wi * dy[i] * dy[i];
    }
    fit.A(1, 0) = fit.A(0, 1);
    fit.A(2, 0) = fit.A(0, 2);
    fit.A(2, 1) = fit.A(1, 2);
    return fit;
}

bool solve_e1(const Eigen::Matrix3d& A, Eigen::Vector3d& g) {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return false;
    g = lu.solve(Eigen::Vector3d::UnitX());
    return g.allFinite();
}

}  // namespace

Vec smoother_vector(const Location& x, const std::vector<Location>& locs,
                    const BandwidthMatrix& H, KernelType kernel) {
    std::vector<double> w, dx, dy;
    LocalFit fit = accumulate(x, locs, H, kernel, w, dx, dy);
    if (fit.weight_sum <= 0.0)
        throw SingularLocalFit("no sample points inside the kernel support");
    Eigen::Vector3d g;
    if (!solve_e1(fit.A, g)) {
        // Ridge rescue on the slope block only; the constant-term column is
        // untouched so constants are still reproduced exactly.
        double ridge = 1e-8 * fit.A.trace() / 3.0;
        Eigen::Matrix3d Ar = fit.A;
        Ar(1, 1) += ridge;
        Ar(2, 2) += ridge;
        if (ridge <= 0.0 || !solve_e1(Ar, g))
            throw SingularLocalFit("local design is singular even after ridge");
    }
    const int n = static_cast<int>(locs.size());
    Vec s(n);
    for (int i = 0; i < n; ++i)
        s[i] = w[i] > 0.0 ? w[i] * (g[0] + g[1] * dx[i] + g[2] * dy[i]) : 0.0;
    return s;
}

Mat smoother_rows(const std::vector<Location>& targets, const std::vector<Location>& locs,
                  const BandwidthMatrix& H, KernelType kernel) {
    Mat S(targets.size(), locs.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
        S.row(t) = smoother_vector(targets[t], locs, H, kernel).transpose();
    return S;
}

Mat smoothing_matrix(const std::vector<Location>& locs, const BandwidthMatrix& H,
                     KernelType kernel) {
    return smoother_rows(locs, locs, H, kernel);
}

Vec smooth_at(const SpatialSample& sample, const BandwidthMatrix& H,
              const std::vector<Location>& targets, KernelType kernel) {
    Vec out(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
        out[t] = smoother_vector(targets[t], sample.locations, H, kernel).dot(sample.values);
    return out;
}

Vec variance_pilot(const std::vector<Location>& locs, const Vec& squared_residuals,
                   const BandwidthMatrix& H2, const std::vector<Location>& targets,
                   double floor, KernelType kernel) {
    if (squared_residuals.minCoeff() < 0.0)
        throw ConfigError("variance_pilot: squared residuals must be nonnegative");
    SpatialSample r2{locs, squared_residuals};
    Vec v = smooth_at(r2, H2, targets, kernel);
    return v.cwiseMax(floor);
}

double cgcv(const Vec& y, const Mat& S, const Mat& Rhat) {
    const int n = static_cast<int>(y.size());
    double denom = 1.0 - S.cwiseProduct(Rhat.transpose()).sum() / n;
    if (std::abs(denom) < 1e-10)
        throw DegenerateDenominator("cgcv: 1 - tr(S Rhat)/n vanishes");
    Vec residuals = y - S * y;
    return residuals.squaredNorm() / (denom * denom) / n;
}

double cgcv_variance(const Vec& squared_residuals, const Mat& S2, const Mat& Rhat_r2) {
    return cgcv(squared_residuals, S2, Rhat_r2);
}

double mase(const Mat& S, const Vec& mu_true, const Mat& Sigma_true) {
    const int n = static_cast<int>(mu_true.size());
    Vec bias = S * mu_true - mu_true;
    Mat SSigma = S * Sigma_true;
    double variance = SSigma.cwiseProduct(S).sum();
    return (bias.squaredNorm() + variance) / n;
}

namespace {

Eigen::Vector3d encode_log_cholesky(const BandwidthMatrix& H) {
    Eigen::LLT<Eigen::Matrix2d> llt(H.matrix());
    if (llt.info() != Eigen::Success)
        throw ConfigError("select_bandwidth: init bandwidth is not positive definite");
    Eigen::Matrix2d L = llt.matrixL();
    return {std::log(L(0, 0)), std::log(L(1, 1)), L(1, 0)};
}

BandwidthMatrix decode_log_cholesky(const Eigen::Vector3d& p) {
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    L(0, 0) = std::exp(p[0]);
    L(1, 1) = std::exp(p[1]);
    L(1, 0) = p[2];
    return BandwidthMatrix(L * L.transpose());
}

}  // namespace

BandwidthMatrix select_bandwidth(const std::function<double(const BandwidthMatrix&)>& objective,
                                 const BandwidthMatrix& init, const SimplexOptions& opts) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    Eigen::Vector3d best_point;
    double best_value = kInf;
    bool have_best = false;

    auto eval = [&](const Eigen::Vector3d& p) -> double {
        if (evaluations >= opts.max_evaluations) return kInf;
        ++evaluations;
        double v;
        try {
            v = objective(decode_log_cholesky(p));
        } catch (const Error&) {
            return kInf;
        }
        if (!std::isfinite(v)) return kInf;
        if (!have_best || v < best_value) {
            best_value = v;
            best_point = p;
            have_best = true;
        }
        return v;
    };

    Eigen::Vector3d p0 = encode_log_cholesky(init);
    double f0 = eval(p0);
    if (!std::isfinite(f0))
        throw NonFiniteObjective("select_bandwidth: objective not finite at init");

    // Nelder-Mead with standard coefficients.
    struct Vertex {
        Eigen::Vector3d p;
        double f;
    };
    std::vector<Vertex> simplex{{p0, f0}};
    double off_step = opts.log_step * std::exp(0.5 * (p0[0] + p0[1]));
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d p = p0;
        p[i] += (i < 2) ? opts.log_step : off_step;
        simplex.push_back({p, eval(p)});
    }

    auto order = [&]() {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    order();

    while (evaluations < opts.max_evaluations) {
        double fl = simplex[0].f, fh = simplex[3].f;
        if (std::isfinite(fh) &&
            fh - fl <= opts.relative_tolerance * (std::abs(fl) + opts.relative_tolerance))
            break;
        Eigen::Vector3d centroid = (simplex[0].p + simplex[1].p + simplex[2].p) / 3.0;
        Eigen::Vector3d xr = centroid + (centroid - simplex[3].p);
        double fr = eval(xr);
        if (fr < simplex[0].f) {
            Eigen::Vector3d xe = centroid + 2.0 * (centroid - simplex[3].p);
            double fe = eval(xe);
            simplex[3] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < simplex[2].f) {
            simplex[3] = {xr, fr};
        } else {
            bool outside = fr < simplex[3].f;
            Eigen::Vector3d xc = outside ? Eigen::Vector3d(centroid + 0.5 * (xr - centroid))
                                         : Eigen::Vector3d(centroid - 0.5 * (centroid - simplex[3].p));
            double fc = eval(xc);
            if (fc < (outside ? fr : simplex[3].f)) {
                simplex[3] = {xc, fc};
            } else {
                for (int i = 1; i < 4; ++i) {
                    simplex[i].p = simplex[0].p + 0.5 * (simplex[i].p - simplex[0].p);
                    simplex[i].f = eval(simplex[i].p);
                }
            }
        }
        order();
    }
    return decode_log_cholesky(have_best ? best_point : p0);
}

BandwidthMatrix reference_bandwidth(const std::vector<Location>& locs) {
    const int n = static_cast<int>(locs.size());
    if (n < 2) throw ConfigError("reference_bandwidth: need at least two locations");
    double m1 = 0.0, m2 = 0.0;
    for (const Location& p : locs) {
        m1 += p.x1;
        m2 += p.x2;
    }
    m1 /= n;
    m2 /= n;
    double v1 = 0.0, v2 = 0.0;
    for (const Location& p : locs) {
        v1 += (p.x1 - m1) * (p.x1 - m1);
        v2 += (p.x2 - m2) * (p.x2 - m2);
    }
    double scale = std::pow(n, -1.0 / 6.0);
    double h1 = std::sqrt(v1 / (n - 1)) * scale;
    double h2 = std::sqrt(v2 / (n - 1)) * scale;
    double fallback = std::max(h1, h2);
    if (fallback <= 0.0) throw ConfigError("reference_bandwidth: degenerate configuration");
    return BandwidthMatrix::diagonal(h1 > 0 ? h1 : fallback, h2 > 0 ? h2 : fallback);
}

}  // namespace nprisk
