#include "nprisk/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace nprisk {

namespace {

constexpr double kTriweightPeak = 35.0 / 32.0;
constexpr double kJ0Half = 1.5211;  // J0(kJ0Half) = 1/2; sets basis half-decay lags

double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

}  // namespace

double SemivarianceCloud::max_lag() const {
    double m = 0.0;
    for (const Pair& p : pairs) m = std::max(m, p.lag);
    return m;
}

double SemivarianceCloud::min_lag() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Pair& p : pairs) m = std::min(m, p.lag);
    return m;
}

SemivarianceCloud semivariance_cloud(const Vec& std_residuals,
                                     const std::vector<Location>& locs) {
    const int n = static_cast<int>(locs.size());
    if (std_residuals.size() != n)
        throw ConfigError("semivariance_cloud: residuals and locations differ in length");
    SemivarianceCloud cloud;
    cloud.pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = std_residuals[i] - std_residuals[j];
            cloud.pairs.push_back({distance(locs[i], locs[j]), d * d, i, j});
        }
    return cloud;
}

// ---------------------------------------------------------------------------
// 1-D local linear machinery over (lag, sqdiff) pairs
// ---------------------------------------------------------------------------

namespace {

struct LagData {
    std::vector<double> lags;    // sorted ascending
    std::vector<double> values;  // matching order
};

LagData sorted_cloud(const SemivarianceCloud& cloud) {
    std::vector<int> order(cloud.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return cloud.pairs[a].lag < cloud.pairs[b].lag;
    });
    LagData data;
    data.lags.reserve(order.size());
    data.values.reserve(order.size());
    for (int idx : order) {
        data.lags.push_back(cloud.pairs[idx].lag);
        data.values.push_back(cloud.pairs[idx].sqdiff);
    }
    return data;
}

struct LagMoments {
    double S0 = 0, S1 = 0, S2 = 0;  // kernel-weighted sums of u^m
    double T0 = 0, T1 = 0;          // value-weighted analogues
    int support = 0;
};

// Triweight-weighted moments over the window |lag - t| <= h, by direct scan.
LagMoments direct_moments(const LagData& data, double t, double h) {
    LagMoments m;
    auto lo = std::lower_bound(data.lags.begin(), data.lags.end(), t - h);
    auto hi = std::upper_bound(data.lags.begin(), data.lags.end(), t + h);
    for (auto it = lo; it != hi; ++it) {
        double u = *it - t;
        double q = 1.0 - (u / h) * (u / h);
        if (q <= 0.0) continue;
        double w = kTriweightPeak * q * q * q;
        double z = data.values[it - data.lags.begin()];
        m.S0 += w;
        m.S1 += w * u;
        m.S2 += w * u * u;
        m.T0 += w * z;
        m.T1 += w * u * z;
        ++m.support;
    }
    return m;
}

// Local linear fit value at the window center; local constant when the
// design degenerates to a single lag. NaN when the window is empty.
double fit_from_moments(const LagMoments& m) {
    if (m.S0 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    double det = m.S0 * m.S2 - m.S1 * m.S1;
    if (det > 1e-12 * m.S0 * m.S2) return (m.S2 * m.T0 - m.S1 * m.T1) / det;
    return m.T0 / m.S0;
}

}  // namespace

PilotVariogram::PilotVariogram(Vec grid, Vec values, double h3)
    : grid_(std::move(grid)), values_(std::move(values)), h3_(h3) {
    if (grid_.size() < 2 || grid_.size() != values_.size())
        throw ConfigError("PilotVariogram: invalid grid");
}

double PilotVariogram::operator()(double lag) const {
    const int g = static_cast<int>(grid_.size());
    if (lag <= grid_[0]) return values_[0];
    if (lag >= grid_[g - 1]) return values_[g - 1];
    auto it = std::upper_bound(grid_.data(), grid_.data() + g, lag);
    int j = static_cast<int>(it - grid_.data());
    double w = (lag - grid_[j - 1]) / (grid_[j] - grid_[j - 1]);
    return (1.0 - w) * values_[j - 1] + w * values_[j];
}

PilotVariogram pilot_variogram(const SemivarianceCloud& cloud, double h3, int grid_points,
                               double grid_max) {
    if (cloud.pairs.size() < 1) throw DegenerateCloud("pilot_variogram: empty cloud");
    if (grid_points < 2) throw ConfigError("pilot_variogram: need at least two grid points");
    if (!(h3 > 0.0)) throw ConfigError("pilot_variogram: bandwidth must be positive");
    double max_lag = grid_max > 0.0 ? grid_max : cloud.max_lag();
    if (cloud.min_lag() >= cloud.max_lag())
        throw DegenerateCloud("pilot_variogram: all lags identical");
    LagData data = sorted_cloud(cloud);

    Vec grid(grid_points), values(grid_points);
    for (int g = 0; g < grid_points; ++g) {
        double t = max_lag * g / (grid_points - 1);
        grid[g] = t;
        // enlarge the window until it holds data (sparse-lag rescue)
        double h = h3;
        LagMoments m = direct_moments(data, t, h);
        while (m.support < 2 && h < 4.0 * max_lag) {
            h *= 2.0;
            m = direct_moments(data, t, h);
        }
        double fit = fit_from_moments(m);
        if (!std::isfinite(fit))
            throw DegenerateCloud("pilot_variogram: no data near lag " + std::to_string(t));
        values[g] = std::max(0.5 * fit, 0.0);  // cloud estimates 2*gamma
    }
    return PilotVariogram(std::move(grid), std::move(values), h3);
}

// ---------------------------------------------------------------------------
// Windowed moment index (exact leave-pair-out support)
// ---------------------------------------------------------------------------

namespace detail {

namespace {

constexpr int kMaxDeg = LagMomentIndex::kMoments - 1;

const double* binomial_table() {
    static double C[LagMomentIndex::kMoments][LagMomentIndex::kMoments] = {};
    static bool init = [] {
        for (int j = 0; j <= kMaxDeg; ++j) {
            C[j][0] = C[j][j] = 1.0;
            for (int i = 1; i < j; ++i) C[j][i] = C[j - 1][i - 1] + C[j - 1][i];
        }
        return true;
    }();
    (void)init;
    return &C[0][0];
}

inline double binom(int j, int i) {
    return binomial_table()[j * LagMomentIndex::kMoments + i];
}

// out_j += sum_i C(j,i) m_i s^(j-i): moments recentered by shift s.
void add_recentred(const double* m, double s, double* out) {
    double spow[LagMomentIndex::kMoments];
    spow[0] = 1.0;
    for (int j = 1; j <= kMaxDeg; ++j) spow[j] = spow[j - 1] * s;
    for (int j = 0; j <= kMaxDeg; ++j) {
        double acc = 0.0;
        for (int i = 0; i <= j; ++i) acc += binom(j, i) * m[i] * spow[j - i];
        out[j] += acc;
    }
}

}  // namespace

LagMomentIndex::LagMomentIndex(const std::vector<double>& sorted_lags,
                               const std::vector<double>& values)
    : lags_(sorted_lags), values_(values), chunk_size_(32) {
    const int n = static_cast<int>(lags_.size());
    n_chunks_ = (n + chunk_size_ - 1) / chunk_size_;
    tree_base_ = 1;
    while (tree_base_ < n_chunks_) tree_base_ *= 2;
    tree_.assign(2 * tree_base_, Node{});
    for (int c = 0; c < n_chunks_; ++c) fill_leaf(c, tree_[tree_base_ + c]);
    for (int k = tree_base_ - 1; k >= 1; --k)
        combine(tree_[2 * k], tree_[2 * k + 1], tree_[k]);
}

void LagMomentIndex::fill_leaf(int chunk, Node& node) const {
    const int n = static_cast<int>(lags_.size());
    int s = chunk * chunk_size_;
    int e = std::min(s + chunk_size_, n);
    node.center = 0.5 * (lags_[s] + lags_[e - 1]);
    std::fill(node.M, node.M + kMoments, 0.0);
    std::fill(node.Z, node.Z + kMoments, 0.0);
    for (int q = s; q < e; ++q) {
        double u = lags_[q] - node.center;
        double z = values_[q];
        double up = 1.0;
        for (int j = 0; j <= kMaxDeg; ++j) {
            node.M[j] += up;
            node.Z[j] += up * z;
            up *= u;
        }
    }
}

void LagMomentIndex::combine(const Node& a, const Node& b, Node& out) const {
    if (a.M[0] == 0.0) {
        out = b;
        return;
    }
    if (b.M[0] == 0.0) {
        out = a;
        return;
    }
    out.center = (a.center * a.M[0] + b.center * b.M[0]) / (a.M[0] + b.M[0]);
    std::fill(out.M, out.M + kMoments, 0.0);
    std::fill(out.Z, out.Z + kMoments, 0.0);
    add_recentred(a.M, a.center - out.center, out.M);
    add_recentred(a.Z, a.center - out.center, out.Z);
    add_recentred(b.M, b.center - out.center, out.M);
    add_recentred(b.Z, b.center - out.center, out.Z);
}

void LagMomentIndex::query(int lo, int hi, double t, double* M, double* Z) const {
    std::fill(M, M + kMoments, 0.0);
    std::fill(Z, Z + kMoments, 0.0);
    if (lo >= hi) return;
    auto add_elements = [&](int s, int e) {
        for (int q = s; q < e; ++q) {
            double u = lags_[q] - t;
            double z = values_[q];
            double up = 1.0;
            for (int j = 0; j <= kMaxDeg; ++j) {
                M[j] += up;
                Z[j] += up * z;
                up *= u;
            }
        }
    };
    int lo_chunk = lo / chunk_size_;
    int hi_chunk = (hi - 1) / chunk_size_;
    if (hi_chunk - lo_chunk <= 1) {
        add_elements(lo, hi);
        return;
    }
    add_elements(lo, (lo_chunk + 1) * chunk_size_);
    add_elements(hi_chunk * chunk_size_, hi);
    int l = lo_chunk + 1 + tree_base_;
    int r = hi_chunk + tree_base_;
    while (l < r) {
        if (l & 1) {
            const Node& nd = tree_[l++];
            if (nd.M[0] != 0.0) {
                add_recentred(nd.M, nd.center - t, M);
                add_recentred(nd.Z, nd.center - t, Z);
            }
        }
        if (r & 1) {
            const Node& nd = tree_[--r];
            if (nd.M[0] != 0.0) {
                add_recentred(nd.M, nd.center - t, M);
                add_recentred(nd.Z, nd.center - t, Z);
            }
        }
        l >>= 1;
        r >>= 1;
    }
}

}  // namespace detail

namespace {

// Triweight-weighted moments from centered window moments:
//   S_m = (35/32) sum_k C(3,k) (-1)^k h^(-2k) M_(2k+m).
LagMoments moments_from_raw(const double* M, const double* Z, double h, int support) {
    static const double c3[4] = {1.0, 3.0, 3.0, 1.0};
    double hinv2 = 1.0 / (h * h);
    LagMoments out;
    out.support = support;
    double sign = 1.0, hk = 1.0;
    for (int k = 0; k <= 3; ++k) {
        double f = kTriweightPeak * c3[k] * sign * hk;
        out.S0 += f * M[2 * k];
        out.S1 += f * M[2 * k + 1];
        out.S2 += f * M[2 * k + 2];
        out.T0 += f * Z[2 * k];
        out.T1 += f * Z[2 * k + 1];
        sign = -sign;
        hk *= hinv2;
    }
    return out;
}

}  // namespace

namespace {

// Shared scoring core; the index makes each full-window moment query
// O(log P) and consecutive tied lags reuse the cached query.
double h3_cv_score(const LagData& data, const detail::LagMomentIndex& index, double h) {
    const int P = static_cast<int>(data.lags.size());
    double scale = 0.0;
    for (double z : data.values) scale += std::abs(z);
    scale = std::max(scale / P, std::numeric_limits<double>::min());
    const double denom_floor = 1e-10 * scale;

    double raw_m[detail::LagMomentIndex::kMoments];
    double raw_z[detail::LagMomentIndex::kMoments];
    double score = 0.0;
    double cached_t = std::numeric_limits<double>::quiet_NaN();
    LagMoments base;
    for (int p = 0; p < P; ++p) {
        double t = data.lags[p];
        if (t != cached_t) {
            int wlo = static_cast<int>(
                std::lower_bound(data.lags.begin(), data.lags.end(), t - h) - data.lags.begin());
            int whi = static_cast<int>(
                std::upper_bound(data.lags.begin(), data.lags.end(), t + h) - data.lags.begin());
            index.query(wlo, whi, t, raw_m, raw_z);
            base = moments_from_raw(raw_m, raw_z, h, whi - wlo);
            cached_t = t;
        }
        // exact leave-pair-out: remove this pair's own weight at u = 0
        LagMoments m = base;
        m.S0 -= kTriweightPeak;
        m.T0 -= kTriweightPeak * data.values[p];
        m.support -= 1;
        if (m.support < 1 || m.S0 <= 0.0) return std::numeric_limits<double>::infinity();
        double fit = fit_from_moments(m);  // estimates 2*gamma at this lag
        double ratio = data.values[p] / std::max(fit, denom_floor) - 1.0;
        score += ratio * ratio;
    }
    return score;
}

}  // namespace

double h3_cv_objective(const SemivarianceCloud& cloud, double h3) {
    if (cloud.pairs.size() < 2) throw DegenerateCloud("h3_cv_objective: need at least two pairs");
    if (!(h3 > 0.0)) throw ConfigError("h3_cv_objective: bandwidth must be positive");
    LagData data = sorted_cloud(cloud);
    detail::LagMomentIndex index(data.lags, data.values);
    return h3_cv_score(data, index, h3);
}

double select_h3_cv(const SemivarianceCloud& cloud, int grid_size) {
    if (cloud.pairs.size() < 2) throw DegenerateCloud("select_h3_cv: need at least two pairs");
    if (grid_size < 1) throw ConfigError("select_h3_cv: empty candidate grid");
    double lo = cloud.min_lag(), hi = cloud.max_lag();
    if (!(lo < hi)) throw DegenerateCloud("select_h3_cv: all lags identical");
    if (grid_size == 1) return lo;

    LagData data = sorted_cloud(cloud);
    detail::LagMomentIndex index(data.lags, data.values);

    double best_h = lo;
    double best_score = std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid_size; ++g) {
        double h = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * g / (grid_size - 1));
        double score = h3_cv_score(data, index, h);
        if (score < best_score) {
            best_score = score;
            best_h = h;
        }
    }
    if (!std::isfinite(best_score))
        throw DegenerateCloud("select_h3_cv: no feasible bandwidth on the candidate grid");
    return best_h;
}

// ---------------------------------------------------------------------------
// Matern family
// ---------------------------------------------------------------------------

void MaternParams::validate() const {
    if (!(c0 >= 0.0 && c0 < 1.0)) throw ConfigError("Matern nugget must lie in [0, 1)");
    if (!(a > 0.0)) throw ConfigError("Matern scale must be positive");
    if (!(nu > 0.0)) throw ConfigError("Matern smoothness must be positive");
}

double matern_variogram(double lag, const MaternParams& p) {
    if (lag <= 0.0) return 0.0;
    double x = 3.0 * lag / p.a;
    if (x <= 1e-12) return p.c0;
    if (x >= 700.0) return 1.0;
    double factor =
        std::pow(x, p.nu) * std::cyl_bessel_k(p.nu, x) / (std::pow(2.0, p.nu - 1.0) * std::tgamma(p.nu));
    factor = std::min(factor, 1.0);
    return p.c0 + (1.0 - p.c0) * (1.0 - factor);
}

// ---------------------------------------------------------------------------
// Shapiro-Botha models
// ---------------------------------------------------------------------------

SBModel::SBModel(double nugget, Vec nodes, Vec weights)
    : nugget_(nugget), nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.size() != weights_.size()) throw ConfigError("SBModel: nodes/weights mismatch");
    if (nugget_ < 0.0 || (weights_.size() > 0 && weights_.minCoeff() < 0.0))
        throw ConfigError("SBModel: coefficients must be nonnegative");
    if (nodes_.size() > 0 && nodes_.minCoeff() <= 0.0)
        throw ConfigError("SBModel: nodes must be positive");
}

double SBModel::operator()(double lag) const {
    if (lag <= 0.0) return 0.0;
    double v = nugget_;
    for (int j = 0; j < nodes_.size(); ++j)
        v += weights_[j] * (1.0 - bessel_j0(nodes_[j] * lag));
    return v;
}

SBModel fit_shapiro_botha(const PilotVariogram& pilot, const Vec& fit_lags, int basis_size) {
    std::vector<double> lags;
    for (int g = 0; g < fit_lags.size(); ++g)
        if (fit_lags[g] > 0.0) lags.push_back(fit_lags[g]);
    if (lags.empty()) throw EmptyPilot("fit_shapiro_botha: no positive fit lags");
    if (basis_size < 1) throw ConfigError("fit_shapiro_botha: basis_size must be positive");

    double max_lag = *std::max_element(lags.begin(), lags.end());
    double min_lag = *std::min_element(lags.begin(), lags.end());
    // Basis functions must complete most of their rise inside the observed
    // range: nodes with half-decay near max_lag act as ramps whose weight
    // counts toward the sill but barely lifts the in-range curve, and after
    // unit-sill rescaling that manufactures a spurious long-range correlation
    // floor. Such a floor is invisible to the residual-bias correction (it
    // cancels exactly for constant-reproducing smoothers) and destabilizes
    // the variance iteration, so the slowest basis half-decays at max_lag/2.
    double t_first = kJ0Half / (0.5 * max_lag);
    double t_last = std::max(kJ0Half / min_lag, 2.0 * t_first);
    Vec nodes(basis_size);
    for (int j = 0; j < basis_size; ++j)
        nodes[j] = basis_size == 1
                       ? t_first
                       : std::exp(std::log(t_first) +
                                  (std::log(t_last) - std::log(t_first)) * j / (basis_size - 1));

    const int rows = static_cast<int>(lags.size());
    Mat A(rows, basis_size + 1);
    Vec b(rows);
    for (int r = 0; r < rows; ++r) {
        double h = lags[r];
        A(r, 0) = 1.0;  // nugget column: 1{h > 0}
        for (int j = 0; j < basis_size; ++j) A(r, j + 1) = 1.0 - bessel_j0(nodes[j] * h);
        b[r] = pilot(h);
    }
    Vec coef = nnls(A, b);

    std::vector<int> active;
    for (int j = 0; j < basis_size; ++j)
        if (coef[j + 1] > 0.0) active.push_back(j);
    Vec out_nodes(active.size()), out_weights(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
        out_nodes[k] = nodes[active[k]];
        out_weights[k] = coef[active[k] + 1];
    }
    return SBModel(coef[0], std::move(out_nodes), std::move(out_weights));
}

SBModel fit_shapiro_botha(const PilotVariogram& pilot, int basis_size) {
    return fit_shapiro_botha(pilot, pilot.grid(), basis_size);
}

Vec cloud_lag_quantiles(const SemivarianceCloud& cloud, int count, double max_lag) {
    std::vector<double> lags;
    lags.reserve(cloud.pairs.size());
    for (const auto& p : cloud.pairs)
        if (max_lag <= 0.0 || p.lag <= max_lag) lags.push_back(p.lag);
    if (lags.empty()) throw DegenerateCloud("cloud_lag_quantiles: no pairs below the cutoff");
    std::sort(lags.begin(), lags.end());
    std::vector<double> out;
    out.reserve(count);
    for (int g = 0; g < count; ++g) {
        double q = count == 1 ? 0.5 : static_cast<double>(g) / (count - 1);
        double lag = lags[static_cast<std::size_t>(q * (lags.size() - 1))];
        if (out.empty() || lag > out.back()) out.push_back(lag);
    }
    return Eigen::Map<Vec>(out.data(), out.size());
}

SBModel rescale_to_unit_sill(const SBModel& model) {
    double sill = model.sill();
    if (!(sill > 0.0)) throw ZeroSill("rescale_to_unit_sill: sill is not positive");
    return SBModel(model.nugget() / sill, model.nodes(), model.weights() / sill);
}

Vec nnls(const Mat& A, const Vec& b, double tol, int max_iterations) {
    const int ncols = static_cast<int>(A.cols());
    if (A.rows() != b.size()) throw ConfigError("nnls: shape mismatch");
    if (max_iterations <= 0) max_iterations = 10 * std::max(ncols, 1);

    Vec x = Vec::Zero(ncols);
    std::vector<bool> passive(ncols, false);
    int n_passive = 0;

    Vec w = A.transpose() * b;
    const double threshold = tol * std::max(w.cwiseAbs().maxCoeff(), 1e-300);

    auto solve_passive = [&](Vec& z) {
        Mat Ap(A.rows(), n_passive);
        std::vector<int> cols;
        cols.reserve(n_passive);
        for (int j = 0; j < ncols; ++j)
            if (passive[j]) {
                Ap.col(cols.size()) = A.col(j);
                cols.push_back(j);
            }
        Vec zp = Ap.colPivHouseholderQr().solve(b);
        z.setZero(ncols);
        for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zp[k];
    };

    for (int outer = 0; outer < max_iterations; ++outer) {
        w = A.transpose() * (b - A * x);
        int best = -1;
        double best_w = threshold;
        for (int j = 0; j < ncols; ++j)
            if (!passive[j] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        if (best < 0) break;
        passive[best] = true;
        ++n_passive;

        for (int inner = 0; inner <= max_iterations; ++inner) {
            Vec z;
            solve_passive(z);
            double zmin = std::numeric_limits<double>::infinity();
            for (int j = 0; j < ncols; ++j)
                if (passive[j]) zmin = std::min(zmin, z[j]);
            if (zmin > 0.0) {
                x = z;
                break;
            }
            double alpha = 1.0;
            for (int j = 0; j < ncols; ++j)
                if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
            for (int j = 0; j < ncols; ++j)
                if (passive[j]) x[j] += alpha * (z[j] - x[j]);
            for (int j = 0; j < ncols; ++j)
                if (passive[j] && x[j] <= 1e-14 * std::abs(z[j] - x[j]) + 0.0) {
                    x[j] = 0.0;
                    passive[j] = false;
                    --n_passive;
                }
        }
    }
    return x.cwiseMax(0.0);
}

// ---------------------------------------------------------------------------
// Correlation matrices and factorization
// ---------------------------------------------------------------------------

Mat correlation_matrix(const std::vector<Location>& locs, const VariogramFn& gamma) {
    const int n = static_cast<int>(locs.size());
    Mat R(n, n);
    std::unordered_map<double, double> cache;  // grids repeat few distinct lags
    for (int i = 0; i < n; ++i) {
        R(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            double d = distance(locs[i], locs[j]);
            auto [it, inserted] = cache.emplace(d, 0.0);
            if (inserted) it->second = 1.0 - gamma(d);
            R(i, j) = R(j, i) = it->second;
        }
    }
    return R;
}

Vec cross_correlation(const Location& target, const std::vector<Location>& locs,
                      const VariogramFn& gamma) {
    Vec rho(locs.size());
    for (std::size_t i = 0; i < locs.size(); ++i) {
        double d = distance(target, locs[i]);
        rho[i] = d == 0.0 ? 1.0 : 1.0 - gamma(d);
    }
    return rho;
}

Mat cholesky_psd(const Mat& M) {
    if (M.rows() != M.cols()) throw ConfigError("cholesky_psd: matrix must be square");
    if (!M.allFinite()) throw ConfigError("cholesky_psd: non-finite entries");
    double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw ConfigError("cholesky_psd: matrix is not symmetric");

    Eigen::LLT<Mat> llt(M);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const int n = static_cast<int>(M.rows());
    for (double jitter : {1e-10, 1e-8, 1e-6}) {
        Eigen::LLT<Mat> retry(M + jitter * Mat::Identity(n, n));
        if (retry.info() == Eigen::Success) return retry.matrixL();
    }
    throw NotPSD("cholesky_psd: matrix not positive semidefinite within jitter policy");
}

}  // namespace nprisk
