#include "nprisk/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "nprisk/kriging.hpp"
#include "nprisk/parallel.hpp"
#include "nprisk/rng.hpp"

namespace nprisk {

double trend_value(TrendId id, const Location& x) {
    switch (id) {
        case TrendId::Nonlinear:
            return 2.5 + std::sin(2.0 * M_PI * x.x1) + 4.0 * (x.x2 - 0.5) * (x.x2 - 0.5);
        case TrendId::Polynomial:
            return 5.8 * (x.x1 - x.x2 + x.x2 * x.x2);
        case TrendId::Constant:
            return 2.0;
    }
    throw ConfigError("trend_value: unknown trend id");
}

double variance_value(VarianceId id, const Location& x) {
    switch (id) {
        case VarianceId::Nonlinear: {
            double b1 = 1.0 - (2.0 * x.x1 - 1.0) * (2.0 * x.x1 - 1.0);
            double b2 = 1.0 - (2.0 * x.x2 - 1.0) * (2.0 * x.x2 - 1.0);
            double c = 15.0 / 16.0;
            return c * c * b1 * b1 * b2 * b2 + 0.1;
        }
        case VarianceId::Linear:
            return 0.5 * (1.0 + x.x1 + x.x2);
        case VarianceId::Constant:
            return 1.0;
    }
    throw ConfigError("variance_value: unknown variance id");
}

TrendId parse_trend(const std::string& token) {
    if (token == "mu1") return TrendId::Nonlinear;
    if (token == "mu2") return TrendId::Polynomial;
    if (token == "mu3") return TrendId::Constant;
    throw ConfigError("unknown trend id '" + token + "' (expected mu1, mu2 or mu3)");
}

VarianceId parse_variance(const std::string& token) {
    if (token == "var1") return VarianceId::Nonlinear;
    if (token == "var2") return VarianceId::Linear;
    if (token == "var3") return VarianceId::Constant;
    throw ConfigError("unknown variance id '" + token + "' (expected var1, var2 or var3)");
}

std::string trend_token(TrendId id) {
    switch (id) {
        case TrendId::Nonlinear: return "mu1";
        case TrendId::Polynomial: return "mu2";
        case TrendId::Constant: return "mu3";
    }
    return "?";
}

std::string variance_token(VarianceId id) {
    switch (id) {
        case VarianceId::Nonlinear: return "var1";
        case VarianceId::Linear: return "var2";
        case VarianceId::Constant: return "var3";
    }
    return "?";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

FieldSimulator::FieldSimulator(std::vector<Location> locs, TrendId trend, VarianceId variance,
                               const MaternParams& matern)
    : locs_(std::move(locs)) {
    const int n = static_cast<int>(locs_.size());
    if (n < 1) throw ConfigError("FieldSimulator: empty design");
    mean_.resize(n);
    sd_.resize(n);
    for (int i = 0; i < n; ++i) {
        mean_[i] = trend_value(trend, locs_[i]);
        sd_[i] = std::sqrt(variance_value(variance, locs_[i]));
    }
    matern.validate();
    chol_ = cholesky_psd(correlation_matrix(locs_, variogram_fn(matern)));
}

FieldSimulator::FieldSimulator(std::vector<Location> locs, Vec mean, Vec sd,
                               const MaternParams& matern)
    : locs_(std::move(locs)), mean_(std::move(mean)), sd_(std::move(sd)) {
    const int n = static_cast<int>(locs_.size());
    if (n < 1 || mean_.size() != n || sd_.size() != n)
        throw ConfigError("FieldSimulator: mean/sd must match the design");
    matern.validate();
    chol_ = cholesky_psd(correlation_matrix(locs_, variogram_fn(matern)));
}

Vec FieldSimulator::draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec z(mean_.size());
    for (int i = 0; i < z.size(); ++i) z[i] = gauss(rng);
    Vec eps = chol_.triangularView<Eigen::Lower>() * z;
    return mean_ + sd_.cwiseProduct(eps);
}

TheoreticalRisk::TheoreticalRisk(const std::vector<Location>& sample_locs,
                                 std::vector<Location> targets, TrendId trend,
                                 VarianceId variance, const MaternParams& matern)
    : targets_(std::move(targets)) {
    matern.validate();
    const int n = static_cast<int>(sample_locs.size());
    const int n0 = static_cast<int>(targets_.size());
    mean_sample_.resize(n);
    Vec sd(n);
    for (int i = 0; i < n; ++i) {
        mean_sample_[i] = trend_value(trend, sample_locs[i]);
        sd[i] = std::sqrt(variance_value(variance, sample_locs[i]));
    }
    SimpleKriging sk(sample_locs, sd, variogram_fn(matern));
    mean_targets_.resize(n0);
    weights_.resize(n0, n);
    sk_sd_.resize(n0);
    for (int a = 0; a < n0; ++a) {
        mean_targets_[a] = trend_value(trend, targets_[a]);
        double target_sd = std::sqrt(variance_value(variance, targets_[a]));
        Vec cross = sk.cross_covariance(targets_[a], target_sd);
        weights_.row(a) = sk.weights(cross).transpose();
        sk_sd_[a] = std::sqrt(sk.variance(cross, target_sd * target_sd));
    }
}

Vec TheoreticalRisk::evaluate(const Vec& observed, double threshold) const {
    Vec pred = mean_targets_ + weights_ * (observed - mean_sample_);
    Vec risk(pred.size());
    for (int a = 0; a < pred.size(); ++a) {
        if (sk_sd_[a] > 0.0)
            risk[a] = 1.0 - normal_cdf((threshold - pred[a]) / sk_sd_[a]);
        else
            risk[a] = pred[a] >= threshold ? 1.0 : 0.0;
    }
    return risk;
}

// ---------------------------------------------------------------------------
// Indicator kriging baseline
// ---------------------------------------------------------------------------

namespace {

struct ExponentialVariogram {
    double nugget = 0.0;
    double partial_sill = 0.0;
    double range = 1.0;  // practical range

    double operator()(double h) const {
        if (h <= 0.0) return 0.0;
        return nugget + partial_sill * (1.0 - std::exp(-3.0 * h / range));
    }
};

// Count-weighted WLS fit over binned estimates; nugget and partial sill are
// profiled out by a 2-column NNLS for each candidate range.
ExponentialVariogram fit_exponential_wls(const std::vector<double>& bin_lag,
                                         const std::vector<double>& bin_gamma,
                                         const std::vector<double>& bin_count, double max_lag) {
    const int nb = static_cast<int>(bin_lag.size());
    Mat A(nb, 2);
    Vec b(nb);
    ExponentialVariogram best;
    double best_sse = std::numeric_limits<double>::infinity();
    const int n_candidates = 64;
    for (int k = 0; k < n_candidates; ++k) {
        double lo = max_lag / 100.0, hi = 2.0 * max_lag;
        double range = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k /
                                                   (n_candidates - 1));
        for (int i = 0; i < nb; ++i) {
            double w = std::sqrt(bin_count[i]);
            A(i, 0) = w;
            A(i, 1) = w * (1.0 - std::exp(-3.0 * bin_lag[i] / range));
            b[i] = w * bin_gamma[i];
        }
        Vec coef = nnls(A, b);
        double sse = (A * coef - b).squaredNorm();
        if (sse < best_sse) {
            best_sse = sse;
            best = {coef[0], coef[1], range};
        }
    }
    return best;
}

}  // namespace

IkResult ik_exceedance(const SpatialSample& sample, const std::vector<Location>& targets,
                       double threshold) {
    const int n = sample.n();
    const int n0 = static_cast<int>(targets.size());
    Vec indicator(n);
    for (int i = 0; i < n; ++i) indicator[i] = sample.values[i] >= threshold ? 1.0 : 0.0;

    IkResult out;
    if (indicator.minCoeff() == indicator.maxCoeff()) {
        out.raw = Vec::Constant(n0, indicator[0]);
        out.clamped = out.raw;
        return out;
    }

    // Matheron estimator on 15 equal-width bins up to half the max lag
    double max_lag = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            max_lag = std::max(max_lag, distance(sample.locations[i], sample.locations[j]));
    const int n_bins = 15;
    double cut = 0.5 * max_lag;
    std::vector<double> sum_sq(n_bins, 0.0), sum_lag(n_bins, 0.0), count(n_bins, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = distance(sample.locations[i], sample.locations[j]);
            if (d > cut) continue;
            int bin = std::min(static_cast<int>(d / cut * n_bins), n_bins - 1);
            double diff = indicator[i] - indicator[j];
            sum_sq[bin] += diff * diff;
            sum_lag[bin] += d;
            count[bin] += 1.0;
        }
    std::vector<double> bin_lag, bin_gamma, bin_count;
    for (int bin = 0; bin < n_bins; ++bin) {
        if (count[bin] == 0.0) continue;
        bin_lag.push_back(sum_lag[bin] / count[bin]);
        bin_gamma.push_back(sum_sq[bin] / (2.0 * count[bin]));
        bin_count.push_back(count[bin]);
    }
    if (bin_lag.size() < 2)
        throw DegenerateCloud("ik_exceedance: not enough occupied variogram bins");
    ExponentialVariogram model = fit_exponential_wls(bin_lag, bin_gamma, bin_count, max_lag);

    OrdinaryKriging ok(sample.locations,
                       [model](double h) { return model(h); });
    out.raw.resize(n0);
    for (int a = 0; a < n0; ++a) out.raw[a] = ok.predict(targets[a], indicator);
    out.clamped = out.raw.cwiseMax(0.0).cwiseMin(1.0);
    return out;
}

Vec ik_baseline(const SpatialSample& sample, const std::vector<Location>& targets,
                double threshold) {
    return ik_exceedance(sample, targets, threshold).clamped;
}

// ---------------------------------------------------------------------------
// Study runner
// ---------------------------------------------------------------------------

namespace {

struct Aggregate {
    double mean = 0.0, median = 0.0, sd = 0.0;
};

Aggregate aggregate_sq_errors(std::vector<double>& errors) {
    Aggregate a;
    const int n = static_cast<int>(errors.size());
    if (n == 0) return a;
    double sum = 0.0;
    for (double e : errors) sum += e;
    a.mean = sum / n;
    double ss = 0.0;
    for (double e : errors) ss += (e - a.mean) * (e - a.mean);
    a.sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    std::sort(errors.begin(), errors.end());
    a.median = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
    return a;
}

// MASE-optimal bandwidths from the true components; the paper's oracle choice
// that removes the bandwidth-selection effect from the study.
SmoothingPlan true_component_plan(const std::vector<Location>& locs,
                                  const std::vector<Location>& targets,
                                  const ScenarioSpec& spec) {
    const int n = static_cast<int>(locs.size());
    Vec mu(n), var(n);
    for (int i = 0; i < n; ++i) {
        mu[i] = trend_value(spec.trend, locs[i]);
        var[i] = variance_value(spec.variance, locs[i]);
    }
    Vec sd = var.cwiseSqrt();
    Mat Sigma = sd.asDiagonal() * correlation_matrix(locs, variogram_fn(spec.matern)) *
                sd.asDiagonal();

    BandwidthMatrix ref = reference_bandwidth(locs);
    BandwidthMatrix H = select_bandwidth(
        [&](const BandwidthMatrix& h) { return mase(smoothing_matrix(locs, h), mu, Sigma); },
        ref);
    Mat S_H = smoothing_matrix(locs, H);
    Mat Sigma_r2 = squared_residual_cov_normal(residual_covariance(S_H, Sigma));
    BandwidthMatrix H2 = select_bandwidth(
        [&](const BandwidthMatrix& h) { return mase(smoothing_matrix(locs, h), var, Sigma_r2); },
        ref);
    return make_smoothing_plan(locs, targets, H, H2);
}

std::vector<Location> random_design_sites(int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Location> locs(count);
    for (auto& p : locs) {
        p.x1 = unit(rng);
        p.x2 = unit(rng);
    }
    return locs;
}

}  // namespace

ErrorSummary run_study(const ScenarioSpec& spec, int threads, std::ostream* progress) {
    spec.matern.validate();
    if (spec.thresholds.empty()) throw ConfigError("run_study: no thresholds");
    if (spec.n_simulations < 1 || spec.bootstrap_replicates < 1)
        throw ConfigError("run_study: N and B must be positive");

    std::vector<Location> grid = make_grid(spec.grid);
    SplitRule rule = SplitRule::diagonal_upper(spec.estimation_count);
    DesignSplit split = split_design(grid, spec.grid, rule);
    const std::vector<Location>& targets = split.estimation_locations;
    const int n0 = static_cast<int>(targets.size());
    const int N = spec.n_simulations;
    const int nc = static_cast<int>(spec.thresholds.size());

    // Regular designs share locations across fields, so the heavy pieces
    // (bandwidths, smoothing matrices, factorizations) are computed once.
    std::shared_ptr<const SmoothingPlan> shared_plan;
    std::unique_ptr<FieldSimulator> shared_sim;
    std::unique_ptr<TheoreticalRisk> shared_risk;
    if (!spec.random_design) {
        if (spec.bandwidths == ScenarioSpec::Bandwidths::TrueComponents)
            shared_plan = std::make_shared<SmoothingPlan>(
                true_component_plan(split.sample_locations, targets, spec));
        shared_sim = std::make_unique<FieldSimulator>(split.sample_locations, spec.trend,
                                                      spec.variance, spec.matern);
        shared_risk = std::make_unique<TheoreticalRisk>(split.sample_locations, targets,
                                                        spec.trend, spec.variance, spec.matern);
    }

    // per-field squared errors, indexed so aggregation ignores run order
    Mat np_errors = Mat::Constant(N, n0 * nc, std::numeric_limits<double>::quiet_NaN());
    Mat ik_errors = np_errors;
    std::vector<char> failed(N, 0);

    parallel_for(N, threads, [&](int field) {
        try {
            std::mt19937_64 rng = substream(spec.seed, 2 * static_cast<std::uint64_t>(field));
            std::vector<Location> locs =
                spec.random_design ? random_design_sites(spec.grid.nx * spec.grid.ny, rng)
                                   : split.sample_locations;

            const FieldSimulator* sim = shared_sim.get();
            const TheoreticalRisk* risk = shared_risk.get();
            std::unique_ptr<FieldSimulator> own_sim;
            std::unique_ptr<TheoreticalRisk> own_risk;
            std::shared_ptr<const SmoothingPlan> plan = shared_plan;
            if (spec.random_design) {
                own_sim = std::make_unique<FieldSimulator>(locs, spec.trend, spec.variance,
                                                           spec.matern);
                own_risk = std::make_unique<TheoreticalRisk>(locs, targets, spec.trend,
                                                             spec.variance, spec.matern);
                sim = own_sim.get();
                risk = own_risk.get();
                if (spec.bandwidths == ScenarioSpec::Bandwidths::TrueComponents)
                    plan = std::make_shared<SmoothingPlan>(
                        true_component_plan(locs, targets, spec));
            }

            SpatialSample sample{locs, sim->draw(rng)};
            FitConfig fit_config;
            fit_config.plan = plan;  // null on the data-driven path: CGCV kicks in
            FittedComponents fit = fit_components(sample, targets, fit_config);

            BootstrapConfig boot;
            boot.replicates = spec.bootstrap_replicates;
            boot.seed = mix64(spec.seed ^ mix64(0xB00F5EEDULL + field));
            boot.threads = 1;  // fields already run in parallel
            BootstrapEnsemble ensemble = run_bootstrap(fit, BootstrapMode::Conditional, boot);

            for (int c = 0; c < nc; ++c) {
                Vec truth = risk->evaluate(sample.values, spec.thresholds[c]);
                Vec est = risk_from_ensemble(ensemble, targets, spec.thresholds[c]).probabilities;
                for (int a = 0; a < n0; ++a)
                    np_errors(field, c * n0 + a) = (est[a] - truth[a]) * (est[a] - truth[a]);
                if (spec.with_ik) {
                    Vec ik = ik_exceedance(sample, targets, spec.thresholds[c]).clamped;
                    for (int a = 0; a < n0; ++a)
                        ik_errors(field, c * n0 + a) = (ik[a] - truth[a]) * (ik[a] - truth[a]);
                }
            }
        } catch (const Error&) {
            failed[field] = 1;
        }
        if (progress && (field + 1) % 10 == 0)
            (*progress) << "field " << field + 1 << "/" << N << " done\n";
    });

    int n_failed = 0;
    for (char f : failed) n_failed += f;

    ErrorSummary summary;
    auto emit = [&](const Mat& errors, const std::string& name) {
        for (int c = 0; c < nc; ++c) {
            std::vector<double> pool;
            pool.reserve(static_cast<std::size_t>(N) * n0);
            for (int field = 0; field < N; ++field) {
                if (failed[field]) continue;
                for (int a = 0; a < n0; ++a) pool.push_back(errors(field, c * n0 + a));
            }
            Aggregate agg = aggregate_sq_errors(pool);
            summary.rows.push_back({name, spec.thresholds[c], agg.mean * 100.0,
                                    agg.median * 100.0, agg.sd * 100.0, n_failed});
        }
    };
    emit(np_errors, spec.name);
    if (spec.with_ik) emit(ik_errors, spec.name + "/ik");
    return summary;
}

std::vector<ScenarioSpec> named_scenarios() {
    std::vector<ScenarioSpec> all;
    auto grid_token = [](int side) { return std::to_string(side) + "x" + std::to_string(side); };
    auto c_token = [](double c) {
        int whole = static_cast<int>(c);
        return std::to_string(whole);
    };

    // nonstationary scenario across grid sizes and thresholds
    for (int side : {15, 20, 30})
        for (double c : {2.0, 3.0, 4.0}) {
            ScenarioSpec s;
            s.name = "table1-c" + c_token(c) + "-" + grid_token(side);
            s.grid = GridSpec{side, side};
            s.thresholds = {c};
            all.push_back(s);
        }

    // nugget and range sweep, nonstationary, c = 3, 20x20
    auto tenths = [](double v) {  // 0.2 -> "02", 0 -> "0"
        int t = static_cast<int>(std::lround(10.0 * v));
        return t == 0 ? std::string("0") : "0" + std::to_string(t);
    };
    for (double c0 : {0.0, 0.2, 0.4, 0.8})
        for (double a : {0.3, 0.6, 0.9}) {
            ScenarioSpec s;
            s.name = "table2-c0" + tenths(c0) + "-a" + tenths(a) + "-20x20";
            s.grid = GridSpec{20, 20};
            s.matern = MaternParams{c0, a, 0.5};
            s.thresholds = {3.0};
            all.push_back(s);
        }

    // stationary scenario with the indicator-kriging baseline
    for (double nu : {0.25, 0.5, 1.0})
        for (double c : {2.0, 3.0, 4.0}) {
            ScenarioSpec s;
            std::string nu_token = nu == 0.25 ? "025" : (nu == 0.5 ? "05" : "1");
            s.name = "table3-nu" + nu_token + "-c" + c_token(c) + "-20x20";
            s.trend = TrendId::Constant;
            s.variance = VarianceId::Constant;
            s.grid = GridSpec{20, 20};
            s.matern = MaternParams{0.2, 0.6, nu};
            s.thresholds = {c};
            s.with_ik = true;
            all.push_back(s);
        }

    // irregular designs, c = 3
    for (int trend = 0; trend < 3; ++trend)
        for (int variance = 0; variance < 3; ++variance)
            for (double nu : {0.25, 0.5, 1.0}) {
                ScenarioSpec s;
                std::string nu_token = nu == 0.25 ? "025" : (nu == 0.5 ? "05" : "1");
                s.name = "table4-mu" + std::to_string(trend + 1) + "-var" +
                         std::to_string(variance + 1) + "-nu" + nu_token + "-random20x20";
                s.trend = static_cast<TrendId>(trend);
                s.variance = static_cast<VarianceId>(variance);
                s.grid = GridSpec{20, 20};
                s.matern = MaternParams{0.2, 0.6, nu};
                s.thresholds = {3.0};
                s.random_design = true;
                all.push_back(s);
            }
    return all;
}

std::optional<ScenarioSpec> find_scenario(const std::string& name) {
    for (ScenarioSpec& s : named_scenarios())
        if (s.name == name) return s;
    return std::nullopt;
}

}  // namespace nprisk
