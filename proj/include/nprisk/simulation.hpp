#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nprisk/bootstrap.hpp"
#include "nprisk/spatial.hpp"
#include "nprisk/variogram.hpp"

namespace nprisk {

/// Monte Carlo study trend surfaces over the unit square.
enum class TrendId { Nonlinear, Polynomial, Constant };
/// Monte Carlo study variance surfaces.
enum class VarianceId { Nonlinear, Linear, Constant };

double trend_value(TrendId id, const Location& x);
double variance_value(VarianceId id, const Location& x);

TrendId parse_trend(const std::string& token);        // mu1 | mu2 | mu3
VarianceId parse_variance(const std::string& token);  // var1 | var2 | var3
std::string trend_token(TrendId id);
std::string variance_token(VarianceId id);

double normal_cdf(double x);

/// Gaussian field generator Y = mu + sd .* (L z) over a fixed set of sites;
/// the Matern correlation factor is computed once and shared by every draw.
class FieldSimulator {
public:
    FieldSimulator(std::vector<Location> locs, TrendId trend, VarianceId variance,
                   const MaternParams& matern);
    FieldSimulator(std::vector<Location> locs, Vec mean, Vec sd, const MaternParams& matern);

    Vec draw(std::mt19937_64& rng) const;
    const Vec& mean() const { return mean_; }
    const Vec& sd() const { return sd_; }
    const std::vector<Location>& locations() const { return locs_; }

private:
    std::vector<Location> locs_;
    Vec mean_;
    Vec sd_;
    Mat chol_;
};

/// Oracle conditional exceedance probability under the true model:
/// 1 - Phi[(c - Y_SK) / sd_SK] with simple kriging from the true trend and
/// covariance. Degenerate kriging sd yields the exact 0/1 indicator.
class TheoreticalRisk {
public:
    TheoreticalRisk(const std::vector<Location>& sample_locs, std::vector<Location> targets,
                    TrendId trend, VarianceId variance, const MaternParams& matern);

    Vec evaluate(const Vec& observed, double threshold) const;

private:
    std::vector<Location> targets_;
    Vec mean_sample_;
    Vec mean_targets_;
    Mat weights_;  // n0 x n simple kriging weights
    Vec sk_sd_;    // n0 kriging standard deviations
};

/// Indicator-kriging exceedance estimate: Matheron binned variogram of the
/// threshold indicators (15 bins to half the max lag), count-weighted WLS
/// exponential fit, then ordinary kriging at the targets. Raw predictions may
/// leave [0, 1]; the clamped vector is the scoring output. Constant
/// indicators short-circuit to that constant.
struct IkResult {
    Vec raw;
    Vec clamped;
};

IkResult ik_exceedance(const SpatialSample& sample, const std::vector<Location>& targets,
                       double threshold);
Vec ik_baseline(const SpatialSample& sample, const std::vector<Location>& targets,
                double threshold);

/// One Monte Carlo experiment configuration.
struct ScenarioSpec {
    enum class Bandwidths { TrueComponents, DataDriven };

    std::string name = "custom";
    TrendId trend = TrendId::Nonlinear;
    VarianceId variance = VarianceId::Nonlinear;
    MaternParams matern{0.2, 0.6, 0.5};
    GridSpec grid{15, 15};
    bool random_design = false;
    int estimation_count = 0;  // 0: default diagonal rule
    std::vector<double> thresholds{2.0};
    int n_simulations = 100;       // desk scale; the full study used 1000
    int bootstrap_replicates = 200;  // desk scale; the full study used 1000
    std::uint64_t seed = 20260301;
    bool with_ik = false;
    Bandwidths bandwidths = Bandwidths::TrueComponents;
};

struct ErrorSummaryRow {
    std::string scenario;
    double threshold = 0.0;
    double mean = 0.0;    // of squared errors, reported x 10^-2
    double median = 0.0;  // x 10^-2
    double sd = 0.0;      // x 10^-2
    int n_failed = 0;     // simulated fields dropped by numerical failures
};

struct ErrorSummary {
    std::vector<ErrorSummaryRow> rows;
};

/// Runs the scenario: simulate N fields, fit, conditional bootstrap, score
/// squared errors against the theoretical risk, aggregate. IK rows (when
/// enabled) carry the scenario name suffixed with "/ik". Failed fields are
/// excluded and counted; aggregates do not depend on processing order.
ErrorSummary run_study(const ScenarioSpec& spec, int threads = 0,
                       std::ostream* progress = nullptr);

/// Named scenarios reproducing the published experiment layout at desk scale.
std::vector<ScenarioSpec> named_scenarios();
std::optional<ScenarioSpec> find_scenario(const std::string& name);

}  // namespace nprisk
