#include <doctest.h>

#include <random>

#include "nprisk/smoothing.hpp"
#include "nprisk/spatial.hpp"
#include "oracle_helpers.hpp"

using namespace nprisk;

TEST_CASE("triweight kernel values") {
    double peak = 35.0 / 32.0;
    CHECK(triweight_kernel_2d(0.0, 0.0) == doctest::Approx(peak * peak).epsilon(1e-12));
    CHECK(triweight_kernel_2d(0.0, 0.0) == doctest::Approx(1.196289).epsilon(1e-6));
    CHECK(triweight_kernel_2d(1.0, 0.0) == 0.0);
    // (35/32)(0.75)^3 (35/32) evaluated directly
    CHECK(triweight_kernel_2d(0.5, 0.0) == doctest::Approx(0.5046844482421875).epsilon(1e-12));
}

TEST_CASE("smoother vector reproduces constants and linear surfaces") {
    std::mt19937_64 rng(11);
    std::vector<Location> locs = oracle::random_locations(20, rng);
    BandwidthMatrix H = BandwidthMatrix::diagonal(0.6, 0.6);

    Vec constant = Vec::Constant(20, 7.0);
    Vec linear(20);
    for (int i = 0; i < 20; ++i) linear[i] = 1.0 + 2.0 * locs[i].x1 + 3.0 * locs[i].x2;

    for (const Location& x : {Location{0.3, 0.4}, Location{0.9, 0.1}, Location{0.5, 0.5}}) {
        Vec s = smoother_vector(x, locs, H);
        CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.dot(constant) == doctest::Approx(7.0).epsilon(1e-10));
        CHECK(s.dot(linear) == doctest::Approx(1.0 + 2.0 * x.x1 + 3.0 * x.x2).epsilon(1e-8));
    }
}

TEST_CASE("smoother vector matches the brute-force WLS oracle") {
    // well-posed instances: every point inside the kernel support
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 5 + static_cast<int>(rng() % 4);
        std::vector<Location> locs = oracle::random_locations(n, rng, 0.05);
        BandwidthMatrix H = BandwidthMatrix::from_elements(1.5, 0.1, 1.4);
        Location x{0.25 + 0.5 * (trial % 2), 0.4};
        Vec s = smoother_vector(x, locs, H);
        Vec ref = oracle::smoother_vector_wls(x, locs, H);
        CHECK((s - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("smoothing matrix rows are smoother vectors and sum to one") {
    std::mt19937_64 rng(17);
    std::vector<Location> locs = oracle::random_locations(12, rng, 0.02);
    BandwidthMatrix H = BandwidthMatrix::from_elements(0.4, 0.05, 0.5);
    Mat S = smoothing_matrix(locs, H);
    for (int i = 0; i < S.rows(); ++i) {
        CHECK(S.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        Vec ref = oracle::smoother_vector_wls(locs[i], locs, H);
        CHECK((S.row(i).transpose() - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
    Vec y = Vec::Constant(12, 3.25);
    CHECK(((S * y).array() - 3.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("smooth_at works off-sample and propagates failures") {
    std::mt19937_64 rng(19);
    std::vector<Location> locs = oracle::random_locations(15, rng, 0.02);
    Vec linear(15);
    for (int i = 0; i < 15; ++i) linear[i] = -1.0 + 0.5 * locs[i].x1 + 2.0 * locs[i].x2;
    SpatialSample sample{locs, linear};
    BandwidthMatrix H = BandwidthMatrix::diagonal(0.5, 0.5);
    Vec fit = smooth_at(sample, H, {{0.2, 0.2}, {0.8, 0.7}});
    CHECK(fit[0] == doctest::Approx(-1.0 + 0.5 * 0.2 + 2.0 * 0.2).epsilon(1e-8));
    CHECK(fit[1] == doctest::Approx(-1.0 + 0.5 * 0.8 + 2.0 * 0.7).epsilon(1e-8));

    BandwidthMatrix tiny = BandwidthMatrix::diagonal(1e-6, 1e-6);
    CHECK_THROWS_AS(smooth_at(sample, tiny, {{0.5, 0.5}}), SingularLocalFit);
}

TEST_CASE("variance pilot: constant, linear reproduction, flooring") {
    std::mt19937_64 rng(23);
    std::vector<Location> locs = oracle::random_locations(18, rng, 0.02);
    BandwidthMatrix H2 = BandwidthMatrix::diagonal(0.5, 0.5);

    Vec constant = Vec::Constant(18, 4.0);
    Vec v = variance_pilot(locs, constant, H2, locs, 1e-8);
    CHECK((v.array() - 4.0).abs().maxCoeff() < 1e-10);

    Vec linear(18);
    for (int i = 0; i < 18; ++i) linear[i] = 0.5 + locs[i].x1;
    v = variance_pilot(locs, linear, H2, locs, 1e-8);
    for (int i = 0; i < 18; ++i) CHECK(v[i] == doctest::Approx(linear[i]).epsilon(1e-8));

    // a localized spike, tiny window: the pilot hugs nearby values, and the
    // independent WLS oracle agrees wherever the fit is defined
    Vec spiked = Vec::Constant(18, 1.0);
    spiked[3] = 50.0;
    BandwidthMatrix small = BandwidthMatrix::diagonal(0.35, 0.35);
    Vec pilot = variance_pilot(locs, spiked, small, {locs[7]}, 1e-8);
    Vec ref = oracle::smoother_vector_wls(locs[7], locs, small);
    CHECK(pilot[0] == doctest::Approx(std::max(ref.dot(spiked), 1e-8)).epsilon(1e-9));
}

TEST_CASE("cgcv: identity correlation reduces to GCV; hand case; perfect fit") {
    std::mt19937_64 rng(29);
    std::vector<Location> locs = oracle::random_locations(10, rng, 0.02);
    Vec y = oracle::random_vector(10, rng);
    BandwidthMatrix H = BandwidthMatrix::diagonal(0.7, 0.7);
    Mat S = smoothing_matrix(locs, H);
    Mat I = Mat::Identity(10, 10);
    double denom = 1.0 - S.trace() / 10.0;
    double gcv = (y - S * y).squaredNorm() / (denom * denom) / 10.0;
    CHECK(cgcv(y, S, I) == doctest::Approx(gcv).epsilon(1e-12));

    // n=2 hand case: residuals (1,-1), tr(S Rhat) = 1 -> (1/2)(4+4) = 4
    Mat S2 = Mat::Zero(2, 2);
    S2(0, 0) = S2(1, 1) = 0.5;  // trace 1 against identity Rhat
    Vec y2(2);
    y2 << 2.0, -2.0;            // residuals after smoothing: (1, -1) ... see below
    // S2*y2 = (1,-1) so residuals are (1,-1)
    CHECK(cgcv(y2, S2, Mat::Identity(2, 2)) == doctest::Approx(4.0).epsilon(1e-12));

    Vec constant = Vec::Constant(10, 5.0);
    CHECK(cgcv(constant, S, I) == doctest::Approx(0.0));

    Mat Sdegenerate = Mat::Identity(10, 10);  // tr(S Rhat)/n = 1
    CHECK_THROWS_AS(cgcv(y, Sdegenerate, I), DegenerateDenominator);
}

TEST_CASE("mase: identity smoother and hand case") {
    Mat I = Mat::Identity(3, 3);
    Vec mu(3);
    mu << 1.0, 2.0, 3.0;
    std::mt19937_64 rng(31);
    Mat Sigma = oracle::random_spd(3, rng);
    CHECK(mase(I, mu, Sigma) == doctest::Approx(Sigma.trace() / 3.0).epsilon(1e-12));
    CHECK(mase(I, Vec::Zero(3), Mat::Identity(3, 3)) == doctest::Approx(1.0));

    // uniform-average smoother: smoothed values are the mean of mu
    Mat S = Mat::Constant(3, 3, 1.0 / 3.0);
    Vec smoothed = Vec::Constant(3, mu.mean());
    double bias = (smoothed - mu).squaredNorm() / 3.0;
    double variance = (S * Sigma * S.transpose()).trace() / 3.0;
    CHECK(mase(S, mu, Sigma) == doctest::Approx(bias + variance).epsilon(1e-12));
}

TEST_CASE("select_bandwidth recovers the minimizer of a smooth surrogate") {
    // strictly convex in the log-Cholesky parameters, minimum at H = diag(.3, .2)
    auto objective = [](const BandwidthMatrix& H) {
        double a = std::log(H.matrix()(0, 0)) - std::log(0.3);
        double b = std::log(H.matrix()(1, 1)) - std::log(0.2);
        double c = H.matrix()(0, 1);
        return a * a + b * b + c * c;
    };
    BandwidthMatrix found =
        select_bandwidth(objective, BandwidthMatrix::diagonal(1.0, 1.0), {400, 1e-10, 0.25});
    CHECK(found.matrix()(0, 0) == doctest::Approx(0.3).epsilon(1e-3));
    CHECK(found.matrix()(1, 1) == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(std::abs(found.matrix()(0, 1)) < 1e-3);
}

TEST_CASE("select_bandwidth: constant objective returns init, deterministic") {
    BandwidthMatrix init = BandwidthMatrix::from_elements(0.4, 0.1, 0.5);
    auto constant = [](const BandwidthMatrix&) { return 1.0; };
    BandwidthMatrix a = select_bandwidth(constant, init);
    CHECK((a.matrix() - init.matrix()).cwiseAbs().maxCoeff() < 1e-14);

    auto wiggly = [](const BandwidthMatrix& H) {
        return std::sin(37.0 * H.matrix()(0, 0)) + H.matrix().trace();
    };
    BandwidthMatrix b1 = select_bandwidth(wiggly, init);
    BandwidthMatrix b2 = select_bandwidth(wiggly, init);
    CHECK(b1.matrix()(0, 0) == b2.matrix()(0, 0));
    CHECK(b1.matrix()(0, 1) == b2.matrix()(0, 1));
    CHECK(b1.matrix()(1, 1) == b2.matrix()(1, 1));

    auto nan_objective = [](const BandwidthMatrix&) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(select_bandwidth(nan_objective, init), NonFiniteObjective);
}

TEST_CASE("CGCV-selected bandwidth beats gross over/under-smoothing on MASE") {
    // curved trend with independent noise; a linear trend would be degenerate
    // here (local linear has zero bias on it, so MASE falls monotonically in H)
    std::mt19937_64 rng(41);
    GridSpec spec{9, 9};
    std::vector<Location> locs = make_grid(spec);
    const int n = static_cast<int>(locs.size());
    Vec mu(n);
    for (int i = 0; i < n; ++i)
        mu[i] = 1.0 + std::sin(2.0 * M_PI * locs[i].x1) + 2.0 * locs[i].x2 * locs[i].x2;
    std::normal_distribution<double> noise(0.0, 0.3);
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = mu[i] + noise(rng);

    Mat I = Mat::Identity(n, n);
    BandwidthMatrix selected = select_bandwidth(
        [&](const BandwidthMatrix& h) { return cgcv(y, smoothing_matrix(locs, h), I); },
        reference_bandwidth(locs));

    Mat Sigma = 0.09 * I;
    auto mase_of = [&](const BandwidthMatrix& h) {
        return mase(smoothing_matrix(locs, h), mu, Sigma);
    };
    double at_selected = mase_of(selected);
    CHECK(at_selected <= mase_of(BandwidthMatrix(10.0 * selected.matrix())));
    CHECK(at_selected <= mase_of(BandwidthMatrix(0.1 * selected.matrix())));
}
