#include <doctest.h>

#include <random>

#include "nprisk/spatial.hpp"
#include "nprisk/variogram.hpp"
#include "oracle_helpers.hpp"

using namespace nprisk;

TEST_CASE("semivariance cloud: hand cases") {
    Vec e2(2);
    e2 << 1.0, 3.0;
    SemivarianceCloud c2 = semivariance_cloud(e2, {{0.0, 0.0}, {3.0, 4.0}});
    REQUIRE(c2.pairs.size() == 1);
    CHECK(c2.pairs[0].lag == doctest::Approx(5.0));
    CHECK(c2.pairs[0].sqdiff == doctest::Approx(4.0));

    Vec equal = Vec::Constant(4, 2.5);
    std::mt19937_64 rng(3);
    auto locs = oracle::random_locations(4, rng, 0.05);
    SemivarianceCloud ce = semivariance_cloud(equal, locs);
    CHECK(ce.pairs.size() == 6);
    for (const auto& p : ce.pairs) CHECK(p.sqdiff == 0.0);

    Vec e4(4);
    e4 << 0.0, 1.0, -1.0, 2.0;
    SemivarianceCloud c4 = semivariance_cloud(e4, locs);
    REQUIRE(c4.pairs.size() == 6);
    int k = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j, ++k) {
            CHECK(c4.pairs[k].i == i);
            CHECK(c4.pairs[k].j == j);
            CHECK(c4.pairs[k].sqdiff == doctest::Approx((e4[i] - e4[j]) * (e4[i] - e4[j])));
            CHECK(c4.pairs[k].lag == doctest::Approx(distance(locs[i], locs[j])));
        }
}

TEST_CASE("pilot variogram: constant and linear clouds") {
    std::mt19937_64 rng(5);
    auto locs = oracle::random_locations(12, rng, 0.04);

    // sqdiff == 2c everywhere -> curve == c
    SemivarianceCloud cloud;
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j)
            cloud.pairs.push_back({distance(locs[i], locs[j]), 1.6, i, j});
    PilotVariogram pv = pilot_variogram(cloud, 0.3);
    for (double h : {0.0, 0.2, 0.5, pv.max_lag()})
        CHECK(pv(h) == doctest::Approx(0.8).epsilon(1e-10));

    // linear-in-lag cloud: local linear is exact, so the curve is linear/2
    SemivarianceCloud lin = cloud;
    for (auto& p : lin.pairs) p.sqdiff = 0.4 + 2.0 * p.lag;
    PilotVariogram pl = pilot_variogram(lin, 0.3);
    for (double h : {0.1, 0.3, 0.6})
        CHECK(pl(h) == doctest::Approx(0.5 * (0.4 + 2.0 * h)).epsilon(1e-8));

    // evaluation clamps outside the support
    CHECK(pl(pl.max_lag() + 1.0) == doctest::Approx(pl(pl.max_lag())));
}

TEST_CASE("pilot variogram of white noise is flat near one") {
    std::mt19937_64 rng(7);
    GridSpec spec{14, 14};
    auto locs = make_grid(spec);
    const int n = static_cast<int>(locs.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec probes(3);
    probes << 0.2, 0.6, 1.0;
    Vec acc = Vec::Zero(3);
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        Vec e(n);
        for (int i = 0; i < n; ++i) e[i] = gauss(rng);
        e.array() -= e.mean();
        PilotVariogram pv = pilot_variogram(semivariance_cloud(e, locs), 0.25);
        for (int k = 0; k < 3; ++k) acc[k] += pv(probes[k]) / reps;
    }
    for (int k = 0; k < 3; ++k) CHECK(acc[k] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("h3 cross-validation: single candidate and degenerate cloud") {
    std::mt19937_64 rng(9);
    auto locs = oracle::random_locations(8, rng, 0.08);
    Vec e = oracle::random_vector(8, rng);
    SemivarianceCloud cloud = semivariance_cloud(e, locs);

    CHECK(select_h3_cv(cloud, 1) == doctest::Approx(cloud.min_lag()));

    SemivarianceCloud flat;
    flat.pairs = {{1.0, 0.5, 0, 1}, {1.0, 0.7, 0, 2}, {1.0, 0.9, 1, 2}};
    CHECK_THROWS_AS(select_h3_cv(flat, 10), DegenerateCloud);
}

TEST_CASE("moment index agrees with direct sums on random clouds") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int P = 500;
    std::vector<double> lags(P), values(P);
    for (int i = 0; i < P; ++i) {
        lags[i] = unit(rng);
        values[i] = unit(rng) * 3.0;
    }
    std::sort(lags.begin(), lags.end());
    detail::LagMomentIndex index(lags, values);
    double M[detail::LagMomentIndex::kMoments], Z[detail::LagMomentIndex::kMoments];
    for (int trial = 0; trial < 50; ++trial) {
        int lo = static_cast<int>(rng() % P);
        int hi = lo + 1 + static_cast<int>(rng() % (P - lo));
        double t = unit(rng);
        index.query(lo, hi, t, M, Z);
        for (int j = 0; j < detail::LagMomentIndex::kMoments; ++j) {
            double m = 0.0, z = 0.0;
            for (int q = lo; q < hi; ++q) {
                double u = std::pow(lags[q] - t, j);
                m += u;
                z += u * values[q];
            }
            double scale = std::max({1.0, std::abs(m), std::abs(z)});
            CHECK(std::abs(M[j] - m) / scale < 1e-10);
            CHECK(std::abs(Z[j] - z) / scale < 1e-10);
        }
    }
}

TEST_CASE("h3 CV leave-pair-out matches a direct 3-pair hand computation") {
    SemivarianceCloud cloud;
    cloud.pairs = {{0.2, 1.0, 0, 1}, {0.5, 2.0, 0, 2}, {0.9, 1.5, 1, 2}};

    auto triweight = [](double u) {
        double q = 1.0 - u * u;
        return q <= 0.0 ? 0.0 : 35.0 / 32.0 * q * q * q;
    };
    auto objective_direct = [&](double h) {
        double score = 0.0;
        for (int p = 0; p < 3; ++p) {
            double t = cloud.pairs[p].lag;
            double S0 = 0, S1 = 0, S2 = 0, T0 = 0, T1 = 0;
            for (int q = 0; q < 3; ++q) {
                if (q == p) continue;
                double u = cloud.pairs[q].lag - t;
                double w = triweight(u / h);
                if (w <= 0.0) continue;
                S0 += w;
                S1 += w * u;
                S2 += w * u * u;
                T0 += w * cloud.pairs[q].sqdiff;
                T1 += w * u * cloud.pairs[q].sqdiff;
            }
            if (S0 <= 0.0) return std::numeric_limits<double>::infinity();
            double det = S0 * S2 - S1 * S1;
            double fit = det > 1e-12 * S0 * S2 ? (S2 * T0 - S1 * T1) / det : T0 / S0;
            double ratio = cloud.pairs[p].sqdiff / fit - 1.0;
            score += ratio * ratio;
        }
        return score;
    };

    // per-candidate: the library objective equals the hand computation
    double lo = 0.2, hi = 0.9;
    double best_score = std::numeric_limits<double>::infinity();
    for (int g = 0; g < 30; ++g) {
        double h = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * g / 29.0);
        double direct = objective_direct(h);
        if (std::isfinite(direct)) {
            CHECK(h3_cv_objective(cloud, h) == doctest::Approx(direct).epsilon(1e-10));
            best_score = std::min(best_score, direct);
        } else {
            CHECK(!std::isfinite(h3_cv_objective(cloud, h)));
        }
    }
    // the selected bandwidth attains the optimum (plateaus may tie)
    double picked = select_h3_cv(cloud, 30);
    CHECK(objective_direct(picked) == doctest::Approx(best_score).epsilon(1e-9));
}

TEST_CASE("h3 CV on a pure-nugget cloud keeps the pilot near one") {
    std::mt19937_64 rng(13);
    GridSpec spec{12, 12};
    auto locs = make_grid(spec);
    const int n = static_cast<int>(locs.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec e(n);
    for (int i = 0; i < n; ++i) e[i] = gauss(rng);
    e.array() -= e.mean();
    e /= std::sqrt(e.squaredNorm() / (n - 1));
    SemivarianceCloud cloud = semivariance_cloud(e, locs);
    double h3 = select_h3_cv(cloud, 30);
    PilotVariogram pv = pilot_variogram(cloud, h3);
    for (double h : {0.15, 0.5, 0.9, 1.2})
        CHECK(pv(h) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("matern variogram: conventions and exponential reduction") {
    MaternParams p{0.2, 0.6, 0.5};
    CHECK(matern_variogram(0.0, p) == 0.0);
    CHECK(matern_variogram(0.6, p) ==
          doctest::Approx(0.2 + 0.8 * (1.0 - std::exp(-3.0))).epsilon(1e-10));
    CHECK(matern_variogram(0.6, p) == doctest::Approx(0.960169).epsilon(1e-5));
    for (double nu : {0.25, 0.5, 1.0}) {
        MaternParams q{0.1, 0.4, nu};
        CHECK(matern_variogram(10.0 * q.a, q) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("matern variogram is nondecreasing and bounded on [0,1]") {
    for (double nu : {0.25, 0.5, 1.0}) {
        MaternParams p{0.2, 0.6, nu};
        double prev = 0.0;
        for (int k = 0; k <= 400; ++k) {
            double h = 3.0 * k / 400.0;
            double g = matern_variogram(h, p);
            CHECK(g >= prev - 1e-12);
            CHECK(g >= 0.0);
            CHECK(g <= 1.0 + 1e-12);
            prev = g;
        }
    }
}

TEST_CASE("shapiro-botha fit: pure nugget, matern target, zero pilot") {
    Vec grid(100), vals(100);
    for (int g = 0; g < 100; ++g) {
        grid[g] = 1.4 * g / 99.0;
        vals[g] = g == 0 ? 0.0 : 1.0;
    }
    SBModel nugget_model = fit_shapiro_botha(PilotVariogram(grid, vals, 0.1));
    CHECK(nugget_model.nugget() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(nugget_model.weights().sum() == doctest::Approx(0.0).epsilon(1e-3));

    MaternParams mp{0.0, 0.6, 0.5};
    Vec mvals(100);
    for (int g = 0; g < 100; ++g) mvals[g] = matern_variogram(grid[g], mp);
    SBModel matern_fit = fit_shapiro_botha(PilotVariogram(grid, mvals, 0.1));
    for (double h = 0.05; h <= 1.4; h += 0.05)
        CHECK(std::abs(matern_fit(h) - matern_variogram(h, mp)) < 0.02);

    SBModel zero = fit_shapiro_botha(PilotVariogram(grid, Vec::Zero(100), 0.1));
    CHECK(zero.nugget() == 0.0);
    CHECK(zero.weights().size() == 0);
    CHECK_THROWS_AS(rescale_to_unit_sill(zero), ZeroSill);
}

TEST_CASE("shapiro-botha weights are exactly nonnegative; models are valid in R2") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        // randomized pilot: noisy saturating curve
        Vec grid(60), vals(60);
        double level = 0.2 + unit(rng);
        double range = 0.2 + 0.8 * unit(rng);
        for (int g = 0; g < 60; ++g) {
            grid[g] = 1.2 * g / 59.0;
            double ramp = 1.0 - std::exp(-3.0 * grid[g] / range);
            vals[g] = std::max(0.0, level * ramp + 0.1 * (unit(rng) - 0.5));
        }
        SBModel model = fit_shapiro_botha(PilotVariogram(grid, vals, 0.1));
        CHECK(model.nugget() >= 0.0);
        if (model.weights().size() > 0) CHECK(model.weights().minCoeff() >= 0.0);
        if (model.sill() <= 0.0) continue;
        SBModel unit_sill = rescale_to_unit_sill(model);
        CHECK(unit_sill.sill() == doctest::Approx(1.0).epsilon(1e-12));

        auto locs = oracle::random_locations(20, rng, 0.01);
        Mat R = correlation_matrix(locs, variogram_fn(unit_sill));
        Eigen::SelfAdjointEigenSolver<Mat> eig(R);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("rescale_to_unit_sill halves a sill-2 model; unit models unchanged") {
    Vec nodes(2), weights(2);
    nodes << 3.0, 9.0;
    weights << 0.8, 0.7;
    SBModel two(0.5, nodes, weights);  // sill 2
    CHECK(two.sill() == doctest::Approx(2.0));
    SBModel one = rescale_to_unit_sill(two);
    CHECK(one.nugget() == doctest::Approx(0.25));
    CHECK(one.weights()[0] == doctest::Approx(0.4));
    CHECK(one.sill() == doctest::Approx(1.0).epsilon(1e-12));
    SBModel again = rescale_to_unit_sill(one);
    CHECK(again.nugget() == doctest::Approx(one.nugget()).epsilon(1e-14));
}

TEST_CASE("correlation matrices: nugget identity, symmetry, exponential entry") {
    std::mt19937_64 rng(19);
    auto locs = oracle::random_locations(6, rng, 0.05);

    // pure nugget: identity
    SBModel nugget(1.0, Vec(0), Vec(0));
    Mat R = correlation_matrix(locs, variogram_fn(nugget));
    CHECK((R - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);

    // equidistant triple: equal off-diagonals, exact symmetry, unit diagonal
    std::vector<Location> triangle = {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
    MaternParams mp{0.0, 0.6, 0.5};
    Mat Rt = correlation_matrix(triangle, variogram_fn(mp));
    CHECK(Rt(0, 1) == doctest::Approx(Rt(0, 2)).epsilon(1e-14));
    CHECK(Rt(0, 1) == doctest::Approx(Rt(1, 2)).epsilon(1e-14));
    CHECK((Rt - Rt.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Rt.diagonal().minCoeff() == 1.0);

    // exponential closed form at the practical range
    std::vector<Location> pair = {{0.0, 0.0}, {0.6, 0.0}};
    Mat Re = correlation_matrix(pair, variogram_fn(mp));
    CHECK(Re(0, 1) == doctest::Approx(std::exp(-3.0)).epsilon(1e-10));
    CHECK(Re(0, 1) == doctest::Approx(0.049787).epsilon(1e-4));

    // cross-correlation: coincident target picks up correlation one
    Vec rho = cross_correlation(locs[2], locs, variogram_fn(mp));
    CHECK(rho[2] == 1.0);
    Vec rho_nugget = cross_correlation({0.77, 0.33}, locs, variogram_fn(nugget));
    CHECK(rho_nugget.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("cholesky_psd: identity, hand factor, jitter rescue, failure") {
    CHECK((cholesky_psd(Mat::Identity(4, 4)) - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    Mat M(2, 2);
    M << 1.0, 0.5, 0.5, 1.0;
    Mat L = cholesky_psd(M);
    CHECK(L(1, 1) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));
    CHECK((L * L.transpose() - M).cwiseAbs().maxCoeff() < 1e-14);

    Mat ones = Mat::Constant(2, 2, 1.0);  // rank deficient
    Mat Lo = cholesky_psd(ones);
    CHECK((Lo * Lo.transpose() - ones).cwiseAbs().maxCoeff() <= 1e-6);

    Mat indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(cholesky_psd(indefinite), NotPSD);
}

TEST_CASE("cholesky round-trips correlation matrices from valid models") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        SBModel model = oracle::random_sb_model(rng, trial % 3 == 0 ? 0.3 : 0.0);
        auto locs = oracle::random_locations(15, rng, 0.02);
        Mat R = correlation_matrix(locs, variogram_fn(model));
        Mat L = cholesky_psd(R);
        CHECK((L * L.transpose() - R).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("nnls basics") {
    Mat A(3, 2);
    A << 1, 0, 0, 1, 1, 1;
    Vec b(3);
    b << 1.0, 2.0, 3.0;
    Vec x = nnls(A, b);
    // normal-equation optimum of this overdetermined system is feasible
    Vec ref = (A.transpose() * A).inverse() * A.transpose() * b;
    CHECK(x[0] == doctest::Approx(ref[0]).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(ref[1]).epsilon(1e-10));

    // unconstrained optimum goes negative; NNLS clamps and stays optimal on
    // the active face
    Vec b2(3);
    b2 << -5.0, 2.0, 0.5;
    Vec x2 = nnls(A, b2);
    CHECK(x2.minCoeff() >= 0.0);
    Vec face(2);
    face << 0.0, (2.0 + 0.5) / 2.0;
    CHECK((A * x2 - b2).squaredNorm() <= (A * face - b2).squaredNorm() + 1e-12);

    CHECK(nnls(A, Vec::Zero(3)).cwiseAbs().maxCoeff() == 0.0);
}
