#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

#include "pnlw/errors.hpp"
#include "pnlw/random_basis.hpp"
#include "pnlw/sphere_harmonics.hpp"
#include "pnlw/stats.hpp"

using namespace pnlw;

namespace {
constexpr double kVol = 2.0 * 3.14159265358979323846 * 3.14159265358979323846;
}

TEST_CASE("haar draw on O(1) is a sign") {
    Rng rng(3);
    for (int i = 0; i < 8; ++i) {
        const BasisRotation rot = sample_haar(1, rng);
        CHECK(std::abs(std::abs(rot.q[0]) - 1.0) < 1e-15);
    }
    CHECK_THROWS_AS(sample_haar(0, rng), std::invalid_argument);
}

TEST_CASE("haar draws are orthogonal to 1e-12") {
    Rng rng(17);
    for (int N : {2, 9, 40, 121}) {
        const BasisRotation rot = sample_haar(N, rng);
        CHECK(max_orthogonality_error(rot) < 1e-12);
        CHECK(std::abs(std::abs(determinant(rot)) - 1.0) < 1e-8);
    }
}

TEST_CASE("first matrix entry has second moment 1/N") {
    const int draws = 20000, N = 9;
    double mean_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        Rng rng = Rng::stream(99, "q11", static_cast<uint64_t>(i));
        const BasisRotation rot = sample_haar(N, rng);
        mean_sq += rot.entry(0, 0) * rot.entry(0, 0);
    }
    mean_sq /= draws;
    // var(x1^2) = 2 (N-1) / (N^2 (N+2)) for a uniform unit vector
    const double se = std::sqrt(2.0 * (N - 1.0) / (N * N * (N + 2.0)) / draws);
    CHECK(std::abs(mean_sq - 1.0 / N) < 3.0 * se);
}

TEST_CASE("left invariance of the first-column law") {
    const int draws = 8000;
    Rng rng_fixed(1234);
    const BasisRotation fixed = sample_haar(9, rng_fixed);
    std::vector<double> plain(draws), rotated(draws);
    for (int i = 0; i < draws; ++i) {
        Rng rng = Rng::stream(7, "invariance", static_cast<uint64_t>(i));
        const BasisRotation q = sample_haar(9, rng);
        plain[i] = q.entry(0, 0);
        double dot = 0.0;
        for (int j = 0; j < 9; ++j) dot += fixed.entry(0, j) * q.entry(j, 0);
        rotated[i] = dot;
    }
    CHECK(ks_two_sample_pvalue(plain, rotated) > 0.01);
}

TEST_CASE("rotated degree block stays orthonormal") {
    const int n = 3;
    SphereContext ctx(n, 2 * (n - 1));
    Rng rng(5);
    BasisRotation rot = sample_haar(n * n, rng);
    rot.degree = n;

    // identity rotation reproduces the reference basis
    BasisRotation eye = rot;
    for (int i = 0; i < eye.dim; ++i)
        for (int j = 0; j < eye.dim; ++j) eye.q[static_cast<size_t>(i) * eye.dim + j] = (i == j);
    const SphereField e1 = basis_vector_field(eye, 2);
    CHECK(e1.at(n, 2) == 1.0);

    // gram matrix of the rotated family under grid quadrature
    std::vector<GridValues> vals;
    for (int k = 1; k <= rot.dim; ++k)
        vals.push_back(ctx.plan.synthesize(basis_vector_field(rot, k)));
    const SphereGrid& g = ctx.grid;
    for (size_t a = 0; a < vals.size(); ++a) {
        for (size_t b = a; b < vals.size(); ++b) {
            double dot = 0.0;
            size_t idx = 0;
            for (int i = 0; i < g.m_chi(); ++i)
                for (int t = 0; t < g.m_theta(); ++t)
                    for (int j = 0; j < g.n_phi; ++j, ++idx)
                        dot += g.chi_w[i] * g.theta_w[t] * g.phi_w * vals[a].v[idx] * vals[b].v[idx];
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
        }
    }
}

TEST_CASE("median estimates") {
    // degree one: deterministic norm
    const MedianEstimate one = estimate_median_lq(1, 6.0, 150, 11);
    CHECK(one.median == doctest::Approx(std::pow(kVol, 1.0 / 6.0 - 0.5)).epsilon(1e-10));
    CHECK(one.ci_low <= one.median);
    CHECK(one.ci_high >= one.median);

    // q = 2 on the unit sphere of E_n
    const MedianEstimate l2 = estimate_median_lq(4, 2.0, 150, 12);
    CHECK(l2.median == doctest::Approx(1.0).epsilon(1e-8));

    // uniform in the degree: the spread across n at fixed q stays within a
    // factor 2 (the constant in M <= C sqrt(q) does not depend on n)
    for (double q : {4.0, 8.0}) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int n : {2, 5, 8}) {
            const MedianEstimate est = estimate_median_lq(n, q, 150, 13 + n);
            const double r = est.median / std::sqrt(q);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        CHECK(hi / lo <= 2.0);
    }

    CHECK_THROWS_AS(estimate_median_lq(4, 1.5, 150, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_median_lq(4, 4.0, 50, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_median_lq(40, 16.0, 150, 1), resolution_error);
}

TEST_CASE("empirical tails") {
    const std::vector<double> levels = {0.0, 0.05, 0.1, 0.2, 0.4};
    const TailEstimate t1 = empirical_tail(5, 4.0, levels, 400, 21);
    CHECK(t1.survival[0] == 1.0); // level zero
    for (size_t i = 0; i + 1 < t1.survival.size(); ++i)
        CHECK(t1.survival[i + 1] <= t1.survival[i]);

    // the norm is deterministic on E_1
    const TailEstimate det = empirical_tail(1, 4.0, {0.01, 0.1}, 200, 22);
    CHECK(det.survival[0] == 0.0);
    CHECK(det.survival[1] == 0.0);

    CHECK_THROWS_AS(empirical_tail(3, 4.0, {0.2, 0.1}, 200, 1), std::invalid_argument);

    const TailEstimate auto_tail = empirical_tail_auto(8, 4.0, 3000, 23);
    const auto rate = fitted_tail_rate(auto_tail);
    REQUIRE(rate.has_value());
    CHECK(*rate > 0.0);
}

TEST_CASE("tail rate steepens with the degree") {
    double prev = 0.0;
    for (int n : {3, 6, 10}) {
        const TailEstimate tail = empirical_tail_auto(n, 4.0, 3000, 100 + n);
        const auto rate = fitted_tail_rate(tail);
        REQUIRE(rate.has_value());
        CHECK(*rate > prev);
        prev = *rate;
    }
}

TEST_CASE("bernstein ratios") {
    CHECK(bernstein_ratio(5, 2.0, 40, 31) == doctest::Approx(1.0).epsilon(1e-8));
    const double inf = std::numeric_limits<double>::infinity();
    for (int n : {2, 6}) {
        const double z = bernstein_ratio(n, inf, 20, 32);
        CHECK(std::abs(z - 1.0 / std::sqrt(kVol)) < 1e-6);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int n : {2, 4, 8, 12}) {
        const double v = bernstein_ratio(n, 6.0, 120, 33 + n);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi / lo < 2.0);
}

TEST_CASE("coordinate tail against the analytic envelope") {
    std::vector<double> levels = {0.0, 0.2, 0.5, 1.0, 1.2};
    const TailEstimate tail = coordinate_tail_check(10, levels, 40000, 41);
    CHECK(tail.survival[0] == 1.0);
    CHECK(tail.survival[4] == 0.0); // |x1| <= 1
    for (size_t i = 0; i < levels.size(); ++i) {
        const double envelope = 2.0 * std::exp(-9.0 * levels[i] * levels[i] / 2.0);
        CHECK(tail.survival[i] <= envelope + tail.wilson_half[i]);
    }
    // N = 10, t = 1 envelope value
    CHECK(2.0 * std::exp(-4.5) == doctest::Approx(0.0222).epsilon(1e-2));
    CHECK(tail.survival[3] < 2.0 * std::exp(-4.5));
    CHECK_THROWS_AS(coordinate_tail_check(1, levels, 100, 1), std::invalid_argument);
}

TEST_CASE("lq moments") {
    CHECK(lq_moment(1, 8.0, 120, 51) ==
          doctest::Approx(std::pow(kVol, 1.0 / 8.0 - 0.5)).epsilon(1e-10));
    CHECK(lq_moment(4, 2.0, 120, 52) == doctest::Approx(1.0).epsilon(1e-8));
    for (double q : {4.0, 16.0}) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int n : {2, 6, 10}) {
            const double r = lq_moment(n, q, 150, 53 + n) / std::sqrt(q);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        CHECK(hi / lo <= 2.0);
    }
}

TEST_CASE("uniform basis rejection search") {
    // degree 1 always accepts for C >= 1
    const UniformBasisResult one = search_uniform_basis(1, {4.0, 8.0}, 1.0, 4, 61);
    CHECK(one.success);
    CHECK(one.attempts_used[0] == 1);

    // q = 2 accepts immediately at any truncation
    const UniformBasisResult l2 = search_uniform_basis(3, {2.0}, 1.0, 4, 62);
    CHECK(l2.success);

    const UniformBasisResult full = search_uniform_basis(4, {4.0, 6.0, 8.0}, 1.5, 64, 63);
    CHECK(full.success);
    REQUIRE(full.rotations.size() == 4);
    for (const auto& rot : full.rotations) CHECK(max_orthogonality_error(rot) < 1e-12);

    // an absurdly small constant exhausts the attempts
    const UniformBasisResult fail = search_uniform_basis(3, {8.0}, 0.05, 3, 64);
    CHECK_FALSE(fail.success);
    CHECK(fail.first_failed_degree >= 1);
}

TEST_CASE("rotation csv writes") {
    Rng rng(71);
    BasisRotation rot = sample_haar(4, rng);
    rot.degree = 2;
    save_rotation_csv(rot, "rotation_test.csv");
    std::remove("rotation_test.csv");
}
