#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

#include "pnlw/errors.hpp"
#include "pnlw/rng.hpp"
#include "pnlw/sphere_harmonics.hpp"

using namespace pnlw;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kVol = 2.0 * kPi * kPi;

// direct per-term summation, no separable pipeline
double brute_force_value(const BasisTables& tables, const SphereField& f, double chi,
                         double theta, double phi) {
    const int L = f.n_max;
    std::vector<double> plm(static_cast<size_t>(L) * (L + 1) / 2);
    normalized_legendre_table(L - 1, std::cos(theta), plm.data());
    double acc = 0.0;
    for (int n = 1; n <= L; ++n) {
        for (int l = 0; l < n; ++l) {
            const double pr = tables.chi_profile(n, l, chi);
            for (int m = -l; m <= l; ++m) {
                double y = plm[plm_index(l, std::abs(m))];
                if (m > 0) y *= std::sqrt(2.0) * std::cos(m * phi);
                if (m < 0) y *= std::sqrt(2.0) * std::sin(-m * phi);
                acc += f.at(n, lm_to_k(l, m)) * pr * y;
            }
        }
    }
    return acc;
}
} // namespace

TEST_CASE("index mapping k <-> (l, m)") {
    for (int l = 0; l < 7; ++l) {
        for (int m = -l; m <= l; ++m) {
            const auto [l2, m2] = k_to_lm(lm_to_k(l, m));
            CHECK(l2 == l);
            CHECK(m2 == m);
        }
    }
    CHECK(lm_to_k(0, 0) == 1);
    // k runs over [1, n^2] for degree n: largest pair is (n-1, n-1)
    CHECK(lm_to_k(3, 3) == 16);
}

TEST_CASE("grid total weight is vol(S^3)") {
    for (int d : {0, 5, 12, 28}) {
        const SphereGrid g = SphereGrid::for_degree(d);
        CHECK(g.total_weight() == doctest::Approx(kVol).epsilon(1e-12));
    }
}

TEST_CASE("degree-one basis function is the normalized constant") {
    SphereContext ctx(1, 2);
    SphereField f(1);
    f.at(1, 1) = 1.0;
    const GridValues v = ctx.plan.synthesize(f);
    for (double x : v.v) CHECK(x == doctest::Approx(1.0 / std::sqrt(kVol)).epsilon(1e-13));
}

TEST_CASE("chi normalization matches the Gegenbauer closed form") {
    const int n_max = 9;
    BasisTables tables(n_max);
    for (int n = 1; n <= n_max; ++n) {
        for (int l = 0; l < n; ++l) {
            const double alpha = l + 1.0;
            const int j = n - 1 - l;
            const double logh = std::log(kPi) + (1.0 - 2.0 * alpha) * std::log(2.0) +
                                std::lgamma(j + 2.0 * alpha) - std::lgamma(j + 1.0) -
                                std::log(j + alpha) - 2.0 * std::lgamma(alpha);
            const double expected = std::exp(-0.5 * logh);
            CHECK(tables.normalization(n, l) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("basis is orthonormal under grid quadrature") {
    const int n_max = 5;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    std::vector<GridValues> vals;
    std::vector<int> ns, ks;
    for (int n = 1; n <= n_max; ++n) {
        for (int k = 1; k <= n * n; ++k) {
            SphereField f(n_max);
            f.at(n, k) = 1.0;
            vals.push_back(ctx.plan.synthesize(f));
            ns.push_back(n);
            ks.push_back(k);
        }
    }
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

TEST_CASE("synthesize matches brute-force summation") {
    const int n_max = 6;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    Rng rng(5);
    SphereField f(n_max);
    for (double& c : f.coeffs) c = rng.gaussian();
    const GridValues v = ctx.plan.synthesize(f);
    size_t idx = 0;
    double worst = 0.0;
    for (int i = 0; i < ctx.grid.m_chi(); ++i) {
        for (int t = 0; t < ctx.grid.m_theta(); ++t) {
            for (int j = 0; j < ctx.grid.n_phi; ++j, ++idx) {
                const double direct = brute_force_value(
                    ctx.tables, f, ctx.grid.chi[i], std::acos(ctx.grid.theta_u[t]),
                    ctx.grid.phi_at(j));
                worst = std::max(worst, std::abs(direct - v.v[idx]));
            }
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("analyze inverts synthesize on band-limited fields") {
    const int n_max = 7;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    Rng rng(9);
    SphereField f(n_max);
    for (double& c : f.coeffs) c = rng.gaussian();
    const SphereField back = ctx.plan.analyze(ctx.plan.synthesize(f), n_max);
    double worst = 0.0;
    for (size_t i = 0; i < f.coeffs.size(); ++i)
        worst = std::max(worst, std::abs(f.coeffs[i] - back.coeffs[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("constant samples project onto the first mode") {
    SphereContext ctx(4, 8);
    GridValues ones(ctx.grid);
    for (double& v : ones.v) v = 1.0;
    const SphereField f = ctx.plan.analyze(ones, 4);
    CHECK(f.at(1, 1) == doctest::Approx(std::sqrt(kVol)).epsilon(1e-12));
    for (int n = 2; n <= 4; ++n)
        for (int k = 1; k <= n * n; ++k) CHECK(std::abs(f.at(n, k)) < 1e-10);
}

TEST_CASE("sampling one basis function recovers a unit coefficient") {
    SphereContext ctx(4, 6);
    SphereField f(4);
    f.at(4, 2) = 1.0;
    const SphereField back = ctx.plan.analyze(ctx.plan.synthesize(f), 4);
    CHECK(back.at(4, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("laplacian is the diagonal multiplier 1 - n^2") {
    SphereField f(3);
    f.at(3, 2) = 2.0;
    const SphereField lf = laplacian(f);
    CHECK(lf.at(3, 2) == doctest::Approx((1.0 - 9.0) * 2.0));
}

TEST_CASE("lp norms") {
    SphereContext ctx(3, 12);
    SphereField f(3);
    f.at(1, 1) = 1.0;
    const GridValues v = ctx.plan.synthesize(f);
    for (double p : {1.0, 2.0, 3.0, 6.0})
        CHECK(lp_norm(v, p, ctx.grid) ==
              doctest::Approx(std::pow(kVol, 1.0 / p - 0.5)).epsilon(1e-12));
    // constant field c
    GridValues cv(ctx.grid);
    for (double& x : cv.v) x = -1.7;
    CHECK(lp_norm(cv, 4.0, ctx.grid) == doctest::Approx(1.7 * std::pow(kVol, 0.25)));
    CHECK(lp_norm(cv, std::numeric_limits<double>::infinity(), ctx.grid) ==
          doctest::Approx(1.7));
    CHECK_THROWS_AS(lp_norm(cv, 0.5, ctx.grid), std::invalid_argument);

    Rng rng(13);
    SphereField g(3);
    for (double& c : g.coeffs) c = rng.gaussian();
    CHECK(lp_norm(ctx.plan.synthesize(g), 2.0, ctx.grid) ==
          doctest::Approx(g.l2_norm()).epsilon(1e-8));
}

TEST_CASE("sobolev norm multiplier") {
    SphereField f(5);
    f.at(5, 1) = 1.0;
    CHECK(sobolev_norm(f, 1.0) == doctest::Approx(5.0));
    CHECK(sobolev_norm(f, 0.0) == doctest::Approx(f.l2_norm()));
    SphereField g(4);
    g.at(4, 3) = 2.0;
    CHECK(sobolev_norm(g, -1.0) == doctest::Approx(0.5));
}

TEST_CASE("projection kernel diagonal is constant n^2 / vol") {
    SphereContext ctx(6, 10);
    for (int n : {1, 4, 6}) {
        const GridValues k = projection_kernel_diag(ctx.plan, n);
        const double expected = n * n / kVol;
        double mean = 0.0;
        for (double v : k.v) mean += v;
        mean /= static_cast<double>(k.v.size());
        CHECK(mean == doctest::Approx(expected).epsilon(1e-10));
        double dev = 0.0;
        for (double v : k.v) dev = std::max(dev, std::abs(v - expected));
        CHECK(dev / expected < 1e-9);
    }
}

TEST_CASE("zonal field attains the kernel bound") {
    const int n = 5;
    SphereContext ctx(n, 8 * (n - 1));
    const SphereField z =
        zonal_field(ctx.tables, n, ctx.grid.chi[0], std::acos(ctx.grid.theta_u[0]), 0.0);
    const double sup = lp_norm(ctx.plan.synthesize(z), std::numeric_limits<double>::infinity(),
                               ctx.grid);
    CHECK(sup / z.l2_norm() == doctest::Approx(n / std::sqrt(kVol)).epsilon(1e-9));
}

TEST_CASE("resolution and argument errors") {
    CHECK_THROWS_AS(BasisTables(0), std::invalid_argument);
    SphereContext coarse(6, 4); // too coarse for n_max = 6
    SphereField f(6);
    f.at(6, 1) = 1.0;
    CHECK_THROWS_AS(coarse.plan.synthesize(f), resolution_error);
    GridValues v(coarse.grid);
    CHECK_THROWS_AS(coarse.plan.analyze(v, 6), resolution_error);
}

TEST_CASE("field csv roundtrip") {
    Rng rng(21);
    SphereField f(4);
    for (double& c : f.coeffs) c = rng.gaussian();
    const std::string path = "field_roundtrip_test.csv";
    save_field_csv(f, path);
    const SphereField g = load_field_csv(path);
    REQUIRE(g.n_max == f.n_max);
    for (size_t i = 0; i < f.coeffs.size(); ++i) CHECK(g.coeffs[i] == f.coeffs[i]);
    std::remove(path.c_str());
}
