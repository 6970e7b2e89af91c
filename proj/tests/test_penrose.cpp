#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pnlw/errors.hpp"
#include "pnlw/penrose.hpp"
#include "pnlw/random_data.hpp"

using namespace pnlw;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kVol = 2.0 * kPi * kPi;

Trajectory constant_trajectory(int n_max, double value) {
    Trajectory w;
    w.t0 = -kPi;
    w.dt = 2.0 * kPi;
    w.n_max = n_max;
    StatePair c(n_max);
    c.pos.at(1, 1) = value * std::sqrt(kVol);
    w.snaps = {c, c};
    return w;
}

Trajectory linear_trajectory(const StatePair& data, double t0, double t1, double dt) {
    Trajectory traj;
    traj.t0 = t0;
    traj.n_max = data.n_max();
    const long n = std::max(1L, std::lround((t1 - t0) / dt));
    traj.dt = (t1 - t0) / static_cast<double>(n);
    for (long i = 0; i <= n; ++i) traj.snaps.push_back(evolve_linear(data, t0 + traj.dt * i));
    return traj;
}
} // namespace

TEST_CASE("chart point values") {
    const ChartPoint origin = chart_forward(0.0, 0.0);
    CHECK(origin.T == 0.0);
    CHECK(origin.R == 0.0);
    CHECK(origin.omega == doctest::Approx(2.0));

    const ChartPoint unit = chart_forward(0.0, 1.0);
    CHECK(unit.T == doctest::Approx(0.0));
    CHECK(unit.R == doctest::Approx(kPi / 2.0));
    CHECK(unit.omega == doctest::Approx(1.0));

    const ChartPoint p11 = chart_forward(1.0, 1.0);
    CHECK(p11.T == doctest::Approx(std::atan(2.0)));
    CHECK(p11.R == doctest::Approx(std::atan(2.0)));
    CHECK(p11.omega == doctest::Approx(2.0 / std::sqrt(5.0)));

    const TRPoint back = chart_inverse(0.0, kPi / 2.0);
    CHECK(back.t == doctest::Approx(0.0));
    CHECK(back.r == doctest::Approx(1.0));

    const TRPoint third = chart_inverse(kPi / 3.0, kPi / 3.0);
    CHECK(third.t == doctest::Approx(std::sqrt(3.0) / 2.0));
    CHECK(third.r == doctest::Approx(std::sqrt(3.0) / 2.0));

    CHECK_THROWS_AS(chart_inverse(kPi, 0.0), out_of_image_error);
    CHECK_THROWS_AS(chart_forward(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("chart roundtrip over the sample box") {
    Rng rng(3);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double t = -50.0 + 100.0 * rng.uniform();
        const double r = 50.0 * rng.uniform();
        const ChartPoint cp = chart_forward(t, r);
        CHECK(cp.R >= 0.0);
        CHECK(cp.R < kPi);
        CHECK(cp.omega > 0.0);
        const TRPoint back = chart_inverse(cp.T, cp.R);
        const double scale = 1.0 + std::abs(t) + r;
        worst = std::max(worst, std::max(std::abs(back.t - t), std::abs(back.r - r)) / scale);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("jacobian of the time-zero chart") {
    for (double r : {0.2, 1.0, 4.0}) {
        const double h = 1e-5 * (1.0 + r);
        const double d = (chart_forward(0.0, r + h).R - chart_forward(0.0, r - h).R) / (2.0 * h);
        CHECK(d == doctest::Approx(2.0 / (1.0 + r * r)).epsilon(1e-8));
    }
}

TEST_CASE("radial grid integrates the natural measure") {
    const EuclideanRadialGrid egrid = EuclideanRadialGrid::make(20);
    double vol = 0.0;
    for (size_t i = 0; i < egrid.size(); ++i) vol += egrid.w_sphere[i];
    CHECK(vol * 4.0 * kPi == doctest::Approx(kVol).epsilon(1e-12));
}

TEST_CASE("pt0 inverse on simple data") {
    const int n_max = 3;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    const EuclideanRadialGrid egrid = EuclideanRadialGrid::make(12);

    const StatePair zero(n_max);
    const EuclideanPair zp = pt0_inverse(zero, ctx, egrid);
    for (double v : zp.g0) CHECK(v == 0.0);
    for (double v : zp.g1) CHECK(v == 0.0);

    // constant field value c maps to c Omega0 (position) and c Omega0^2 (velocity)
    StatePair constant(n_max);
    constant.pos.at(1, 1) = 2.5 * std::sqrt(kVol);
    constant.vel.at(1, 1) = 2.5 * std::sqrt(kVol);
    const EuclideanPair cp = pt0_inverse(constant, ctx, egrid);
    for (size_t i = 0; i < egrid.size(); ++i) {
        const double om = 2.0 / (1.0 + egrid.r_nodes[i] * egrid.r_nodes[i]);
        for (size_t s = 0; s < cp.n_s2; ++s) {
            CHECK(cp.g0[i * cp.n_s2 + s] == doctest::Approx(2.5 * om).epsilon(1e-12));
            CHECK(cp.g1[i * cp.n_s2 + s] == doctest::Approx(2.5 * om * om).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted euclidean norms are isometric to the sphere") {
    const int n_max = 5;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    const EuclideanRadialGrid egrid = EuclideanRadialGrid::make(2 * n_max);
    Rng rng(9);
    SphereField u(n_max);
    for (double& c : u.coeffs) c = rng.gaussian();

    // script-L2 of Omega0 Psi(u) equals the sphere L2 norm
    const double l2 = euclid_weighted_norm(ctx, u, RadialOperator::h0, 0.5, 0.0, egrid);
    CHECK(l2 == doctest::Approx(u.l2_norm()).epsilon(1e-8));

    // H^{-1}-type norm of a unit mode built from v1 = e_{n,k} is 1/n
    for (int n : {2, 4}) {
        SphereField mode(n);
        mode.at(n, 3) = 1.0;
        const double h = euclid_weighted_norm(ctx, mode, RadialOperator::h1, -0.5, -1.0, egrid);
        CHECK(h == doctest::Approx(1.0 / n).epsilon(1e-6));
    }

    SphereField zero(n_max);
    CHECK(euclid_weighted_norm(ctx, zero, RadialOperator::h0, 0.5, 0.0, egrid) == 0.0);
}

TEST_CASE("radial operators have the sphere eigenvalues") {
    const int n_max = 6;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    const EuclideanRadialGrid egrid = EuclideanRadialGrid::make(32);

    // the image of the constant harmonic is annihilated by H0 (eigenvalue 0)
    CHECK(h_eigen_residual(ctx, 1, 1, RadialOperator::h0, egrid) < 1e-6);
    // H1 h_{2,k} = -3 h_{2,k}
    CHECK(h_eigen_residual(ctx, 2, 1, RadialOperator::h1, egrid) < 1e-5);

    double worst0 = 0.0, worst1 = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        for (int k = 1; k <= n * n; k += std::max(1, n * n / 3)) {
            worst0 = std::max(worst0, h_eigen_residual(ctx, n, k, RadialOperator::h0, egrid));
            worst1 = std::max(worst1, h_eigen_residual(ctx, n, k, RadialOperator::h1, egrid));
        }
    }
    CHECK(worst0 < 1e-8);
    CHECK(worst1 < 1e-8);

    // residuals stay at the floor under grid refinement
    const EuclideanRadialGrid fine = EuclideanRadialGrid::make(64);
    CHECK(h_eigen_residual(ctx, 4, 2, RadialOperator::h0, fine) < 1e-8);

    // linearity of the operator application
    SphereField a(3), b(3);
    a.at(3, 2) = 1.0;
    b.at(2, 1) = 1.0;
    SphereField mix(3);
    mix.at(3, 2) = 2.0;
    mix.at(2, 1) = -0.5;
    const auto ha = apply_radial_operator(ctx, a, RadialOperator::h0, egrid);
    const auto hb = apply_radial_operator(ctx, b, RadialOperator::h0, egrid);
    const auto hm = apply_radial_operator(ctx, mix, RadialOperator::h0, egrid);
    double worst = 0.0;
    for (size_t i = 0; i < hm.size(); ++i)
        worst = std::max(worst, std::abs(hm[i] - 2.0 * ha[i] + 0.5 * hb[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("lq transfer identity") {
    const int n_max = 4;
    SphereContext ctx(n_max, 2 * (n_max - 1));

    // constant w at q = 4: closed form 2 pi^3 on both sides
    const Trajectory ones = constant_trajectory(n_max, 1.0);
    const LqTransferResult closed = lq_transfer(ctx, ones, 4.0);
    const double expect = 2.0 * kPi * kPi * kPi;
    CHECK(closed.euclid == doctest::Approx(expect).epsilon(1e-5));
    CHECK(closed.sphere == doctest::Approx(expect).epsilon(1e-5));

    // zero field
    const Trajectory zeros = constant_trajectory(n_max, 0.0);
    const LqTransferResult none = lq_transfer(ctx, zeros, 5.0);
    CHECK(none.euclid == 0.0);
    CHECK(none.sphere == 0.0);

    // homogeneity of degree q
    const Trajectory half = constant_trajectory(n_max, 0.5);
    const LqTransferResult scaled = lq_transfer(ctx, half, 4.0);
    CHECK(scaled.euclid == doctest::Approx(closed.euclid / 16.0).epsilon(1e-10));

    // identity on a band-limited random evolution
    const CoefficientProfile profile = make_profile(0.0, 1.55, n_max);
    Rng rng = Rng::stream(5, "transfer");
    const RandomDraw d = sample_draw(n_max, DrawDistribution::gaussian, rng);
    const StatePair data = draw_data(profile, nullptr, d);
    const Trajectory w = linear_trajectory(data, -kPi, kPi, 0.01);
    const LqTransferResult r = lq_transfer(ctx, w, 4.0);
    CHECK(std::abs(r.euclid - r.sphere) / std::max(r.euclid, r.sphere) < 1e-5);

    CHECK_THROWS_AS(lq_transfer(ctx, ones, 3.5), std::invalid_argument);
}

TEST_CASE("scattering decay control and scaling") {
    const int n_max = 3;
    SphereContext ctx(n_max, 2 * (n_max - 1));
    const CoefficientProfile profile = make_profile(0.0, 1.55, n_max);
    Rng rng = Rng::stream(7, "scatter");
    const RandomDraw d = sample_draw(n_max, DrawDistribution::gaussian, rng);
    const StatePair data = draw_data(profile, nullptr, d);
    const Trajectory lin = linear_trajectory(data, 0.0, 3.13, 2e-3);

    // identical trajectories: the difference vanishes
    const ScatteringFit control = scattering_decay(ctx, lin, lin, 6.0, {2.0, 10.0, 40.0});
    for (double v : control.norms) CHECK(v < 1e-12);

    // difference scaled by c scales every norm by |c|
    Rng rng2 = Rng::stream(8, "scatter-d");
    const RandomDraw d2 = sample_draw(n_max, DrawDistribution::gaussian, rng2);
    const StatePair pert = draw_scaled_data(profile, nullptr, d2, 1e-3);
    Trajectory shifted = lin;
    Trajectory shifted2 = lin;
    for (size_t i = 0; i < lin.snaps.size(); ++i) {
        const StatePair extra = evolve_linear(pert, lin.t_at(i));
        for (size_t m = 0; m < extra.pos.coeffs.size(); ++m) {
            shifted.snaps[i].pos.coeffs[m] += extra.pos.coeffs[m];
            shifted.snaps[i].vel.coeffs[m] += extra.vel.coeffs[m];
            shifted2.snaps[i].pos.coeffs[m] += 3.0 * extra.pos.coeffs[m];
            shifted2.snaps[i].vel.coeffs[m] += 3.0 * extra.vel.coeffs[m];
        }
    }
    const std::vector<double> ts = {2.0, 8.0, 30.0};
    const ScatteringFit one = scattering_decay(ctx, shifted, lin, 6.0, ts);
    const ScatteringFit three = scattering_decay(ctx, shifted2, lin, 6.0, ts);
    for (size_t i = 0; i < ts.size(); ++i)
        CHECK(three.norms[i] == doctest::Approx(3.0 * one.norms[i]).epsilon(1e-10));

    CHECK_THROWS_AS(scattering_decay(ctx, lin, lin, 3.5, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(scattering_decay(ctx, lin, lin, 7.0, {2.0}), std::invalid_argument);

    // a trajectory too coarse for its content reports a refine error
    const Trajectory coarse = linear_trajectory(data, 0.0, 3.13, 0.6);
    CHECK_THROWS_AS(scattering_decay(ctx, coarse, lin, 6.0, {2.0}), resolution_error);
}
