#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnlw/errors.hpp"
#include "pnlw/nlw_solver.hpp"
#include "pnlw/random_data.hpp"

using namespace pnlw;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kVol = 2.0 * kPi * kPi;

StatePair profile_draw(int n_max, double scale, uint64_t seed) {
    const CoefficientProfile p = make_profile(0.0, 1.55, n_max);
    Rng rng = Rng::stream(seed, "solver-test");
    const RandomDraw d = sample_draw(n_max, DrawDistribution::gaussian, rng);
    return draw_scaled_data(p, nullptr, d, scale);
}

// classic RK4 on y'' + y + y^3/(2 pi^2) = 0
void duffing_rk4(double& y, double& v, double t_target, double h) {
    double t = 0.0;
    const auto acc = [](double yy) { return -yy - yy * yy * yy / kVol; };
    while (t < t_target - 1e-12) {
        const double step = std::min(h, t_target - t);
        const double k1y = v, k1v = acc(y);
        const double k2y = v + 0.5 * step * k1v, k2v = acc(y + 0.5 * step * k1y);
        const double k3y = v + 0.5 * step * k2v, k3v = acc(y + 0.5 * step * k2y);
        const double k4y = v + step * k3v, k4v = acc(y + step * k3y);
        y += step / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        v += step / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        t += step;
    }
}
} // namespace

TEST_CASE("zero data stays zero") {
    SphereContext ctx(3, 8);
    const NlwSolver solver(ctx);
    SolveOptions opts;
    opts.t_end = 1.0;
    opts.dt = 1e-2;
    const StatePair zero(3);
    const Trajectory traj = solver.solve(zero, nullptr, opts);
    for (const auto& s : traj.snaps)
        for (double c : s.pos.coeffs) CHECK(c == 0.0);
}

TEST_CASE("constant mode follows the scalar oscillator") {
    SphereContext ctx(1, 0);
    const NlwSolver solver(ctx);
    StatePair init(1);
    init.pos.at(1, 1) = 0.5;
    SolveOptions opts;
    opts.t_end = 5.0;
    opts.dt = 1e-3;
    const Trajectory traj = solver.solve(init, nullptr, opts);
    double worst = 0.0;
    for (size_t i = 0; i < traj.snaps.size(); i += 200) {
        double y = 0.5, v = 0.0;
        duffing_rk4(y, v, traj.t_at(i), 1e-5);
        worst = std::max(worst, std::abs(traj.snaps[i].pos.at(1, 1) - y));
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("small data converges to the linear flow at cubic rate") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const NlwSolver solver(ctx);
    SolveOptions opts;
    opts.t_end = 2.0;
    opts.dt = 2e-3;
    double defect_prev = 0.0;
    double ratio = 0.0;
    for (double eps : {1e-2, 1e-3}) {
        const StatePair init = profile_draw(n_max, eps, 5);
        const Trajectory traj = solver.solve(init, nullptr, opts);
        const StatePair lin = evolve_linear(init, opts.t_end);
        double defect = 0.0;
        for (size_t i = 0; i < lin.pos.coeffs.size(); ++i)
            defect = std::max(defect,
                              std::abs(traj.snaps.back().pos.coeffs[i] - lin.pos.coeffs[i]));
        if (defect_prev > 0.0) ratio = defect / defect_prev;
        defect_prev = defect;
    }
    // amplitude shrank by 10, the cubic defect must shrink by ~1000
    CHECK(ratio < 5e-3);
    CHECK(ratio > 2e-4);
}

TEST_CASE("hamiltonian conservation and convergence order") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const NlwSolver solver(ctx);
    const StatePair init = profile_draw(n_max, 2.0, 7);
    const auto drift_at = [&](double dt, size_t stride) {
        SolveOptions opts;
        opts.t_end = kPi;
        opts.dt = dt;
        const Trajectory traj = solver.solve(init, nullptr, opts);
        const double h0 = hamiltonian(traj.snaps.front(), ctx.plan);
        double worst = 0.0;
        for (size_t i = 0; i < traj.snaps.size(); i += stride)
            worst = std::max(worst, std::abs(hamiltonian(traj.snaps[i], ctx.plan) - h0));
        worst = std::max(worst, std::abs(hamiltonian(traj.snaps.back(), ctx.plan) - h0));
        return worst / h0;
    };
    CHECK(drift_at(1e-3, 20) < 1e-8); // roundoff floor at the reference step
    // order measured in the truncation-dominated regime
    const double coarse = drift_at(3.2e-2, 1);
    const double fine = drift_at(1.6e-2, 1);
    CHECK(coarse > 1e-10);
    CHECK(std::log2(coarse / fine) >= 3.5);
}

TEST_CASE("time reversal returns the initial state") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const NlwSolver solver(ctx);
    const StatePair init = profile_draw(n_max, 0.4, 9);
    SolveOptions opts;
    opts.t_end = 1.5;
    opts.dt = 1e-3;
    const Trajectory fwd = solver.solve(init, nullptr, opts);
    StatePair flipped = fwd.snaps.back();
    for (double& v : flipped.vel.coeffs) v = -v;
    const Trajectory back = solver.solve(flipped, nullptr, opts);
    const StatePair& ret = back.snaps.back();
    double worst = 0.0;
    for (size_t i = 0; i < init.pos.coeffs.size(); ++i) {
        worst = std::max(worst, std::abs(ret.pos.coeffs[i] - init.pos.coeffs[i]));
        worst = std::max(worst, std::abs(-ret.vel.coeffs[i] - init.vel.coeffs[i]));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("snapshots satisfy the integral equation") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const NlwSolver solver(ctx);
    const StatePair init = profile_draw(n_max, 0.4, 11);
    SolveOptions opts;
    opts.t_end = 0.5;
    opts.dt = 1e-3;
    const Trajectory traj = solver.solve(init, nullptr, opts);
    CHECK(duhamel_residual(ctx, traj, nullptr, 0.5) < 1e-5);
}

TEST_CASE("energy values on single modes") {
    SphereContext ctx(2, 4);
    StatePair zero(2);
    CHECK(energy_E(zero, ctx.plan) == 0.0);

    StatePair pos_mode(2);
    pos_mode.pos.at(1, 1) = 1.0;
    const double e2 = 1.0 + 0.5 / kVol; // int v (1-lap) v + 1/2 int v^4
    CHECK(energy_E(pos_mode, ctx.plan) == doctest::Approx(std::sqrt(e2)).epsilon(1e-12));

    StatePair vel_mode(2);
    vel_mode.vel.at(1, 1) = 1.0;
    CHECK(energy_E(vel_mode, ctx.plan) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("energy dominates H1 and L4 norms along a trajectory") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const NlwSolver solver(ctx);
    const StatePair g_data = profile_draw(n_max, 0.6, 13);
    SolveOptions opts;
    opts.t_end = 2.0;
    opts.dt = 2e-3;
    const StatePair zero(n_max);
    const Trajectory traj = solver.solve(zero, &g_data, opts);
    for (size_t i = 50; i < traj.snaps.size(); i += 200) {
        const double e = energy_E(traj.snaps[i], ctx.plan);
        CHECK(sobolev_norm(traj.snaps[i].pos, 1.0) <= e * (1.0 + 1e-12));
        const double l4 = lp_norm(ctx.plan.synthesize(traj.snaps[i].pos), 4.0, ctx.grid);
        CHECK(l4 * l4 <= std::sqrt(2.0) * e * (1.0 + 1e-12));
    }
}

TEST_CASE("blow-up detection truncates the trajectory") {
    SphereContext ctx(2, 4);
    const NlwSolver solver(ctx);
    StatePair huge(2);
    huge.pos.at(1, 1) = 1e8;
    SolveOptions opts;
    opts.t_end = 2.0;
    opts.dt = 0.05;
    opts.blowup_threshold = 1e10;
    const Trajectory traj = solver.solve(huge, nullptr, opts);
    CHECK(traj.blowup.blew_up);
    CHECK(traj.snaps.size() < 42);
    CHECK(traj.blowup.last_valid_time < 2.0);
}

TEST_CASE("picard iterates") {
    const int n_max = 2;
    SphereContext ctx(n_max, 4);
    // zero data and zero forcing: all iterates vanish
    const StatePair zero(n_max);
    const PicardResult trivial = picard_local(ctx, nullptr, zero, 0.0, 0.1, 4);
    CHECK(trivial.hypothesis_ok);
    for (double d : trivial.distances) CHECK(d == 0.0);

    // small constant-mode data contracts and matches the oscillator
    StatePair small(n_max);
    small.pos.at(1, 1) = 0.1;
    const PicardResult pr = picard_local(ctx, nullptr, small, 0.0, 0.12, 9);
    CHECK(pr.hypothesis_ok);
    CHECK(pr.t1 > 0.0);
    REQUIRE(pr.distances.size() >= 3);
    bool monotone = true;
    double worst_factor = 0.0;
    for (size_t i = 1; i < pr.factors.size(); ++i) {
        if (pr.distances[i] < 1e-12) break;
        worst_factor = std::max(worst_factor, pr.factors[i]);
        if (i >= 2 && pr.factors[i] > pr.factors[i - 1] * 1.02) monotone = false;
    }
    CHECK(worst_factor < 1.0);
    CHECK(monotone);

    // against the oscillator oracle at the window edge
    double y = 0.1, v = 0.0;
    duffing_rk4(y, v, pr.t1, 1e-5);
    CHECK(pr.final_iterate.back().pos.at(1, 1) == doctest::Approx(y).epsilon(1e-6));

    // hypothesis failure reports instead of iterating
    const PicardResult bad = picard_local(ctx, nullptr, small, 0.0, 1e-4, 3);
    CHECK_FALSE(bad.hypothesis_ok);
    CHECK(bad.distances.empty());
}

TEST_CASE("gronwall envelope basics") {
    const int n_max = 3;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    StatePair zero(n_max);
    CHECK(gronwall_envelope_case1(ctx, zero, 1.0, 1.0, 1.0) == 0.0);
    const StatePair g = profile_draw(n_max, 0.4, 17);
    double prev = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        const double env = gronwall_envelope_case1(ctx, g, t, 1.0, 1.0);
        CHECK(env >= prev);
        prev = env;
    }
}

TEST_CASE("globalization budget") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const GlobalizationBudget budget = GlobalizationBudget::make(0.5, 2.0, 2, 1.0);
    CHECK(budget.p == doctest::Approx(12.0));
    CHECK(budget.energy_ceiling() == doctest::Approx(std::exp(2.0)));
    const BudgetEvaluator evaluator(ctx, budget);

    const StatePair zero(n_max);
    const BudgetReport zr = evaluator.check(zero);
    CHECK(zr.f);
    CHECK(zr.g);
    CHECK(zr.h);
    CHECK(zr.i);
    CHECK(zr.j);

    // cranked-up data break the cubic set first (its threshold scales cubically)
    const StatePair big = profile_draw(n_max, 60.0, 19);
    const BudgetReport br = evaluator.check(big);
    CHECK_FALSE(br.f);
    CHECK(br.f_value / budget.cubic_threshold() > br.g_value / budget.per_set_threshold());

    CHECK_THROWS_AS(GlobalizationBudget::make(0.0, 2.0, 2, 1.0), std::invalid_argument);
}

TEST_CASE("uniqueness energy between discretizations") {
    const int n_max = 4;
    SphereContext ctx(n_max, 4 * (n_max - 1));
    const NlwSolver solver(ctx);
    const StatePair init = profile_draw(n_max, 0.3, 23);
    SolveOptions opts;
    opts.t_end = 2.0;
    opts.dt = 2e-3;
    const Trajectory a = solver.solve(init, nullptr, opts);
    opts.dt = 1e-3;
    const Trajectory b = solver.solve(init, nullptr, opts);

    const std::vector<double> times = {0.3, 0.9, 1.5, 1.99};
    const std::vector<double> h = uniqueness_energy(a, b, times);
    for (double v : h) CHECK(v < 1e-6);

    const std::vector<double> same = uniqueness_energy(a, a, times);
    for (double v : same) CHECK(v == 0.0);

    // a perturbation of the data moves H(0) linearly
    StatePair shifted = init;
    shifted.pos.at(1, 1) += 1e-3;
    Trajectory c = a;
    c.snaps[0] = shifted;
    const std::vector<double> h0 = uniqueness_energy(a, c, {0.0});
    CHECK(h0[0] == doctest::Approx(1e-3).epsilon(1e-10));
}

TEST_CASE("solver rejects unusable setups") {
    SphereContext coarse(4, 2 * 3); // not dealiased for cubes
    const NlwSolver solver(coarse);
    const StatePair init(4);
    SolveOptions opts;
    opts.t_end = 0.1;
    CHECK_THROWS_AS(solver.solve(init, nullptr, opts), resolution_error);
    SolveOptions bad;
    bad.dt = -1.0;
    SphereContext fine(4, 12);
    const NlwSolver solver2(fine);
    CHECK_THROWS_AS(solver2.solve(init, nullptr, bad), std::invalid_argument);
}
