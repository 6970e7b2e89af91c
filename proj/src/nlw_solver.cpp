#include "pnlw/nlw_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pnlw/csv.hpp"
#include "pnlw/errors.hpp"

namespace pnlw {

namespace {

bool finite_state(const StatePair& y, double threshold) {
    for (double c : y.pos.coeffs)
        if (!std::isfinite(c) || std::abs(c) > threshold) return false;
    for (double c : y.vel.coeffs)
        if (!std::isfinite(c) || std::abs(c) > threshold) return false;
    return true;
}

struct RotationTabs {
    std::vector<double> c, s_over_n, ns; // cos(nh), sin(nh)/n, n sin(nh)
    explicit RotationTabs(int n_max, double h) : c(n_max), s_over_n(n_max), ns(n_max) {
        for (int n = 1; n <= n_max; ++n) {
            c[n - 1] = std::cos(n * h);
            const double s = std::sin(n * h);
            s_over_n[n - 1] = s / n;
            ns[n - 1] = n * s;
        }
    }
};

StatePair rotate_state(const StatePair& y, const RotationTabs& t) {
    StatePair out(y.n_max());
    for (int n = 1; n <= y.n_max(); ++n) {
        const double c = t.c[n - 1], so = t.s_over_n[n - 1], ns = t.ns[n - 1];
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) {
            const double p = y.pos.coeffs[static_cast<size_t>(base + k)];
            const double v = y.vel.coeffs[static_cast<size_t>(base + k)];
            out.pos.coeffs[static_cast<size_t>(base + k)] = c * p + so * v;
            out.vel.coeffs[static_cast<size_t>(base + k)] = -ns * p + c * v;
        }
    }
    return out;
}

// target += coef * E_h (0, w) for an impulse pair
void add_rotated_impulse(StatePair& target, const SphereField& w, const RotationTabs& t,
                         double coef) {
    for (int n = 1; n <= target.n_max(); ++n) {
        const double c = t.c[n - 1], so = t.s_over_n[n - 1];
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) {
            const double wv = w.coeffs[static_cast<size_t>(base + k)];
            target.pos.coeffs[static_cast<size_t>(base + k)] += coef * so * wv;
            target.vel.coeffs[static_cast<size_t>(base + k)] += coef * c * wv;
        }
    }
}

void add_impulse(StatePair& target, const SphereField& w, double coef) {
    for (size_t i = 0; i < w.coeffs.size(); ++i) target.vel.coeffs[i] += coef * w.coeffs[i];
}

// w = -(analyze((synth(pos) + g)^3))
SphereField neg_cube(const SphereContext& ctx, const SphereField& pos, const GridValues* g) {
    GridValues val = ctx.plan.synthesize_unchecked(pos);
    if (g)
        for (size_t i = 0; i < val.v.size(); ++i) val.v[i] += g->v[i];
    for (double& x : val.v) x = x * x * x;
    SphereField c = ctx.plan.analyze(val, pos.n_max);
    for (double& x : c.coeffs) x = -x;
    return c;
}

// cumulative integral of samples on a uniform signed grid, O(step^4) locally
std::vector<double> cumulative_integral(const std::vector<double>& f, double step) {
    const size_t m = f.size();
    std::vector<double> out(m, 0.0);
    if (m < 2) return out;
    if (m == 2) {
        out[1] = 0.5 * step * (f[0] + f[1]);
        return out;
    }
    out[1] = step * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0;
    for (size_t i = 2; i < m; ++i)
        out[i] = out[i - 1] + step * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]) / 12.0;
    return out;
}

} // namespace

bool Trajectory::covers(double T) const {
    if (snaps.size() < 2) return false;
    const double lo = std::min(t0, t_end()), hi = std::max(t0, t_end());
    return T >= lo - 1e-12 && T <= hi + 1e-12;
}

StatePair Trajectory::state_at(double T) const {
    if (snaps.empty()) throw std::runtime_error("Trajectory::state_at: empty trajectory");
    if (snaps.size() == 1) return snaps[0];
    if (!covers(T)) throw std::invalid_argument("Trajectory::state_at: time outside trajectory");
    double fi = (T - t0) / dt;
    size_t i = static_cast<size_t>(std::max(0.0, std::floor(fi)));
    i = std::min(i, snaps.size() - 2);
    const double tau = std::clamp((T - t_at(i)) / dt, 0.0, 1.0);
    const double t2 = tau * tau, t3 = t2 * tau;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tau;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double d00 = (6 * t2 - 6 * tau) / dt, d10 = 3 * t2 - 4 * tau + 1;
    const double d01 = (-6 * t2 + 6 * tau) / dt, d11 = 3 * t2 - 2 * tau;
    const StatePair& a = snaps[i];
    const StatePair& b = snaps[i + 1];
    StatePair out(n_max);
    for (size_t m = 0; m < out.pos.coeffs.size(); ++m) {
        out.pos.coeffs[m] = h00 * a.pos.coeffs[m] + h10 * dt * a.vel.coeffs[m] +
                            h01 * b.pos.coeffs[m] + h11 * dt * b.vel.coeffs[m];
        out.vel.coeffs[m] = d00 * a.pos.coeffs[m] + d10 * a.vel.coeffs[m] +
                            d01 * b.pos.coeffs[m] + d11 * b.vel.coeffs[m];
    }
    return out;
}

NlwSolver::NlwSolver(const SphereContext& ctx) : ctx_(&ctx) {}

Trajectory NlwSolver::solve(const StatePair& initial, const StatePair* forcing_data,
                            const SolveOptions& opts) const {
    const int n_max = initial.n_max();
    if (n_max > ctx_->tables.n_max())
        throw std::invalid_argument("solve: state exceeds context n_max");
    if (opts.cubic_on && ctx_->grid.exactness_degree < 4 * (n_max - 1))
        throw resolution_error("solve: grid not dealiased for cubic products");
    if (opts.dt <= 0.0) throw std::invalid_argument("solve: dt must be positive");
    const double span = opts.t_end - opts.t_begin;
    const long n_steps = std::max(1L, std::lround(std::abs(span) / opts.dt));
    const double h = span / static_cast<double>(n_steps);

    Trajectory traj;
    traj.mode = forcing_data ? SolveMode::perturbation : SolveMode::full;
    traj.t0 = opts.t_begin;
    traj.dt = h;
    traj.n_max = n_max;
    traj.snaps.reserve(static_cast<size_t>(n_steps) + 1);
    traj.snaps.push_back(initial);

    const RotationTabs half(n_max, h / 2.0), full(n_max, h);
    StatePair y = initial;

    GridValues g_t, g_half, g_full;
    const bool forced = forcing_data != nullptr;
    if (forced) g_t = ctx_->plan.synthesize(evolve_linear(*forcing_data, opts.t_begin).pos);

    for (long step = 0; step < n_steps; ++step) {
        const double t = opts.t_begin + h * static_cast<double>(step);
        if (forced) {
            g_half = ctx_->plan.synthesize(evolve_linear(*forcing_data, t + h / 2.0).pos);
            g_full = ctx_->plan.synthesize(evolve_linear(*forcing_data, t + h).pos);
        }
        StatePair y_next = rotate_state(y, full);
        if (opts.cubic_on) {
            const SphereField k1 = neg_cube(*ctx_, y.pos, forced ? &g_t : nullptr);
            StatePair eh2_y = rotate_state(y, half);

            StatePair a2 = eh2_y;
            {
                StatePair yk = y;
                add_impulse(yk, k1, h / 2.0);
                a2 = rotate_state(yk, half);
            }
            const SphereField k2 = neg_cube(*ctx_, a2.pos, forced ? &g_half : nullptr);

            StatePair a3 = eh2_y;
            add_impulse(a3, k2, h / 2.0);
            const SphereField k3 = neg_cube(*ctx_, a3.pos, forced ? &g_half : nullptr);

            StatePair a4 = rotate_state(y, full);
            add_rotated_impulse(a4, k3, half, h);
            const SphereField k4 = neg_cube(*ctx_, a4.pos, forced ? &g_full : nullptr);

            add_rotated_impulse(y_next, k1, full, h / 6.0);
            SphereField k23 = k2;
            for (size_t m = 0; m < k23.coeffs.size(); ++m) k23.coeffs[m] += k3.coeffs[m];
            add_rotated_impulse(y_next, k23, half, h / 3.0);
            add_impulse(y_next, k4, h / 6.0);
        }
        y = std::move(y_next);
        if (!finite_state(y, opts.blowup_threshold)) {
            traj.blowup.blew_up = true;
            traj.blowup.last_valid_time = t;
            break;
        }
        traj.snaps.push_back(y);
        if (forced) g_t = g_full;
    }
    return traj;
}

double quartic_integral(const TransformPlan& plan, const SphereField& pos) {
    const GridValues v = plan.synthesize_unchecked(pos);
    const SphereGrid& grid = plan.grid();
    double acc = 0.0;
    size_t idx = 0;
    for (int i = 0; i < grid.m_chi(); ++i) {
        double acc_chi = 0.0;
        for (int t = 0; t < grid.m_theta(); ++t) {
            double acc_theta = 0.0;
            for (int j = 0; j < grid.n_phi; ++j, ++idx) {
                const double u2 = v.v[idx] * v.v[idx];
                acc_theta += u2 * u2;
            }
            acc_chi += grid.theta_w[t] * acc_theta;
        }
        acc += grid.chi_w[i] * acc_chi;
    }
    return acc * grid.phi_w;
}

double hamiltonian(const StatePair& state, const TransformPlan& plan) {
    double kin = 0.0;
    for (double c : state.vel.coeffs) kin += c * c;
    double pot = 0.0;
    for (int n = 1; n <= state.n_max(); ++n) {
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) {
            const double c = state.pos.coeffs[static_cast<size_t>(base + k)];
            pot += static_cast<double>(n) * n * c * c;
        }
    }
    return 0.5 * kin + 0.5 * pot + 0.25 * quartic_integral(plan, state.pos);
}

double energy_E(const StatePair& state, const TransformPlan& plan) {
    double kin = 0.0;
    for (double c : state.vel.coeffs) kin += c * c;
    double pot = 0.0;
    for (int n = 1; n <= state.n_max(); ++n) {
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) {
            const double c = state.pos.coeffs[static_cast<size_t>(base + k)];
            pot += static_cast<double>(n) * n * c * c;
        }
    }
    return std::sqrt(kin + pot + 0.5 * quartic_integral(plan, state.pos));
}

PicardResult picard_local(const SphereContext& ctx, const StatePair* forcing_data,
                          const StatePair& data, double T0, double lambda, int n_iter,
                          double contraction_c, int grid_per_side) {
    PicardResult result;
    result.lambda = lambda;
    const int n_max = std::max(data.n_max(), forcing_data ? forcing_data->n_max() : 1);

    // hypothesis: ||(1+|T|^{2/3})^{-1} g||^3 <= Lambda, ||v0||_{H^1} <= Lambda,
    // ||v1||_{L^2} <= Lambda
    double g_cubed = 0.0;
    if (forcing_data) {
        const WeightedNormEvaluator ev(ctx, WeightedNormSpec::for_time_exponent(3.0, 6.0));
        const double nm = ev.eval(*forcing_data);
        g_cubed = nm * nm * nm;
    }
    const double v0_h1 = sobolev_norm(data.pos, 1.0);
    const double v1_l2 = data.vel.l2_norm();
    std::ostringstream report;
    report << "g_cubed=" << g_cubed << " v0_h1=" << v0_h1 << " v1_l2=" << v1_l2
           << " lambda=" << lambda;
    result.hypothesis_report = report.str();
    if (g_cubed > lambda || v0_h1 > lambda || v1_l2 > lambda) {
        result.hypothesis_ok = false;
        return result;
    }

    result.t1 = std::min(1.0, 1.0 / (contraction_c * lambda * lambda *
                                     std::pow(1.0 + T0 * T0, 3.0)));
    const int m = grid_per_side;
    const double step = result.t1 / m;
    const size_t n_times = 2 * static_cast<size_t>(m) + 1;
    result.times.resize(n_times);
    for (size_t i = 0; i < n_times; ++i)
        result.times[i] = T0 + (static_cast<double>(i) - m) * step;

    // free part S(T - T0)(v0, v1) at the grid times
    std::vector<StatePair> free_part(n_times);
    for (size_t i = 0; i < n_times; ++i)
        free_part[i] = evolve_linear(data, result.times[i] - T0);

    // forcing values on the grid
    std::vector<GridValues> g_vals;
    if (forcing_data) {
        g_vals.resize(n_times);
        for (size_t i = 0; i < n_times; ++i)
            g_vals[i] = ctx.plan.synthesize(evolve_linear(*forcing_data, result.times[i]).pos);
    }

    const int n_modes = SphereField::modes_up_to(n_max);
    std::vector<StatePair> v(n_times, StatePair(n_max)), v_next(n_times, StatePair(n_max));
    std::vector<SphereField> cube(n_times, SphereField(n_max));
    std::vector<double> fc(n_times), fs(n_times);

    for (int it = 0; it < n_iter; ++it) {
        for (size_t i = 0; i < n_times; ++i)
            cube[i] = neg_cube(ctx, v[i].pos, forcing_data ? &g_vals[i] : nullptr);
        // v_next(T) = S(T-T0)(v0,v1) + int_{T0}^{T} sin((T-tau) n)/n (neg cube)(tau) dtau
        for (size_t i = 0; i < n_times; ++i) v_next[i] = free_part[i];
        for (int mode = 0; mode < n_modes; ++mode) {
            const int n = [&] {
                int nn = 1;
                while (SphereField::modes_up_to(nn) <= mode) ++nn;
                return nn;
            }();
            // forward side (indices m..2m) and backward side (m..0)
            for (int side = 0; side < 2; ++side) {
                const int count = m + 1;
                const double sgn_step = side == 0 ? step : -step;
                std::vector<double> a(count), b(count);
                for (int j = 0; j < count; ++j) {
                    const size_t idx = side == 0 ? static_cast<size_t>(m + j)
                                                 : static_cast<size_t>(m - j);
                    const double tau = result.times[idx];
                    const double c = cube[idx].coeffs[static_cast<size_t>(mode)];
                    a[j] = std::cos(n * tau) * c;
                    b[j] = std::sin(n * tau) * c;
                }
                const std::vector<double> ia = cumulative_integral(a, sgn_step);
                const std::vector<double> ib = cumulative_integral(b, sgn_step);
                for (int j = 1; j < count; ++j) {
                    const size_t idx = side == 0 ? static_cast<size_t>(m + j)
                                                 : static_cast<size_t>(m - j);
                    const double T = result.times[idx];
                    const double sn = std::sin(n * T), cn = std::cos(n * T);
                    v_next[idx].pos.coeffs[static_cast<size_t>(mode)] +=
                        (sn * ia[j] - cn * ib[j]) / n;
                    v_next[idx].vel.coeffs[static_cast<size_t>(mode)] +=
                        cn * ia[j] + sn * ib[j];
                }
            }
        }
        double dist = 0.0;
        for (size_t i = 0; i < n_times; ++i) {
            SphereField diff = v_next[i].pos;
            for (size_t c = 0; c < diff.coeffs.size(); ++c) diff.coeffs[c] -= v[i].pos.coeffs[c];
            dist = std::max(dist, sobolev_norm(diff, 1.0));
        }
        result.distances.push_back(dist);
        std::swap(v, v_next);
    }
    for (size_t i = 1; i < result.distances.size(); ++i) {
        if (result.distances[i - 1] > 0.0)
            result.factors.push_back(result.distances[i] / result.distances[i - 1]);
        else
            result.factors.push_back(0.0);
    }
    result.contracted = true;
    for (size_t i = 1; i < result.factors.size(); ++i)
        if (result.factors[i] >= 1.0) result.contracted = false;
    if (!result.factors.empty() && result.factors.back() >= 1.0) result.contracted = false;
    result.final_iterate = std::move(v);
    return result;
}

double duhamel_residual(const SphereContext& ctx, const Trajectory& traj,
                        const StatePair* forcing_data, double T) {
    if (!traj.covers(T)) throw std::invalid_argument("duhamel_residual: T outside trajectory");
    // residual = u(T) - S(T - t0)(u(t0)) - int_{t0}^{T} sin((T-tau)n)/n (-(u+g)^3) dtau
    const long i_end = std::lround((T - traj.t0) / traj.dt);
    const size_t count = static_cast<size_t>(std::max(1L, i_end)) + 1;
    const int n_modes = SphereField::modes_up_to(traj.n_max);
    std::vector<SphereField> cube(count, SphereField(traj.n_max));
    GridValues gv;
    for (size_t i = 0; i < count; ++i) {
        const double tau = traj.t_at(i);
        const GridValues* g = nullptr;
        if (forcing_data) {
            gv = ctx.plan.synthesize(evolve_linear(*forcing_data, tau).pos);
            g = &gv;
        }
        cube[i] = neg_cube(ctx, traj.snaps[i].pos, g);
    }
    const StatePair expected_free = evolve_linear(traj.snaps[0], T - traj.t0);
    const StatePair& actual = traj.snaps[static_cast<size_t>(i_end)];
    double worst = 0.0;
    std::vector<double> a(count), b(count);
    for (int mode = 0; mode < n_modes; ++mode) {
        int n = 1;
        while (SphereField::modes_up_to(n) <= mode) ++n;
        for (size_t i = 0; i < count; ++i) {
            const double tau = traj.t_at(i);
            a[i] = std::cos(n * tau) * cube[i].coeffs[static_cast<size_t>(mode)];
            b[i] = std::sin(n * tau) * cube[i].coeffs[static_cast<size_t>(mode)];
        }
        const std::vector<double> ia = cumulative_integral(a, traj.dt);
        const std::vector<double> ib = cumulative_integral(b, traj.dt);
        const double sn = std::sin(n * T), cn = std::cos(n * T);
        const double duhamel = (sn * ia[count - 1] - cn * ib[count - 1]) / n;
        const double res = actual.pos.coeffs[static_cast<size_t>(mode)] -
                           expected_free.pos.coeffs[static_cast<size_t>(mode)] - duhamel;
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

double gronwall_envelope_case1(const SphereContext& ctx, const StatePair& forcing_data,
                               double T, double C, double c) {
    if (T < 0.0) throw std::invalid_argument("gronwall_envelope_case1: T must be >= 0");
    if (T == 0.0) return 0.0;
    const int n_panels = std::max(8, static_cast<int>(std::ceil(4.0 * T)));
    const Rule1D rule = gauss_legendre_panels(6, 0.0, T, n_panels);
    double i1 = 0.0, i2 = 0.0;
    for (size_t i = 0; i < rule.size(); ++i) {
        const GridValues g = ctx.plan.synthesize(evolve_linear(forcing_data, rule.nodes[i]).pos);
        const double l6 = lp_norm(g, 6.0, ctx.grid);
        const double linf = lp_norm(g, std::numeric_limits<double>::infinity(), ctx.grid);
        i1 += rule.weights[i] * l6 * l6 * l6;
        i2 += rule.weights[i] * (l6 * l6 + linf);
    }
    return C * i1 * std::exp(c * i2);
}

GlobalizationBudget GlobalizationBudget::make(double theta, double t0, int split_n,
                                              double c_scale) {
    if (theta <= 0.0 || theta > 1.0)
        throw std::invalid_argument("GlobalizationBudget: theta must lie in (0, 1]");
    GlobalizationBudget b;
    b.theta = theta;
    b.p = 6.0 / theta;
    b.t0 = t0;
    b.split_n = split_n;
    b.c_t0 = c_scale * (1.0 + t0 * t0);
    return b;
}

BudgetEvaluator::BudgetEvaluator(const SphereContext& ctx, const GlobalizationBudget& budget)
    : budget_(budget),
      l3l6_(ctx, WeightedNormSpec::for_time_exponent(3.0, 6.0)),
      l1linf_(ctx, WeightedNormSpec::for_time_exponent(
                       1.0, std::numeric_limits<double>::infinity())),
      lp_(ctx, WeightedNormSpec::for_time_exponent(budget.p, budget.p)) {}

BudgetReport BudgetEvaluator::check(const StatePair& data) const {
    BudgetReport r;
    r.l3l6_norm = l3l6_.eval(data);
    r.low_linf_norm = l1linf_.eval(data, WeightedNormEvaluator::Projection::low_pass,
                                   budget_.split_n);
    r.high_lp_norm = lp_.eval(data, WeightedNormEvaluator::Projection::high_pass,
                              budget_.split_n);
    r.f_value = budget_.c_t0 * r.l3l6_norm * r.l3l6_norm * r.l3l6_norm;
    r.g_value = budget_.c_t0 * r.l3l6_norm * r.l3l6_norm;
    r.h_value = budget_.c_t0 * r.low_linf_norm;
    r.i_value = budget_.c_t0 * r.high_lp_norm;
    r.f = r.f_value <= budget_.cubic_threshold();
    r.g = r.g_value <= budget_.per_set_threshold();
    r.h = r.h_value <= budget_.per_set_threshold();
    r.i = r.i_value <= budget_.per_set_threshold();
    r.j = r.f && r.g && r.h && r.i;
    return r;
}

BudgetReport check_globalization_budget(const SphereContext& ctx, const StatePair& data,
                                        const GlobalizationBudget& budget) {
    return BudgetEvaluator(ctx, budget).check(data);
}

std::vector<double> uniqueness_energy(const Trajectory& a, const Trajectory& b,
                                      const std::vector<double>& times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        const StatePair sa = a.state_at(t);
        const StatePair sb = b.state_at(t);
        double kin = 0.0, pot = 0.0;
        for (size_t m = 0; m < sa.vel.coeffs.size(); ++m) {
            const double dv = sa.vel.coeffs[m] - sb.vel.coeffs[m];
            kin += dv * dv;
        }
        for (int n = 1; n <= sa.n_max(); ++n) {
            const int base = SphereField::flat_index(n, 1);
            for (int k = 0; k < n * n; ++k) {
                const double dp = sa.pos.coeffs[static_cast<size_t>(base + k)] -
                                  sb.pos.coeffs[static_cast<size_t>(base + k)];
                pot += static_cast<double>(n) * n * dp * dp;
            }
        }
        out.push_back(std::sqrt(kin + pot));
    }
    return out;
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
    CsvWriter out(path);
    std::vector<std::string> header{"T"};
    for (int n = 1; n <= traj.n_max; ++n)
        for (int k = 1; k <= n * n; ++k)
            header.push_back("pos_" + std::to_string(n) + "_" + std::to_string(k));
    for (int n = 1; n <= traj.n_max; ++n)
        for (int k = 1; k <= n * n; ++k)
            header.push_back("vel_" + std::to_string(n) + "_" + std::to_string(k));
    out.row(header);
    for (size_t i = 0; i < traj.snaps.size(); ++i) {
        std::vector<std::string> cells{CsvWriter::num(traj.t_at(i))};
        for (double c : traj.snaps[i].pos.coeffs) cells.push_back(CsvWriter::num(c));
        for (double c : traj.snaps[i].vel.coeffs) cells.push_back(CsvWriter::num(c));
        out.row(cells);
    }
}

} // namespace pnlw
