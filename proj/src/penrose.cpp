#include "pnlw/penrose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnlw/errors.hpp"
#include "pnlw/quadrature.hpp"
#include "pnlw/stats.hpp"

namespace pnlw {

namespace {
constexpr double kPi = 3.14159265358979323846;

double omega0(double r) { return 2.0 / (1.0 + r * r); }

// evaluate a field's S^2 slice at polar angle chi through the shared plan
void field_s2_slice(const SphereContext& ctx, const SphereField& f, double chi,
                    std::vector<double>& rad_c, std::vector<double>& rad_s,
                    std::vector<double>& out_s2) {
    ctx.tables.radial_slice(f, chi, rad_c, rad_s);
    const size_t n_plm = static_cast<size_t>(ctx.tables.n_max()) * (ctx.tables.n_max() + 1) / 2;
    rad_c.resize(n_plm, 0.0);
    rad_s.resize(n_plm, 0.0);
    out_s2.resize(ctx.grid.n_s2());
    ctx.plan.synthesize_s2_slice(rad_c.data(), rad_s.data(), out_s2.data());
}

double s2_weight(const SphereGrid& grid, size_t s2) {
    return grid.theta_w[s2 / grid.n_phi] * grid.phi_w;
}

} // namespace

ChartPoint chart_forward(double t, double r) {
    if (r < 0.0) throw std::invalid_argument("chart_forward: r must be >= 0");
    ChartPoint p;
    const double a = t + r, b = t - r;
    p.T = std::atan(a) + std::atan(b);
    p.R = std::atan(a) - std::atan(b);
    p.omega = 2.0 / std::sqrt((1.0 + a * a) * (1.0 + b * b));
    return p;
}

TRPoint chart_inverse(double T, double R) {
    const double omega = std::cos(T) + std::cos(R);
    if (omega <= 0.0) throw out_of_image_error("chart_inverse: cos T + cos R <= 0");
    return {std::sin(T) / omega, std::sin(R) / omega};
}

EuclideanRadialGrid EuclideanRadialGrid::make(int m) {
    if (m < 1) throw std::invalid_argument("EuclideanRadialGrid: size must be >= 1");
    EuclideanRadialGrid g;
    const Rule1D rule = chebyshev2(m);
    g.R_nodes.resize(rule.size());
    g.r_nodes.resize(rule.size());
    g.w_sphere = rule.weights;
    for (size_t i = 0; i < rule.size(); ++i) {
        g.R_nodes[i] = std::acos(rule.nodes[i]);
        g.r_nodes[i] = std::tan(0.5 * g.R_nodes[i]);
    }
    return g;
}

EuclideanPair pt0_inverse(const StatePair& state, const SphereContext& ctx,
                          const EuclideanRadialGrid& egrid) {
    EuclideanPair pair;
    pair.m_r = egrid.size();
    pair.n_s2 = ctx.grid.n_s2();
    pair.g0.resize(pair.m_r * pair.n_s2);
    pair.g1.resize(pair.m_r * pair.n_s2);
    std::vector<double> rad_c, rad_s, slice;
    for (size_t i = 0; i < egrid.size(); ++i) {
        const double w0 = omega0(egrid.r_nodes[i]);
        field_s2_slice(ctx, state.pos, egrid.R_nodes[i], rad_c, rad_s, slice);
        for (size_t s = 0; s < pair.n_s2; ++s) pair.g0[i * pair.n_s2 + s] = w0 * slice[s];
        field_s2_slice(ctx, state.vel, egrid.R_nodes[i], rad_c, rad_s, slice);
        for (size_t s = 0; s < pair.n_s2; ++s) pair.g1[i * pair.n_s2 + s] = w0 * w0 * slice[s];
    }
    return pair;
}

namespace {

// radial profile rho = W(R) P(R), W = (1+cos R)^j, with first and second
// r-derivatives through R = 2 arctan(r)
struct RadialDerivs {
    double rho, drho, d2rho;
};

RadialDerivs radial_profile_derivs(const SphereContext& ctx, int n, int l, double r, int j) {
    const double R = 2.0 * std::atan(r);
    double p, dp, d2p;
    ctx.tables.chi_profile_derivs(n, l, R, p, dp, d2p);
    const double cR = std::cos(R), sR = std::sin(R);
    const double w = std::pow(1.0 + cR, j);
    const double w1 = -j * std::pow(1.0 + cR, j - 1) * sR;
    const double w2 = j * (j - 1.0) * std::pow(1.0 + cR, std::max(0, j - 2)) * sR * sR -
                      j * std::pow(1.0 + cR, j - 1) * cR;
    const double f0 = w * p;
    const double f1 = w1 * p + w * dp;
    const double f2 = w2 * p + 2.0 * w1 * dp + w * d2p;
    const double om = omega0(r);
    RadialDerivs d;
    d.rho = f0;
    d.drho = om * f1;
    d.d2rho = om * om * (f2 - r * f1);
    return d;
}

double operator_coefficient_b(RadialOperator kind, double a) {
    return kind == RadialOperator::h0 ? a : 3.0 * a;
}

double operator_coefficient_c(RadialOperator kind, double r) {
    return kind == RadialOperator::h0 ? 0.5 * (3.0 + r * r) : 3.0 * (1.0 + r * r);
}

// per-(l,m) radial coefficients of the field (or the operator applied to it)
// at one radius
void modal_radial_slice(const SphereContext& ctx, const SphereField& u, RadialOperator kind,
                        double r, bool apply_operator, std::vector<double>& rad_c,
                        std::vector<double>& rad_s) {
    const int L = ctx.tables.n_max();
    const size_t n_plm = static_cast<size_t>(L) * (L + 1) / 2;
    rad_c.assign(n_plm, 0.0);
    rad_s.assign(n_plm, 0.0);
    const int jw = kind == RadialOperator::h0 ? 1 : 2;
    const double a = 0.5 * (1.0 + r * r);
    for (int l = 0; l < u.n_max; ++l) {
        for (int n = l + 1; n <= u.n_max; ++n) {
            // radial factor shared by all m of this (n, l)
            double radial;
            if (apply_operator) {
                const RadialDerivs d = radial_profile_derivs(ctx, n, l, r, jw);
                const double lap =
                    d.d2rho + 2.0 * d.drho / r - l * (l + 1.0) * d.rho / (r * r);
                radial = a * a * lap + operator_coefficient_b(kind, a) * r * d.drho +
                         operator_coefficient_c(kind, r) * d.rho;
            } else {
                const double R = 2.0 * std::atan(r);
                radial = std::pow(1.0 + std::cos(R), jw) * ctx.tables.chi_profile(n, l, R);
            }
            for (int m = -l; m <= l; ++m) {
                const double c = u.at(n, lm_to_k(l, m));
                if (c == 0.0) continue;
                (m >= 0 ? rad_c : rad_s)[static_cast<size_t>(plm_index(l, std::abs(m)))] +=
                    c * radial;
            }
        }
    }
    // W = (1+cos R)^j equals Omega0^j up to the identity 1+cos(2 arctan r) = 2/(1+r^2)
}

std::vector<double> field_values_impl(const SphereContext& ctx, const SphereField& u,
                                      RadialOperator kind, const EuclideanRadialGrid& egrid,
                                      bool apply_operator) {
    std::vector<double> out(egrid.size() * ctx.grid.n_s2());
    std::vector<double> rad_c, rad_s, slice(ctx.grid.n_s2());
    for (size_t i = 0; i < egrid.size(); ++i) {
        modal_radial_slice(ctx, u, kind, egrid.r_nodes[i], apply_operator, rad_c, rad_s);
        ctx.plan.synthesize_s2_slice(rad_c.data(), rad_s.data(), slice.data());
        std::copy(slice.begin(), slice.end(), out.begin() + i * ctx.grid.n_s2());
    }
    return out;
}

} // namespace

std::vector<double> euclid_field_values(const SphereContext& ctx, const SphereField& u,
                                        RadialOperator kind, const EuclideanRadialGrid& egrid) {
    return field_values_impl(ctx, u, kind, egrid, false);
}

std::vector<double> apply_radial_operator(const SphereContext& ctx, const SphereField& u,
                                          RadialOperator kind,
                                          const EuclideanRadialGrid& egrid) {
    return field_values_impl(ctx, u, kind, egrid, true);
}

double h_eigen_residual(const SphereContext& ctx, int n, int k, RadialOperator kind,
                        const EuclideanRadialGrid& egrid) {
    SphereField u(n);
    u.at(n, k) = 1.0;
    const std::vector<double> hg = apply_radial_operator(ctx, u, kind, egrid);
    const std::vector<double> g = euclid_field_values(ctx, u, kind, egrid);
    const double ev = 1.0 - static_cast<double>(n) * n;
    // weighted L^2 matching the kind: weight exponent 1/2 for h0, -1/2 for h1
    const double wexp = kind == RadialOperator::h0 ? 0.5 : -0.5;
    double acc = 0.0;
    const size_t n_s2 = ctx.grid.n_s2();
    for (size_t i = 0; i < egrid.size(); ++i) {
        const double wr = std::pow(omega0(egrid.r_nodes[i]), 2.0 * wexp) * egrid.r2dr_weight(i);
        double acc_s = 0.0;
        for (size_t s = 0; s < n_s2; ++s) {
            const double res = hg[i * n_s2 + s] - ev * g[i * n_s2 + s];
            acc_s += s2_weight(ctx.grid, s) * res * res;
        }
        acc += wr * acc_s;
    }
    return std::sqrt(acc);
}

double euclid_weighted_norm(const SphereContext& ctx, const SphereField& u,
                            RadialOperator kind, double weight_exponent, double s,
                            const EuclideanRadialGrid& egrid) {
    SphereField us = u;
    for (int n = 1; n <= u.n_max; ++n) {
        const double mult = std::pow(static_cast<double>(n), s);
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) us.coeffs[static_cast<size_t>(base + k)] *= mult;
    }
    const std::vector<double> g = euclid_field_values(ctx, us, kind, egrid);
    double acc = 0.0;
    const size_t n_s2 = ctx.grid.n_s2();
    for (size_t i = 0; i < egrid.size(); ++i) {
        const double wr =
            std::pow(omega0(egrid.r_nodes[i]), 2.0 * weight_exponent) * egrid.r2dr_weight(i);
        double acc_s = 0.0;
        for (size_t s2 = 0; s2 < n_s2; ++s2) {
            const double v = g[i * n_s2 + s2];
            acc_s += s2_weight(ctx.grid, s2) * v * v;
        }
        acc += wr * acc_s;
    }
    return std::sqrt(acc);
}

LqTransferResult lq_transfer(const SphereContext& ctx, const Trajectory& w, double q,
                             const LqTransferOptions& opts) {
    if (q < 4.0)
        throw std::invalid_argument("lq_transfer: q must be >= 4 (Omega^{q-4} unbounded)");
    LqTransferResult result;
    std::vector<double> rad_c, rad_s, slice;
    const size_t n_s2 = ctx.grid.n_s2();

    // sphere side: int over Omega > 0 of |Omega w|^q Omega^{-4} sin^2 R
    {
        const Rule1D r_rule = chebyshev2(opts.r_rule);
        double acc = 0.0;
        for (size_t ir = 0; ir < r_rule.size(); ++ir) {
            const double R = std::acos(r_rule.nodes[ir]);
            const double half_len = kPi - R;
            const int panels =
                std::max(2, static_cast<int>(std::ceil(half_len * 2.0 * opts.t_panels_per_unit)));
            const Rule1D t_rule = gauss_legendre_panels(opts.gl_order, -half_len, half_len, panels);
            double acc_t = 0.0;
            for (size_t it = 0; it < t_rule.size(); ++it) {
                const double T = t_rule.nodes[it];
                const double omega = std::cos(T) + std::cos(R);
                if (omega <= 0.0) continue;
                field_s2_slice(ctx, w.state_at(T).pos, R, rad_c, rad_s, slice);
                double acc_s = 0.0;
                for (size_t s = 0; s < n_s2; ++s)
                    acc_s += s2_weight(ctx.grid, s) * std::pow(std::abs(slice[s]), q);
                acc_t += t_rule.weights[it] * std::pow(omega, q - 4.0) * acc_s;
            }
            acc += r_rule.weights[ir] * acc_t; // sin^2 R dR weights
        }
        result.sphere = acc;
    }

    // euclidean side: int |Omega w(T(t,r), R(t,r))|^q r^2 dr dt in the
    // light-cone frame u = arctan(t+r), v = arctan(t-r): the measure
    // r^2 dr dt becomes 2^{-3} sin^2(u-v) (cos u cos v)^{-4} du dv and the
    // integrand 2^{q-3} |w|^q sin^2(u-v) (cos u cos v)^{q-4}, smooth on the
    // triangle v < u
    {
        const Rule1D u_rule =
            gauss_legendre_panels(opts.gl_order, -0.5 * kPi, 0.5 * kPi, opts.euclid_panels);
        double acc = 0.0;
        for (size_t iu = 0; iu < u_rule.size(); ++iu) {
            const double uu = u_rule.nodes[iu];
            const int v_panels =
                std::max(2, static_cast<int>(std::ceil((uu + 0.5 * kPi) / kPi * opts.euclid_panels)));
            const Rule1D v_rule = gauss_legendre_panels(opts.gl_order, -0.5 * kPi, uu, v_panels);
            double acc_v = 0.0;
            for (size_t iv = 0; iv < v_rule.size(); ++iv) {
                const double vv = v_rule.nodes[iv];
                const double T = uu + vv, R = uu - vv;
                const double sin_uv = std::sin(R);
                const double cos_prod = std::cos(uu) * std::cos(vv);
                field_s2_slice(ctx, w.state_at(T).pos, R, rad_c, rad_s, slice);
                double acc_s = 0.0;
                for (size_t s = 0; s < n_s2; ++s)
                    acc_s += s2_weight(ctx.grid, s) * std::pow(std::abs(slice[s]), q);
                acc_v += v_rule.weights[iv] * acc_s * sin_uv * sin_uv *
                         std::pow(cos_prod, q - 4.0);
            }
            acc += u_rule.weights[iu] * acc_v;
        }
        result.euclid = acc * std::pow(2.0, q - 3.0);
    }
    return result;
}

ScatteringFit scattering_decay(const SphereContext& ctx, const Trajectory& u,
                               const Trajectory& lin, double q,
                               const std::vector<double>& t_list, int radial_panels,
                               int gl_order) {
    if (q <= 18.0 / 5.0 || q > 6.0)
        throw std::invalid_argument("scattering_decay: q must lie in (18/5, 6]");
    if (u.n_max != lin.n_max)
        throw std::invalid_argument("scattering_decay: trajectories disagree on n_max");
    ScatteringFit fit;

    // leave-one-out interpolation error of u, measured against the size of
    // the difference field at half-step times (where interpolation actually
    // gets used)
    {
        double worst = 0.0, scale = 0.0;
        const size_t count = u.snaps.size();
        for (size_t frac = 1; frac <= 4; ++frac) {
            const size_t i = std::min(count - 2, std::max<size_t>(1, frac * count / 5));
            if (i + 1 >= count) continue;
            Trajectory skip;
            skip.t0 = u.t_at(i - 1);
            skip.dt = 2.0 * u.dt;
            skip.n_max = u.n_max;
            skip.snaps = {u.snaps[i - 1], u.snaps[i + 1]};
            const StatePair interp = skip.state_at(u.t_at(i));
            const double t_mid = u.t_at(i) + 0.5 * u.dt;
            const StatePair um = u.state_at(t_mid);
            const StatePair lm = lin.state_at(t_mid);
            double err = 0.0, sz = 0.0;
            for (size_t m = 0; m < interp.pos.coeffs.size(); ++m) {
                const double d = interp.pos.coeffs[m] - u.snaps[i].pos.coeffs[m];
                err += d * d;
                const double dl = um.pos.coeffs[m] - lm.pos.coeffs[m];
                sz += dl * dl;
            }
            // the doubled-interval interpolant overestimates the true error
            // by roughly 2^4
            worst = std::max(worst, std::sqrt(err) / 16.0);
            scale = std::max(scale, std::sqrt(sz));
        }
        double field_scale = 0.0;
        for (size_t i = 0; i < count; i += std::max<size_t>(1, count / 8))
            field_scale = std::max(field_scale, u.snaps[i].pos.l2_norm());
        if (worst <= 1e-10 * std::max(field_scale, 1e-300)) {
            fit.interp_error_estimate = 0.0; // interpolation exact at measurement precision
        } else if (scale == 0.0) {
            fit.interp_error_estimate = 1.0; // nonzero interp error, vanishing difference
        } else {
            fit.interp_error_estimate = worst / scale;
        }
        if (fit.interp_error_estimate > 1e-4)
            throw resolution_error("scattering_decay: interpolation error above 1e-4, refine dt");
    }

    std::vector<double> rad_c, rad_s, slice;
    const size_t n_s2 = ctx.grid.n_s2();
    for (double t : t_list) {
        // radial integral in v = arctan(t - r); the light-cone ridge at
        // r = t sits at v = 0 with O(1) width in this variable
        const Rule1D v_rule =
            gauss_legendre_panels(gl_order, -0.5 * kPi, std::atan(t), radial_panels);
        double acc = 0.0;
        for (size_t iv = 0; iv < v_rule.size(); ++iv) {
            const double vv = v_rule.nodes[iv];
            const double r = t - std::tan(vv);
            const ChartPoint cp = chart_forward(t, r);
            const StatePair su = u.state_at(cp.T);
            const StatePair sl = lin.state_at(cp.T);
            SphereField diff = su.pos;
            for (size_t m = 0; m < diff.coeffs.size(); ++m) diff.coeffs[m] -= sl.pos.coeffs[m];
            field_s2_slice(ctx, diff, cp.R, rad_c, rad_s, slice);
            const double sec2 = 1.0 + std::tan(vv) * std::tan(vv);
            const double jac_r = r * r * sec2 * v_rule.weights[iv];
            double acc_s = 0.0;
            for (size_t s = 0; s < n_s2; ++s)
                acc_s += s2_weight(ctx.grid, s) * std::pow(std::abs(cp.omega * slice[s]), q);
            acc += jac_r * acc_s;
        }
        fit.t_values.push_back(t);
        fit.norms.push_back(std::pow(acc, 1.0 / q));
    }

    double max_norm = 0.0;
    for (double v : fit.norms) max_norm = std::max(max_norm, v);
    if (max_norm > 1e-14 && fit.norms.size() >= 3) {
        std::vector<double> x, y;
        for (size_t i = 0; i < fit.norms.size(); ++i) {
            if (fit.norms[i] <= 0.0) continue;
            x.push_back(std::log(fit.t_values[i]));
            y.push_back(std::log(fit.norms[i]));
        }
        if (x.size() >= 3) {
            const LineFit lf = fit_line(x, y);
            fit.beta = -lf.slope;
            fit.beta_stderr = lf.slope_stderr;
            fit.fit_valid = true;
        }
    }
    return fit;
}

} // namespace pnlw
