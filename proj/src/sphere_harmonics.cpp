#include "pnlw/sphere_harmonics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pnlw/errors.hpp"

namespace pnlw {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;
} // namespace

double SphereField::l2_norm() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return std::sqrt(s);
}

SphereGrid SphereGrid::for_degree(int degree) {
    if (degree < 0) throw std::invalid_argument("SphereGrid: degree must be >= 0");
    SphereGrid g;
    g.exactness_degree = degree;
    const int m = std::max(1, (degree + 2) / 2); // 2m-1 >= degree
    Rule1D cheb = chebyshev2(m);
    g.chi_x = cheb.nodes;
    g.chi_w = cheb.weights;
    g.chi.resize(m);
    g.chi_sin.resize(m);
    for (int i = 0; i < m; ++i) {
        g.chi[i] = std::acos(cheb.nodes[i]);
        g.chi_sin[i] = std::sin(g.chi[i]);
    }
    Rule1D leg = gauss_legendre(m);
    g.theta_u = leg.nodes;
    g.theta_w = leg.weights;
    g.theta_sin.resize(m);
    for (int i = 0; i < m; ++i) g.theta_sin[i] = std::sqrt(1.0 - leg.nodes[i] * leg.nodes[i]);
    int n_phi = degree + 1;
    if (n_phi % 2) ++n_phi; // antipodal symmetry wants an even count
    g.n_phi = std::max(2, n_phi);
    g.phi_w = 2.0 * kPi / g.n_phi;
    return g;
}

double SphereGrid::total_weight() const {
    double sc = 0.0, st = 0.0;
    for (double w : chi_w) sc += w;
    for (double w : theta_w) st += w;
    return sc * st * phi_w * n_phi;
}

void gegenbauer_all(double alpha, int j_max, double x, double* out) {
    out[0] = 1.0;
    if (j_max >= 1) out[1] = 2.0 * alpha * x;
    for (int j = 2; j <= j_max; ++j)
        out[j] = (2.0 * x * (j + alpha - 1.0) * out[j - 1] - (j + 2.0 * alpha - 2.0) * out[j - 2]) / j;
}

void normalized_legendre_table(int l_max, double u, double* out) {
    const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    out[0] = std::sqrt(1.0 / (4.0 * kPi));
    for (int m = 1; m <= l_max; ++m)
        out[plm_index(m, m)] = s * std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * out[plm_index(m - 1, m - 1)];
    for (int m = 0; m < l_max; ++m)
        out[plm_index(m + 1, m)] = u * std::sqrt(2.0 * m + 3.0) * out[plm_index(m, m)];
    for (int m = 0; m <= l_max; ++m) {
        for (int l = m + 2; l <= l_max; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
            const double b = std::sqrt((2.0 * l + 1.0) / (2.0 * l - 3.0) *
                                       ((l - 1.0) * (l - 1.0) - m * m) /
                                       (static_cast<double>(l) * l - m * m));
            out[plm_index(l, m)] = a * u * out[plm_index(l - 1, m)] - b * out[plm_index(l - 2, m)];
        }
    }
}

BasisTables::BasisTables(int n_max) : n_max_(n_max) {
    if (n_max < 1) throw std::invalid_argument("BasisTables: n_max must be >= 1");
    norm_.assign(static_cast<size_t>(n_max) * (n_max + 1) / 2, 0.0);
    // Normalize by quadrature: the chi-integrand of |profile|^2 has polynomial
    // degree 2(n-1) in cos(chi), so a rule of order n_max is exact.
    Rule1D rule = chebyshev2(n_max);
    std::vector<double> geg(static_cast<size_t>(n_max), 0.0);
    for (int l = 0; l < n_max; ++l) {
        std::vector<double> acc(static_cast<size_t>(n_max - l), 0.0);
        for (size_t i = 0; i < rule.size(); ++i) {
            const double x = rule.nodes[i];
            gegenbauer_all(l + 1.0, n_max - 1 - l, x, geg.data());
            const double sl = std::pow(1.0 - x * x, 0.5 * l);
            for (int j = 0; j <= n_max - 1 - l; ++j) {
                const double p = geg[j] * sl;
                acc[j] += rule.weights[i] * p * p;
            }
        }
        for (int j = 0; j <= n_max - 1 - l; ++j)
            norm_[nl_index(l + 1 + j, l)] = 1.0 / std::sqrt(acc[j]);
    }
}

double BasisTables::chi_profile(int n, int l, double chi) const {
    const int j = n - 1 - l;
    std::vector<double> geg(static_cast<size_t>(j) + 1);
    gegenbauer_all(l + 1.0, j, std::cos(chi), geg.data());
    return normalization(n, l) * geg[j] * std::pow(std::sin(chi), l);
}

void BasisTables::chi_profile_derivs(int n, int l, double chi, double& p, double& dp,
                                     double& d2p) const {
    const int j = n - 1 - l;
    const double x = std::cos(chi), s = std::sin(chi);
    const double alpha = l + 1.0;
    std::vector<double> geg(static_cast<size_t>(j) + 1);
    gegenbauer_all(alpha, j, x, geg.data());
    const double c0 = geg[j];
    double c1 = 0.0, c2 = 0.0;
    if (j >= 1) {
        gegenbauer_all(alpha + 1.0, j - 1, x, geg.data());
        c1 = 2.0 * alpha * geg[j - 1]; // d/dx
    }
    if (j >= 2) {
        gegenbauer_all(alpha + 2.0, j - 2, x, geg.data());
        c2 = 4.0 * alpha * (alpha + 1.0) * geg[j - 2]; // d^2/dx^2
    }
    // u(chi) = C(cos chi):  u' = -s c1,  u'' = -x c1 + s^2 c2
    const double u0 = c0;
    const double u1 = -s * c1;
    const double u2 = -x * c1 + s * s * c2;
    // v(chi) = sin^l chi
    const double v0 = (l == 0) ? 1.0 : std::pow(s, l);
    const double v1 = (l == 0) ? 0.0 : l * x * std::pow(s, l - 1);
    double v2 = 0.0;
    if (l == 1)
        v2 = -s;
    else if (l >= 2)
        v2 = l * (l - 1.0) * x * x * std::pow(s, l - 2) - l * std::pow(s, l);
    const double a = normalization(n, l);
    p = a * u0 * v0;
    dp = a * (u1 * v0 + u0 * v1);
    d2p = a * (u2 * v0 + 2.0 * u1 * v1 + u0 * v2);
}

void BasisTables::radial_slice(const SphereField& f, double chi,
                               std::vector<double>& rad_c, std::vector<double>& rad_s) const {
    const int L = f.n_max;
    const size_t n_plm = static_cast<size_t>(L) * (L + 1) / 2;
    rad_c.assign(n_plm, 0.0);
    rad_s.assign(n_plm, 0.0);
    const double x = std::cos(chi), s = std::sin(chi);
    std::vector<double> geg(static_cast<size_t>(L));
    double sl = 1.0;
    for (int l = 0; l < L; ++l) {
        gegenbauer_all(l + 1.0, L - 1 - l, x, geg.data());
        for (int m = -l; m <= l; ++m) {
            const size_t row = static_cast<size_t>(plm_index(l, std::abs(m)));
            double acc = 0.0;
            for (int n = l + 1; n <= L; ++n)
                acc += f.at(n, lm_to_k(l, m)) * normalization(n, l) * geg[n - 1 - l] * sl;
            (m >= 0 ? rad_c : rad_s)[row] += acc;
        }
        sl *= s;
    }
}

TransformPlan::TransformPlan(const BasisTables& tables, const SphereGrid& grid)
    : tables_(&tables), grid_(&grid), L_(tables.n_max()),
      m_chi_(grid.m_chi()), m_theta_(grid.m_theta()), n_phi_(grid.n_phi) {
    chi_off_.resize(L_ + 1);
    chi_off_[0] = 0;
    for (int l = 0; l < L_; ++l) chi_off_[l + 1] = chi_off_[l] + (L_ - l);
    chiT_.assign(chi_off_[L_] * static_cast<size_t>(m_chi_), 0.0);
    std::vector<double> geg(static_cast<size_t>(L_));
    for (int i = 0; i < m_chi_; ++i) {
        const double x = grid.chi_x[i];
        const double s = grid.chi_sin[i];
        double sl = 1.0;
        for (int l = 0; l < L_; ++l) {
            gegenbauer_all(l + 1.0, L_ - 1 - l, x, geg.data());
            for (int j = 0; j <= L_ - 1 - l; ++j)
                chiT_[(chi_off_[l] + j) * m_chi_ + i] =
                    tables.normalization(l + 1 + j, l) * geg[j] * sl;
            sl *= s;
        }
    }
    const size_t n_plm = static_cast<size_t>(L_) * (L_ + 1) / 2;
    legT_.assign(n_plm * m_theta_, 0.0);
    std::vector<double> plm(n_plm);
    for (int t = 0; t < m_theta_; ++t) {
        normalized_legendre_table(L_ - 1, grid.theta_u[t], plm.data());
        for (size_t row = 0; row < n_plm; ++row) legT_[row * m_theta_ + t] = plm[row];
    }
    phi_cos_.assign(static_cast<size_t>(L_) * n_phi_, 0.0);
    phi_sin_.assign(static_cast<size_t>(std::max(0, L_ - 1)) * n_phi_, 0.0);
    for (int j = 0; j < n_phi_; ++j) phi_cos_[j] = 1.0;
    for (int m = 1; m < L_; ++m) {
        for (int j = 0; j < n_phi_; ++j) {
            const double phi = grid.phi_at(j);
            phi_cos_[static_cast<size_t>(m) * n_phi_ + j] = kSqrt2 * std::cos(m * phi);
            phi_sin_[static_cast<size_t>(m - 1) * n_phi_ + j] = kSqrt2 * std::sin(m * phi);
        }
    }
}

void TransformPlan::stage1(const SphereField& f, std::vector<double>& rad_c,
                           std::vector<double>& rad_s) const {
    const int Lf = f.n_max;
    const size_t n_plm = static_cast<size_t>(L_) * (L_ + 1) / 2;
    rad_c.assign(n_plm * m_chi_, 0.0);
    rad_s.assign(n_plm * m_chi_, 0.0);
    for (int l = 0; l < Lf; ++l) {
        for (int m = -l; m <= l; ++m) {
            double* dest = (m >= 0 ? rad_c : rad_s).data() +
                           static_cast<size_t>(plm_index(l, std::abs(m))) * m_chi_;
            for (int n = l + 1; n <= Lf; ++n) {
                const double c = f.at(n, lm_to_k(l, m));
                if (c == 0.0) continue;
                const double* src = chiT_.data() + (chi_off_[l] + (n - 1 - l)) * m_chi_;
                for (int i = 0; i < m_chi_; ++i) dest[i] += c * src[i];
            }
        }
    }
}

namespace {
thread_local std::vector<double> tl_rad_c, tl_rad_s, tl_ac, tl_as, tl_bc, tl_bs,
    tl_proj_c, tl_proj_s;
} // namespace

void TransformPlan::synthesize_s2_slice(const double* rad_c, const double* rad_s,
                                        double* out_s2) const {
    auto& ac = tl_ac;
    auto& as = tl_as;
    ac.assign(static_cast<size_t>(L_) * m_theta_, 0.0);
    as.assign(static_cast<size_t>(L_) * m_theta_, 0.0);
    for (int m = 0; m < L_; ++m) {
        for (int l = m; l < L_; ++l) {
            const size_t row = static_cast<size_t>(plm_index(l, m));
            const double wc = rad_c[row];
            const double* leg = legT_.data() + row * m_theta_;
            if (wc != 0.0) {
                double* a = ac.data() + static_cast<size_t>(m) * m_theta_;
                for (int t = 0; t < m_theta_; ++t) a[t] += wc * leg[t];
            }
            if (m > 0) {
                const double ws = rad_s[row];
                if (ws != 0.0) {
                    double* a = as.data() + static_cast<size_t>(m) * m_theta_;
                    for (int t = 0; t < m_theta_; ++t) a[t] += ws * leg[t];
                }
            }
        }
    }
    for (int t = 0; t < m_theta_; ++t) {
        double* o = out_s2 + static_cast<size_t>(t) * n_phi_;
        const double a0 = ac[t];
        for (int j = 0; j < n_phi_; ++j) o[j] = a0;
        for (int m = 1; m < L_; ++m) {
            const double camp = ac[static_cast<size_t>(m) * m_theta_ + t];
            const double samp = as[static_cast<size_t>(m) * m_theta_ + t];
            if (camp == 0.0 && samp == 0.0) continue;
            const double* cc = phi_cos_.data() + static_cast<size_t>(m) * n_phi_;
            const double* ss = phi_sin_.data() + static_cast<size_t>(m - 1) * n_phi_;
            for (int j = 0; j < n_phi_; ++j) o[j] += camp * cc[j] + samp * ss[j];
        }
    }
}

GridValues TransformPlan::synthesize_unchecked(const SphereField& f) const {
    if (f.n_max > L_) throw std::invalid_argument("synthesize: field exceeds table n_max");
    GridValues out(*grid_);
    auto& rad_c = tl_rad_c;
    auto& rad_s = tl_rad_s;
    stage1(f, rad_c, rad_s);
    std::vector<double> slice_c(static_cast<size_t>(L_) * (L_ + 1) / 2);
    std::vector<double> slice_s(slice_c.size());
    for (int i = 0; i < m_chi_; ++i) {
        for (size_t row = 0; row < slice_c.size(); ++row) {
            slice_c[row] = rad_c[row * m_chi_ + i];
            slice_s[row] = rad_s[row * m_chi_ + i];
        }
        synthesize_s2_slice(slice_c.data(), slice_s.data(),
                            out.v.data() + static_cast<size_t>(i) * m_theta_ * n_phi_);
    }
    return out;
}

GridValues TransformPlan::synthesize(const SphereField& f) const {
    if (grid_->exactness_degree < 2 * (f.n_max - 1))
        throw resolution_error("synthesize: grid exactness below 2(n_max-1)");
    return synthesize_unchecked(f);
}

SphereField TransformPlan::analyze(const GridValues& v, int n_max) const {
    if (!v.matches(*grid_)) throw std::invalid_argument("analyze: values do not match grid");
    if (n_max > L_) throw std::invalid_argument("analyze: n_max exceeds table n_max");
    if (grid_->exactness_degree < 2 * (n_max - 1))
        throw resolution_error("analyze: grid exactness below 2(n_max-1)");
    const size_t n_plm = static_cast<size_t>(L_) * (L_ + 1) / 2;
    auto& bc = tl_bc;
    auto& bs = tl_bs;
    auto& proj_c = tl_proj_c;
    auto& proj_s = tl_proj_s;
    proj_c.assign(n_plm * m_chi_, 0.0);
    proj_s.assign(n_plm * m_chi_, 0.0);
    for (int i = 0; i < m_chi_; ++i) {
        bc.assign(static_cast<size_t>(L_) * m_theta_, 0.0);
        bs.assign(static_cast<size_t>(L_) * m_theta_, 0.0);
        for (int t = 0; t < m_theta_; ++t) {
            const double* vv = v.v.data() + (static_cast<size_t>(i) * m_theta_ + t) * n_phi_;
            const double wtp = grid_->theta_w[t] * grid_->phi_w;
            double s0 = 0.0;
            for (int j = 0; j < n_phi_; ++j) s0 += vv[j];
            bc[t] = wtp * s0;
            for (int m = 1; m < n_max; ++m) {
                const double* cc = phi_cos_.data() + static_cast<size_t>(m) * n_phi_;
                const double* ss = phi_sin_.data() + static_cast<size_t>(m - 1) * n_phi_;
                double sc = 0.0, ssum = 0.0;
                for (int j = 0; j < n_phi_; ++j) {
                    sc += vv[j] * cc[j];
                    ssum += vv[j] * ss[j];
                }
                bc[static_cast<size_t>(m) * m_theta_ + t] = wtp * sc;
                bs[static_cast<size_t>(m) * m_theta_ + t] = wtp * ssum;
            }
        }
        for (int m = 0; m < n_max; ++m) {
            for (int l = m; l < n_max; ++l) {
                const size_t row = static_cast<size_t>(plm_index(l, m));
                const double* leg = legT_.data() + row * m_theta_;
                double accc = 0.0, accs = 0.0;
                const double* bcm = bc.data() + static_cast<size_t>(m) * m_theta_;
                const double* bsm = bs.data() + static_cast<size_t>(m) * m_theta_;
                for (int t = 0; t < m_theta_; ++t) {
                    accc += bcm[t] * leg[t];
                    accs += bsm[t] * leg[t];
                }
                proj_c[row * m_chi_ + i] = accc;
                proj_s[row * m_chi_ + i] = accs;
            }
        }
    }
    SphereField out(n_max);
    for (int l = 0; l < n_max; ++l) {
        for (int m = -l; m <= l; ++m) {
            const size_t row = static_cast<size_t>(plm_index(l, std::abs(m)));
            const double* proj = (m >= 0 ? proj_c : proj_s).data() + row * m_chi_;
            for (int n = l + 1; n <= n_max; ++n) {
                const double* src = chiT_.data() + (chi_off_[l] + (n - 1 - l)) * m_chi_;
                double acc = 0.0;
                for (int i = 0; i < m_chi_; ++i) acc += grid_->chi_w[i] * proj[i] * src[i];
                out.at(n, lm_to_k(l, m)) = acc;
            }
        }
    }
    return out;
}

namespace {

// |x|^p with integer exponents by squaring; the Monte Carlo loops hit this
// hard enough that std::pow matters.
inline double abs_pow(double x, double p, long ip, bool integral) {
    if (!integral) return std::pow(std::abs(x), p);
    double base = (ip % 2 == 0) ? x : std::abs(x);
    double result = 1.0;
    long e = ip;
    while (e > 0) {
        if (e & 1) result *= base;
        base *= base;
        e >>= 1;
    }
    return result;
}

} // namespace

double lp_norm(const GridValues& v, double p, const SphereGrid& grid) {
    if (!v.matches(grid)) throw std::invalid_argument("lp_norm: values do not match grid");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : v.v) m = std::max(m, std::abs(x));
        return m;
    }
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    const long ip = std::lround(p);
    const bool integral = std::abs(p - static_cast<double>(ip)) < 1e-12;
    double acc = 0.0;
    size_t idx = 0;
    for (int i = 0; i < grid.m_chi(); ++i) {
        double acc_chi = 0.0;
        for (int t = 0; t < grid.m_theta(); ++t) {
            double acc_theta = 0.0;
            for (int j = 0; j < grid.n_phi; ++j, ++idx)
                acc_theta += abs_pow(v.v[idx], p, ip, integral);
            acc_chi += grid.theta_w[t] * acc_theta;
        }
        acc += grid.chi_w[i] * acc_chi;
    }
    return std::pow(acc * grid.phi_w, 1.0 / p);
}

double sobolev_norm(const SphereField& f, double s) {
    double acc = 0.0;
    for (int n = 1; n <= f.n_max; ++n) {
        const double mult = std::pow(static_cast<double>(n), 2.0 * s);
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) {
            const double c = f.coeffs[static_cast<size_t>(base + k)];
            acc += mult * c * c;
        }
    }
    return std::sqrt(acc);
}

SphereField laplacian(const SphereField& f) {
    SphereField out = f;
    for (int n = 1; n <= f.n_max; ++n) {
        const double ev = 1.0 - static_cast<double>(n) * n;
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) out.coeffs[static_cast<size_t>(base + k)] *= ev;
    }
    return out;
}

GridValues projection_kernel_diag(const TransformPlan& plan, int n) {
    const SphereGrid& grid = plan.grid();
    if (n > plan.tables().n_max())
        throw std::invalid_argument("projection_kernel_diag: n exceeds table n_max");
    GridValues out(grid);
    // sum over m of Y_{lm}^2 collapses to Pbar_{l0}^2 + 2 sum_{m>=1} Pbar_{lm}^2
    std::vector<double> plm(static_cast<size_t>(n) * (n + 1) / 2);
    size_t idx = 0;
    for (int i = 0; i < grid.m_chi(); ++i) {
        for (int t = 0; t < grid.m_theta(); ++t) {
            normalized_legendre_table(n - 1, grid.theta_u[t], plm.data());
            double val = 0.0;
            for (int l = 0; l < n; ++l) {
                const double pr = plan.chi_table(l, n - 1 - l, i);
                double ysum = plm[plm_index(l, 0)] * plm[plm_index(l, 0)];
                for (int m = 1; m <= l; ++m)
                    ysum += 2.0 * plm[plm_index(l, m)] * plm[plm_index(l, m)];
                val += pr * pr * ysum;
            }
            for (int j = 0; j < grid.n_phi; ++j, ++idx) out.v[idx] = val;
        }
    }
    return out;
}

SphereField zonal_field(const BasisTables& tables, int n, double chi0, double theta0,
                        double phi0) {
    SphereField out(n);
    std::vector<double> plm(static_cast<size_t>(n) * (n + 1) / 2);
    normalized_legendre_table(n - 1, std::cos(theta0), plm.data());
    for (int l = 0; l < n; ++l) {
        const double pr = tables.chi_profile(n, l, chi0);
        for (int m = -l; m <= l; ++m) {
            const double pbar = plm[plm_index(l, std::abs(m))];
            double y;
            if (m == 0)
                y = pbar;
            else if (m > 0)
                y = kSqrt2 * pbar * std::cos(m * phi0);
            else
                y = kSqrt2 * pbar * std::sin(-m * phi0);
            out.at(n, lm_to_k(l, m)) = pr * y;
        }
    }
    return out;
}

double evaluate_field(const BasisTables& tables, const SphereField& f, double chi,
                      double theta, double phi) {
    std::vector<double> rad_c, rad_s;
    tables.radial_slice(f, chi, rad_c, rad_s);
    const int L = f.n_max;
    std::vector<double> plm(static_cast<size_t>(L) * (L + 1) / 2);
    normalized_legendre_table(L - 1, std::cos(theta), plm.data());
    double val = 0.0;
    for (int l = 0; l < L; ++l) {
        val += rad_c[plm_index(l, 0)] * plm[plm_index(l, 0)];
        for (int m = 1; m <= l; ++m) {
            const double pbar = plm[plm_index(l, m)];
            val += kSqrt2 * pbar *
                   (rad_c[plm_index(l, m)] * std::cos(m * phi) +
                    rad_s[plm_index(l, m)] * std::sin(m * phi));
        }
    }
    return val;
}

void save_field_csv(const SphereField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_field_csv: cannot open " + path);
    out << "n,k,coeff\r\n";
    char buf[40];
    for (int n = 1; n <= f.n_max; ++n) {
        for (int k = 1; k <= n * n; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", f.at(n, k));
            out << n << ',' << k << ',' << buf << "\r\n";
        }
    }
}

SphereField load_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_field_csv: cannot open " + path);
    std::string line;
    std::getline(in, line); // header
    struct Entry {
        int n, k;
        double c;
    };
    std::vector<Entry> entries;
    int n_max = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream ss(line);
        Entry e;
        char comma;
        ss >> e.n >> comma >> e.k >> comma >> e.c;
        if (!ss) throw std::runtime_error("load_field_csv: malformed row: " + line);
        entries.push_back(e);
        n_max = std::max(n_max, e.n);
    }
    SphereField f(n_max);
    for (const auto& e : entries) f.at(e.n, e.k) = e.c;
    return f;
}

} // namespace pnlw
