#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pnlw/quadrature.hpp"

namespace pnlw {

// Eigenspace E_n of (1 - laplacian) on S^3 has eigenvalue n^2 and dimension
// n^2, n >= 1. Within a degree, k in [1, n^2] enumerates the pairs (l, m),
// 0 <= l <= n-1, |m| <= l, as k = l^2 + l + m + 1.
struct HarmonicIndex {
    int n = 1;
    int k = 1;
};

inline int lm_to_k(int l, int m) { return l * l + l + m + 1; }

inline std::pair<int, int> k_to_lm(int k) {
    int l = static_cast<int>(std::sqrt(static_cast<double>(k - 1)));
    while ((l + 1) * (l + 1) <= k - 1) ++l;
    while (l * l > k - 1) --l;
    return {l, k - 1 - l * l - l};
}

// Real spectral coefficient table over (n, k), n <= n_max.
struct SphereField {
    int n_max = 0;
    std::vector<double> coeffs;

    SphereField() = default;
    explicit SphereField(int n_max_)
        : n_max(n_max_), coeffs(static_cast<size_t>(modes_up_to(n_max_)), 0.0) {}

    static int modes_up_to(int n) { return n * (n + 1) * (2 * n + 1) / 6; }
    static int flat_index(int n, int k) { return modes_up_to(n - 1) + (k - 1); }

    double& at(int n, int k) { return coeffs[static_cast<size_t>(flat_index(n, k))]; }
    double at(int n, int k) const { return coeffs[static_cast<size_t>(flat_index(n, k))]; }

    size_t size() const { return coeffs.size(); }
    double l2_norm() const;
};

// (u, d_T u) pair sharing one truncation.
struct StatePair {
    SphereField pos;
    SphereField vel;

    StatePair() = default;
    explicit StatePair(int n_max) : pos(n_max), vel(n_max) {}
    int n_max() const { return pos.n_max; }
};

// Product quadrature grid on S^3 in coordinates (chi, theta, phi) with
// volume element sin^2(chi) sin(theta) dchi dtheta dphi:
//   chi   : Gauss-Chebyshev (2nd kind) in x = cos chi,
//   theta : Gauss-Legendre in u = cos theta,
//   phi   : uniform with trapezoid weights, even count.
// Integrates any polynomial of total degree <= exactness_degree on S^3
// exactly; total weight is vol(S^3) = 2 pi^2.
struct SphereGrid {
    int exactness_degree = 0;
    std::vector<double> chi, chi_x, chi_sin, chi_w;
    std::vector<double> theta_u, theta_sin, theta_w;
    int n_phi = 0;
    double phi_w = 0.0;

    static SphereGrid for_degree(int degree);

    int m_chi() const { return static_cast<int>(chi.size()); }
    int m_theta() const { return static_cast<int>(theta_u.size()); }
    size_t n_s2() const { return theta_u.size() * static_cast<size_t>(n_phi); }
    size_t n_nodes() const { return chi.size() * n_s2(); }
    double phi_at(int j) const { return 2.0 * 3.14159265358979323846 * j / n_phi; }
    double total_weight() const;
};

struct GridValues {
    int m_chi = 0, m_theta = 0, n_phi = 0;
    std::vector<double> v;

    GridValues() = default;
    explicit GridValues(const SphereGrid& g)
        : m_chi(g.m_chi()), m_theta(g.m_theta()), n_phi(g.n_phi), v(g.n_nodes(), 0.0) {}
    bool matches(const SphereGrid& g) const {
        return m_chi == g.m_chi() && m_theta == g.m_theta() && n_phi == g.n_phi;
    }
};

// Gegenbauer (ultraspherical) polynomials C_j^{(alpha)}(x) for j = 0..j_max.
void gegenbauer_all(double alpha, int j_max, double x, double* out);

// Fully normalized associated Legendre values Pbar_{l,m}(u) packed as
// idx = l(l+1)/2 + m for 0 <= m <= l <= l_max; int_{S^2} (Pbar_{l0})^2 = 1
// and the real harmonics sqrt(2) Pbar_{lm} cos/sin(m phi), m >= 1, are
// orthonormal on S^2.
void normalized_legendre_table(int l_max, double u, double* out);
inline int plm_index(int l, int m) { return l * (l + 1) / 2 + m; }

// Reference basis f_{n,k}: normalized Gegenbauer-in-chi times real 2-sphere
// harmonic,
//   f_{n,(l,m)} = A_{n,l} C_{n-1-l}^{(l+1)}(cos chi) sin^l(chi) Y_{lm},
// an orthonormal eigenbasis of E_n. Normalization constants are fixed by
// quadrature at construction.
class BasisTables {
public:
    explicit BasisTables(int n_max); // throws std::invalid_argument if n_max < 1

    int n_max() const { return n_max_; }
    double normalization(int n, int l) const { return norm_[nl_index(n, l)]; }

    double chi_profile(int n, int l, double chi) const;
    void chi_profile_derivs(int n, int l, double chi, double& p, double& dp, double& d2p) const;

    // rad_c / rad_s packed by plm_index over (l, m>=0) resp. (l, m>=1 at
    // plm_index(l,m)); accumulates the chi-profiles of all degrees of a field
    // at one angle.
    void radial_slice(const SphereField& f, double chi, std::vector<double>& rad_c,
                      std::vector<double>& rad_s) const;

    int nl_index(int n, int l) const { return (n - 1) * n / 2 + l; }

private:
    int n_max_ = 0;
    std::vector<double> norm_;
};

// Separable synthesis/analysis between coefficients and grid values.
// Orthonormality on the grid is exact (up to roundoff) whenever
// grid.exactness_degree >= 2 (n_max - 1).
class TransformPlan {
public:
    TransformPlan(const BasisTables& tables, const SphereGrid& grid);

    const SphereGrid& grid() const { return *grid_; }
    const BasisTables& tables() const { return *tables_; }

    GridValues synthesize(const SphereField& f) const;       // throws resolution_error
    SphereField analyze(const GridValues& v, int n_max) const;

    // unchecked synthesis (used for integrands that are deliberately not
    // band-limited, e.g. pointwise cubes projected on a dealiased grid)
    GridValues synthesize_unchecked(const SphereField& f) const;

    // stages 2a+2b at a single chi-slice from packed radial coefficients
    void synthesize_s2_slice(const double* rad_c, const double* rad_s, double* out_s2) const;

    double chi_table(int l, int j, int ichi) const {
        return chiT_[(chi_off_[l] + j) * static_cast<size_t>(m_chi_) + ichi];
    }

private:
    void stage1(const SphereField& f, std::vector<double>& rad_c,
                std::vector<double>& rad_s) const;

    const BasisTables* tables_;
    const SphereGrid* grid_;
    int L_;       // tables n_max
    int m_chi_, m_theta_, n_phi_;
    std::vector<size_t> chi_off_;      // per l, offset into chiT_ rows
    std::vector<double> chiT_;         // [(l, j=n-1-l) row][ichi]
    std::vector<double> legT_;         // [plm row][itheta]
    std::vector<double> phi_cos_;      // [m][iphi], m=0 row is 1
    std::vector<double> phi_sin_;      // [m-1][iphi], m >= 1
};

// Tables + grid + plan bundle most call sites want together.
struct SphereContext {
    BasisTables tables;
    SphereGrid grid;
    TransformPlan plan;

    SphereContext(int n_max, int degree)
        : tables(n_max), grid(SphereGrid::for_degree(degree)), plan(tables, grid) {}
};

// L^p norm by grid quadrature; p = infinity means max over nodes.
double lp_norm(const GridValues& v, double p, const SphereGrid& grid);

// Diagonal Sobolev norm (sum n^{2s} coeff^2)^{1/2}, the spectrum of
// (1 - laplacian)^{s/2}.
double sobolev_norm(const SphereField& f, double s);

// Laplace-Beltrami acts diagonally: coefficient of degree n scales by 1-n^2.
SphereField laplacian(const SphereField& f);

// sum_k f_{n,k}(x)^2 at every node; constant on S^3 with value n^2 / (2 pi^2).
GridValues projection_kernel_diag(const TransformPlan& plan, int n);

// Zonal field Z_n(x) = sum_k f_{n,k}(x0) f_{n,k}(x).
SphereField zonal_field(const BasisTables& tables, int n, double chi0, double theta0,
                        double phi0);

// Point evaluation (slow path, for spot checks and chart pullbacks).
double evaluate_field(const BasisTables& tables, const SphereField& f, double chi,
                      double theta, double phi);

void save_field_csv(const SphereField& f, const std::string& path);
SphereField load_field_csv(const std::string& path);

} // namespace pnlw
