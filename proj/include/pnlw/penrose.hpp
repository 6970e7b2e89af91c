#pragma once

#include <vector>

#include "pnlw/nlw_solver.hpp"
#include "pnlw/sphere_harmonics.hpp"

namespace pnlw {

// Conformal chart between R x R^3 and the region cos T + cos R > 0 of the
// cylinder R x S^3:
//   T = arctan(t+r) + arctan(t-r),  R = arctan(t+r) - arctan(t-r),
//   Omega = cos T + cos R = 2 / sqrt((1+(t+r)^2)(1+(t-r)^2)).
struct ChartPoint {
    double T = 0.0;
    double R = 0.0;
    double omega = 0.0;
};

ChartPoint chart_forward(double t, double r);

struct TRPoint {
    double t = 0.0;
    double r = 0.0;
};

// throws out_of_image_error when cos T + cos R <= 0
TRPoint chart_inverse(double T, double R);

// Radial quadrature for R^3 integrals through r = tan(R/2): the natural
// weights integrate F against (2/(1+r^2))^3 r^2 dr exactly like the sphere
// rule integrates against sin^2 R dR.
struct EuclideanRadialGrid {
    std::vector<double> R_nodes, r_nodes, w_sphere;

    static EuclideanRadialGrid make(int m);
    size_t size() const { return r_nodes.size(); }

    // weight for plain int F r^2 dr
    double r2dr_weight(size_t i) const {
        const double a = 0.5 * (1.0 + r_nodes[i] * r_nodes[i]);
        return w_sphere[i] * a * a * a;
    }
};

// (g0, g1) = (Omega0 v0 o chart, Omega0^2 v1 o chart) sampled on the
// (r x S^2) product grid; the angular nodes are those of ctx.grid.
struct EuclideanPair {
    size_t m_r = 0;
    size_t n_s2 = 0;
    std::vector<double> g0, g1; // [ir * n_s2 + s2]
};

EuclideanPair pt0_inverse(const StatePair& state, const SphereContext& ctx,
                          const EuclideanRadialGrid& egrid);

// H0 = A^2 lap + A r d_r + (3+r^2)/2,  H1 = A^2 lap + 3 A r d_r + 6 A, with
// A = (1+r^2)/2; images of the sphere harmonics are eigenfunctions with
// eigenvalue 1 - n^2. Fields enter through their sphere-side modal
// representation u: kind h0 maps u to Omega0 Psi(u), h1 to Omega0^2 Psi(u).
enum class RadialOperator { h0, h1 };

std::vector<double> euclid_field_values(const SphereContext& ctx, const SphereField& u,
                                        RadialOperator kind, const EuclideanRadialGrid& egrid);

std::vector<double> apply_radial_operator(const SphereContext& ctx, const SphereField& u,
                                          RadialOperator kind,
                                          const EuclideanRadialGrid& egrid);

// || H g_{n,k} - (1-n^2) g_{n,k} || in the weighted L^2 of the corresponding
// kind (script-L2 for h0, its h1 analogue for h1).
double h_eigen_residual(const SphereContext& ctx, int n, int k, RadialOperator kind,
                        const EuclideanRadialGrid& egrid);

// || (2/(1+r^2))^w (1-H)^{s/2} g ||_{L^2(R^3)} with the operator applied as
// the diagonal multiplier n^s on the modal representation.
double euclid_weighted_norm(const SphereContext& ctx, const SphereField& u,
                            RadialOperator kind, double weight_exponent, double s,
                            const EuclideanRadialGrid& egrid);

struct LqTransferOptions {
    int r_rule = 48;       // sphere-side radial rule
    int t_panels_per_unit = 4;
    int euclid_panels = 32;
    int gl_order = 6;
};

struct LqTransferResult {
    double euclid = 0.0;
    double sphere = 0.0;
};

// Both sides of int |PT^{-1} w|^q over R x R^3: the Euclidean side by (t, r)
// quadrature of the pulled-back field, the sphere side by Omega^{q-4}
// weighted quadrature over cos T + cos R > 0. w must be evaluable on
// [-pi, pi].
LqTransferResult lq_transfer(const SphereContext& ctx, const Trajectory& w, double q,
                             const LqTransferOptions& opts = {});

struct ScatteringFit {
    std::vector<double> t_values;
    std::vector<double> norms;
    double beta = 0.0;
    double beta_stderr = 0.0;
    bool fit_valid = false;
    double interp_error_estimate = 0.0;
};

// || PT^{-1}(u - lin)(t) ||_{L^q(R^3)} at each requested t plus the fitted
// decay exponent of norm ~ t^{-beta}. Requires q in (18/5, 6].
ScatteringFit scattering_decay(const SphereContext& ctx, const Trajectory& u,
                               const Trajectory& lin, double q,
                               const std::vector<double>& t_list, int radial_panels = 40,
                               int gl_order = 6);

} // namespace pnlw
