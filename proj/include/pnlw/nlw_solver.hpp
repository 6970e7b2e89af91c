#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pnlw/linear_flow.hpp"
#include "pnlw/sphere_harmonics.hpp"

namespace pnlw {

enum class SolveMode { full, perturbation };

struct SolveOptions {
    double t_begin = 0.0;
    double t_end = 1.0;
    double dt = 1e-3;
    bool cubic_on = true;
    double blowup_threshold = 1e12;
};

struct BlowupInfo {
    bool blew_up = false;
    double last_valid_time = 0.0;
};

// Snapshots of (u, d_T u) on a uniform (signed-step) time grid. Position
// interpolates with cubic Hermite using the stored velocities.
struct Trajectory {
    SolveMode mode = SolveMode::full;
    double t0 = 0.0;
    double dt = 0.0;
    int n_max = 0;
    std::vector<StatePair> snaps;
    BlowupInfo blowup;

    double t_at(size_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return snaps.empty() ? t0 : t_at(snaps.size() - 1); }
    bool covers(double T) const;
    StatePair state_at(double T) const;
};

// Fourth-order Lawson scheme: the linear propagator is applied exactly mode
// by mode, the cubic term is evaluated pointwise on a grid dealiased for
// cubic products (exactness >= 4 (n_max - 1)).
class NlwSolver {
public:
    explicit NlwSolver(const SphereContext& ctx);

    // forcing_data null: d_T^2 u + (1-lap) u + u^3 = 0 from `initial`.
    // forcing_data set: perturbation equation with g(T) = U(T) forcing_data.
    Trajectory solve(const StatePair& initial, const StatePair* forcing_data,
                     const SolveOptions& opts) const;

private:
    const SphereContext* ctx_;
};

double quartic_integral(const TransformPlan& plan, const SphereField& pos); // int u^4

// Conserved by the full flow: 1/2 int u_T^2 + 1/2 int u (1-lap) u + 1/4 int u^4.
double hamiltonian(const StatePair& state, const TransformPlan& plan);

// Continuation energy: ( int (d_T v)^2 + int v (1-lap) v + 1/2 int v^4 )^{1/2}.
double energy_E(const StatePair& state, const TransformPlan& plan);

// Hypothesis scale constant of the local fixed point window
// T1 = min(1, 1/(C Lambda^2 (1 + T0^2)^3)); calibrated once on a reference
// batch and then frozen.
inline constexpr double kPicardTimeConstant = 4.0;

struct PicardResult {
    bool hypothesis_ok = true;
    std::string hypothesis_report;
    double t1 = 0.0;
    double lambda = 0.0;
    std::vector<double> distances; // sup-T H^1 gaps between consecutive iterates
    std::vector<double> factors;   // ratios of consecutive gaps
    bool contracted = false;
    std::vector<double> times;         // iterate grid
    std::vector<StatePair> final_iterate;
};

// Duhamel iterates of the local problem at center T0 with data (v0, v1) and
// forcing g = U(T) forcing_data (null: g = 0).
PicardResult picard_local(const SphereContext& ctx, const StatePair* forcing_data,
                          const StatePair& data, double T0, double lambda, int n_iter,
                          double contraction_c = kPicardTimeConstant,
                          int grid_per_side = 256);

// Residual of the integral equation at time T for a trajectory started at
// traj.t0 (forced or not); quantifies stepper + quadrature consistency.
double duhamel_residual(const SphereContext& ctx, const Trajectory& traj,
                        const StatePair* forcing_data, double T);

// C int_0^T ||g||_{L^6}^3 exp( c int_0^T (||g||_{L^6}^2 + ||g||_inf) ) with
// g(tau) = U(tau) forcing_data.
double gronwall_envelope_case1(const SphereContext& ctx, const StatePair& forcing_data,
                               double T, double C, double c);

struct GlobalizationBudget {
    double theta = 0.5;
    double p = 12.0; // 6 / theta, exactly
    double t0 = 4.0;
    int split_n = 4;      // frequency cutoff of the g = Pi_N g + (1-Pi_N) g split
    double c_t0 = 0.0;    // C(T0) = c_scale (1 + T0^2)

    double cubic_threshold() const { return std::exp(p / 18.0); }
    double per_set_threshold() const { return p / 54.0; }
    double combined_threshold() const { return p / 18.0; }
    double energy_ceiling() const { return std::exp(p / 6.0); }
    double energy_expected() const { return std::exp(p / 9.0); }

    static GlobalizationBudget make(double theta, double t0, int split_n, double c_scale);
};

struct BudgetReport {
    bool f = false, g = false, h = false, i = false, j = false;
    double l3l6_norm = 0.0;      // weighted L^3_T L^6_x of g
    double low_linf_norm = 0.0;  // weighted L^1_T L^inf of Pi_N g
    double high_lp_norm = 0.0;   // weighted L^p_{T,x} of (1 - Pi_N) g
    double f_value = 0.0, g_value = 0.0, h_value = 0.0, i_value = 0.0;
};

class BudgetEvaluator {
public:
    BudgetEvaluator(const SphereContext& ctx, const GlobalizationBudget& budget);
    BudgetReport check(const StatePair& data) const;
    const GlobalizationBudget& budget() const { return budget_; }

private:
    GlobalizationBudget budget_;
    WeightedNormEvaluator l3l6_;
    WeightedNormEvaluator l1linf_;
    WeightedNormEvaluator lp_;
};

// One-shot budget membership check.
BudgetReport check_globalization_budget(const SphereContext& ctx, const StatePair& data,
                                        const GlobalizationBudget& budget);

// H(t) = ( sum (dvel)^2 + sum n^2 (dpos)^2 )^{1/2} between two trajectories
// of the same data, sampled at `times`.
std::vector<double> uniqueness_energy(const Trajectory& a, const Trajectory& b,
                                      const std::vector<double>& times);

void save_trajectory_csv(const Trajectory& traj, const std::string& path);

} // namespace pnlw
