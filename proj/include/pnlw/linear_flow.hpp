#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "pnlw/random_basis.hpp"
#include "pnlw/random_data.hpp"
#include "pnlw/sphere_harmonics.hpp"

namespace pnlw {

// Mode-wise propagator of d_T^2 + (1 - laplacian):
//   pos -> cos(nT) pos + sin(nT)/n vel,  vel -> -n sin(nT) pos + cos(nT) vel.
StatePair evolve_linear(const StatePair& state, double T);

// Orthogonal projection onto degrees n <= N (convention: N = 0 is the zero
// projection). high = true gives 1 - Pi_N.
SphereField project_field(const SphereField& f, int N, bool high = false);
StatePair apply_projection(const StatePair& state, int N, bool high = false);

// Weighted space-time norm || (1+|T|^delta)^{-1} U(T) data ||_{L^r_T L^p_x}
// over T in R. The space norm is 2 pi periodic in T, so the time integral
// folds onto one period against W(s) = sum_j (1+|s+2 pi j|^delta)^{-r}; the
// lattice sum is truncated at the window and completed with an integral
// estimate whose uncertainty is tracked.
struct WeightedNormSpec {
    double r = 3.0;
    double p = 6.0;
    double delta = 2.0 / 3.0; // delta = 2/r pairs the weight with the L^r time norm
    double t_window = 10000.0;
    double tail_tolerance = 1e-6;

    static WeightedNormSpec for_time_exponent(double r, double p) {
        WeightedNormSpec s;
        s.r = r;
        s.p = p;
        s.delta = 2.0 / r;
        return s;
    }
};

class WeightedNormEvaluator {
public:
    enum class Projection { none, low_pass, high_pass };

    WeightedNormEvaluator(const SphereContext& ctx, WeightedNormSpec spec, int n_panels = 24,
                          int gl_order = 8);

    double eval(const StatePair& data, Projection proj = Projection::none,
                int cutoff = 0) const;

    double tail_rel() const { return tail_rel_; }
    const WeightedNormSpec& spec() const { return spec_; }
    double last_linf_refinement_delta() const { return linf_delta_; }

private:
    const SphereContext* ctx_;
    WeightedNormSpec spec_;
    std::vector<double> s_nodes_, s_weights_, folded_w_;
    std::vector<double> cos_tab_, sin_over_n_tab_; // [node * n_max + (n-1)]
    double tail_rel_ = 0.0;
    mutable double linf_delta_ = 0.0;
    std::unique_ptr<SphereGrid> fine_grid_;      // one refinement level for p = inf
    std::unique_ptr<TransformPlan> fine_plan_;
};

// One-shot convenience over WeightedNormEvaluator.
double weighted_spacetime_norm(const SphereContext& ctx, const StatePair& data,
                               const WeightedNormSpec& spec);

struct TailExperimentConfig {
    int regime = 2;        // 1: high-frequency L^p; 2: L^3_T L^6; 3: low-pass L^1_T L^inf
    int cutoff = 0;        // N for regime 1, M for regime 3
    double p_m = 8.0;      // regime-1 exponent
    int n_draws = 1000;
    std::vector<double> levels; // empty: quantile levels from a pilot batch
    uint64_t seed = 1;
    double amplitude_scale = 1.0;
    DrawDistribution dist = DrawDistribution::gaussian;
};

struct TailExperimentResult {
    TailEstimate tail;
    std::vector<double> values; // the draws actually scored against the levels
    WeightedNormSpec spec;
};

TailExperimentResult tail_experiment(const SphereContext& ctx, const CoefficientProfile& profile,
                                     const std::vector<BasisRotation>* rotations,
                                     const TailExperimentConfig& cfg);

} // namespace pnlw
