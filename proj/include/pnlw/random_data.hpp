#pragma once

#include <cstdint>
#include <vector>

#include "pnlw/random_basis.hpp"
#include "pnlw/rng.hpp"
#include "pnlw/sphere_harmonics.hpp"

namespace pnlw {

// Deterministic amplitudes (u0^{n,k}, u1^{n,k}) = (n^-alpha, n^{1-alpha}),
// identical across k within a degree. Finite at sigma-regularity, divergent
// at the H^{1/2} level when alpha <= 2.
struct CoefficientProfile {
    double sigma = 0.0;
    double alpha = 0.0;
    int n_max = 0;
    std::vector<double> amp0; // per degree, index n-1
    std::vector<double> amp1;
    bool h_half_divergent = false;

    // per-degree contribution to S = sum n^{2 sigma} u0^2 + n^{2(sigma-1)} u1^2
    double degree_term(int n) const;
    double S() const;          // canonical left-fold over degrees
    double S_low(int N) const; // degrees n <= N, prefix of the same fold
    double S_tail(int N) const { return S() - S_low(N); } // so S_low + S_tail == S exactly
};

CoefficientProfile make_profile(double sigma, double alpha, int n_max);

enum class DrawDistribution { gaussian, rademacher };

struct RandomDraw {
    DrawDistribution dist = DrawDistribution::gaussian;
    std::vector<double> a; // flat over (n,k), same layout as SphereField
    std::vector<double> b;
};

RandomDraw sample_draw(int n_max, DrawDistribution dist, Rng& rng);

// u0 = sum amp0(n) a_{n,k} e_{n,k}, u1 = sum amp1(n) b_{n,k} e_{n,k},
// expressed in reference coefficients through the per-degree rotations.
// rotations may be null (identity: e = f) or must cover degrees 1..n_max.
StatePair draw_data(const CoefficientProfile& profile,
                    const std::vector<BasisRotation>* rotations, const RandomDraw& draw);

// Draw with amplitudes scaled by `scale` (data size knob for experiments).
StatePair draw_scaled_data(const CoefficientProfile& profile,
                           const std::vector<BasisRotation>* rotations,
                           const RandomDraw& draw, double scale);

struct DivergenceReport {
    std::vector<int> n_values;
    std::vector<double> median_norms;
    double fitted_exponent = 0.0; // slope of log(median) vs log(n_max)
};

// Median truncated H^s norm of u0 as a function of the truncation; a positive
// fitted growth exponent is the statistical shadow of divergence.
DivergenceReport sobolev_divergence_stat(const CoefficientProfile& profile, double s,
                                         const std::vector<int>& n_sweep, int draws,
                                         uint64_t seed);

} // namespace pnlw
