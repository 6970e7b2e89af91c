#include "pnlw/random_data.hpp"

#include <cmath>
#include <stdexcept>

#include "pnlw/parallel.hpp"
#include "pnlw/stats.hpp"

namespace pnlw {

double CoefficientProfile::degree_term(int n) const {
    const double u0 = amp0[static_cast<size_t>(n - 1)];
    const double u1 = amp1[static_cast<size_t>(n - 1)];
    const double nn = static_cast<double>(n);
    return nn * nn *
           (std::pow(nn, 2.0 * sigma) * u0 * u0 + std::pow(nn, 2.0 * (sigma - 1.0)) * u1 * u1);
}

double CoefficientProfile::S() const { return S_low(n_max); }

double CoefficientProfile::S_low(int N) const {
    double acc = 0.0;
    for (int n = 1; n <= std::min(N, n_max); ++n) acc += degree_term(n);
    return acc;
}

CoefficientProfile make_profile(double sigma, double alpha, int n_max) {
    if (sigma < 0.0 || sigma >= 0.5)
        throw std::invalid_argument("make_profile: sigma must lie in [0, 1/2)");
    if (n_max < 1) throw std::invalid_argument("make_profile: n_max must be >= 1");
    // sum_n n^2 n^{2 sigma} n^{-2 alpha} converges iff alpha > sigma + 3/2
    if (alpha <= sigma + 1.5)
        throw std::invalid_argument("make_profile: alpha too small, sigma-level sum diverges");
    CoefficientProfile p;
    p.sigma = sigma;
    p.alpha = alpha;
    p.n_max = n_max;
    p.amp0.resize(static_cast<size_t>(n_max));
    p.amp1.resize(static_cast<size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        p.amp0[static_cast<size_t>(n - 1)] = std::pow(static_cast<double>(n), -alpha);
        p.amp1[static_cast<size_t>(n - 1)] = std::pow(static_cast<double>(n), 1.0 - alpha);
    }
    // sum_n n * n^2 * n^{-2 alpha} diverges iff 3 - 2 alpha >= -1
    p.h_half_divergent = (alpha <= 2.0);
    return p;
}

RandomDraw sample_draw(int n_max, DrawDistribution dist, Rng& rng) {
    RandomDraw d;
    d.dist = dist;
    const size_t n_modes = static_cast<size_t>(SphereField::modes_up_to(n_max));
    d.a.resize(n_modes);
    d.b.resize(n_modes);
    for (size_t i = 0; i < n_modes; ++i)
        d.a[i] = (dist == DrawDistribution::gaussian) ? rng.gaussian() : rng.rademacher();
    for (size_t i = 0; i < n_modes; ++i)
        d.b[i] = (dist == DrawDistribution::gaussian) ? rng.gaussian() : rng.rademacher();
    return d;
}

StatePair draw_scaled_data(const CoefficientProfile& profile,
                           const std::vector<BasisRotation>* rotations,
                           const RandomDraw& draw, double scale) {
    const int n_max = profile.n_max;
    if (draw.a.size() < static_cast<size_t>(SphereField::modes_up_to(n_max)))
        throw std::invalid_argument("draw_data: draw does not cover n_max");
    if (rotations) {
        if (rotations->size() < static_cast<size_t>(n_max))
            throw std::invalid_argument("draw_data: missing rotation for some degree");
        for (int n = 1; n <= n_max; ++n)
            if ((*rotations)[static_cast<size_t>(n - 1)].dim != n * n)
                throw std::invalid_argument("draw_data: rotation dimension mismatch");
    }
    StatePair state(n_max);
    std::vector<double> e_coeffs, ref_coeffs;
    for (int n = 1; n <= n_max; ++n) {
        const int dim = n * n;
        const int base = SphereField::flat_index(n, 1);
        const double a0 = scale * profile.amp0[static_cast<size_t>(n - 1)];
        const double a1 = scale * profile.amp1[static_cast<size_t>(n - 1)];
        e_coeffs.resize(static_cast<size_t>(dim));
        ref_coeffs.resize(static_cast<size_t>(dim));
        for (int k = 0; k < dim; ++k) e_coeffs[k] = a0 * draw.a[static_cast<size_t>(base + k)];
        if (rotations)
            rotate_block_to_reference((*rotations)[static_cast<size_t>(n - 1)], e_coeffs.data(),
                                      ref_coeffs.data());
        else
            ref_coeffs = e_coeffs;
        for (int k = 0; k < dim; ++k) state.pos.coeffs[static_cast<size_t>(base + k)] = ref_coeffs[k];
        for (int k = 0; k < dim; ++k) e_coeffs[k] = a1 * draw.b[static_cast<size_t>(base + k)];
        if (rotations)
            rotate_block_to_reference((*rotations)[static_cast<size_t>(n - 1)], e_coeffs.data(),
                                      ref_coeffs.data());
        else
            ref_coeffs = e_coeffs;
        for (int k = 0; k < dim; ++k) state.vel.coeffs[static_cast<size_t>(base + k)] = ref_coeffs[k];
    }
    return state;
}

StatePair draw_data(const CoefficientProfile& profile,
                    const std::vector<BasisRotation>* rotations, const RandomDraw& draw) {
    return draw_scaled_data(profile, rotations, draw, 1.0);
}

DivergenceReport sobolev_divergence_stat(const CoefficientProfile& profile, double s,
                                         const std::vector<int>& n_sweep, int draws,
                                         uint64_t seed) {
    if (s < profile.sigma)
        throw std::invalid_argument("sobolev_divergence_stat: s must be >= sigma");
    for (int N : n_sweep)
        if (N < 1 || N > profile.n_max)
            throw std::invalid_argument("sobolev_divergence_stat: sweep exceeds profile n_max");
    DivergenceReport report;
    report.n_values = n_sweep;
    report.median_norms.resize(n_sweep.size());
    std::vector<std::vector<double>> norms(n_sweep.size(),
                                           std::vector<double>(static_cast<size_t>(draws)));
    parallel_for(static_cast<size_t>(draws), [&](size_t i) {
        Rng rng = Rng::stream(seed, "sobolev-divergence", i);
        RandomDraw d = sample_draw(profile.n_max, DrawDistribution::gaussian, rng);
        // truncated H^s norms share one draw across the sweep
        for (size_t j = 0; j < n_sweep.size(); ++j) {
            const int N = n_sweep[j];
            double acc = 0.0;
            for (int n = 1; n <= N; ++n) {
                const double amp = profile.amp0[static_cast<size_t>(n - 1)];
                const double mult = std::pow(static_cast<double>(n), 2.0 * s);
                const int base = SphereField::flat_index(n, 1);
                for (int k = 0; k < n * n; ++k) {
                    const double c = amp * d.a[static_cast<size_t>(base + k)];
                    acc += mult * c * c;
                }
            }
            norms[j][i] = std::sqrt(acc);
        }
    });
    bool all_zero = true;
    for (size_t j = 0; j < n_sweep.size(); ++j) {
        report.median_norms[j] = median_of(norms[j]);
        if (report.median_norms[j] > 0.0) all_zero = false;
    }
    if (all_zero || n_sweep.size() < 2) {
        report.fitted_exponent = 0.0;
        return report;
    }
    std::vector<double> x, y;
    for (size_t j = 0; j < n_sweep.size(); ++j) {
        x.push_back(std::log(static_cast<double>(n_sweep[j])));
        y.push_back(std::log(report.median_norms[j]));
    }
    report.fitted_exponent = fit_line(x, y).slope;
    return report;
}

} // namespace pnlw
