#include "pnlw/linear_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pnlw/errors.hpp"
#include "pnlw/parallel.hpp"
#include "pnlw/quadrature.hpp"

namespace pnlw {

namespace {
constexpr double kTwoPi = 6.28318530717958647692528676656;
} // namespace

StatePair evolve_linear(const StatePair& state, double T) {
    StatePair out(state.n_max());
    for (int n = 1; n <= state.n_max(); ++n) {
        const double c = std::cos(n * T);
        const double s = std::sin(n * T);
        const double so = s / n;
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) {
            const double p = state.pos.coeffs[static_cast<size_t>(base + k)];
            const double v = state.vel.coeffs[static_cast<size_t>(base + k)];
            out.pos.coeffs[static_cast<size_t>(base + k)] = c * p + so * v;
            out.vel.coeffs[static_cast<size_t>(base + k)] = -n * s * p + c * v;
        }
    }
    return out;
}

SphereField project_field(const SphereField& f, int N, bool high) {
    SphereField out = f;
    for (int n = 1; n <= f.n_max; ++n) {
        const bool keep = high ? (n > N) : (n <= N);
        if (keep) continue;
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) out.coeffs[static_cast<size_t>(base + k)] = 0.0;
    }
    return out;
}

StatePair apply_projection(const StatePair& state, int N, bool high) {
    StatePair out;
    out.pos = project_field(state.pos, N, high);
    out.vel = project_field(state.vel, N, high);
    return out;
}

namespace {

// Panels over one period with geometric grading into both endpoints: the
// folded weight has |s|^delta cusps at s = 0 and s = 2 pi (the j = 0 and
// j = -1 lattice terms), which uniform panels resolve poorly.
Rule1D graded_period_rule(int gl_order, int n_uniform) {
    const Rule1D base = gauss_legendre(gl_order);
    const double width = kTwoPi / n_uniform;
    const int n_graded = 12;
    const double ratio = 3.0;
    std::vector<std::pair<double, double>> panels;
    // first uniform panel subdivided toward s = 0
    {
        double hi = width;
        for (int i = 0; i < n_graded - 1; ++i) {
            panels.emplace_back(hi / ratio, hi);
            hi /= ratio;
        }
        panels.emplace_back(0.0, hi);
    }
    for (int k = 1; k < n_uniform - 1; ++k)
        panels.emplace_back(k * width, (k + 1) * width);
    // last uniform panel subdivided toward s = 2 pi
    {
        double lo = kTwoPi - width;
        double gap = width;
        for (int i = 0; i < n_graded - 1; ++i) {
            panels.emplace_back(lo, kTwoPi - gap / ratio);
            lo = kTwoPi - gap / ratio;
            gap /= ratio;
        }
        panels.emplace_back(lo, kTwoPi);
    }
    Rule1D rule;
    for (const auto& [a, b] : panels) {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (size_t i = 0; i < base.size(); ++i) {
            rule.nodes.push_back(mid + half * base.nodes[i]);
            rule.weights.push_back(half * base.weights[i]);
        }
    }
    return rule;
}

// int_{c}^{inf} [(1+(2 pi x + s)^d)^{-r} + (1+(2 pi x - s)^d)^{-r}] dx
// via x = c/u on u in (0,1].
double weight_tail_integral(double c, double s, double delta, double r) {
    static const Rule1D rule = gauss_legendre(64, 0.0, 1.0);
    double acc = 0.0;
    for (size_t i = 0; i < rule.size(); ++i) {
        const double u = rule.nodes[i];
        const double x = c / u;
        const double gp = std::pow(1.0 + std::pow(kTwoPi * x + s, delta), -r);
        const double gm = std::pow(1.0 + std::pow(kTwoPi * x - s, delta), -r);
        acc += rule.weights[i] * (gp + gm) * c / (u * u);
    }
    return acc;
}

} // namespace

WeightedNormEvaluator::WeightedNormEvaluator(const SphereContext& ctx, WeightedNormSpec spec,
                                             int n_panels, int gl_order)
    : ctx_(&ctx), spec_(spec) {
    if (spec.r < 1.0) throw std::invalid_argument("WeightedNormEvaluator: r must be >= 1");
    if (!std::isinf(spec.p) && spec.p < 1.0)
        throw std::invalid_argument("WeightedNormEvaluator: p must be >= 1");
    if (spec.delta * spec.r <= 1.05)
        throw std::invalid_argument("WeightedNormEvaluator: weight not integrable in time");
    const Rule1D rule = graded_period_rule(gl_order, n_panels);
    s_nodes_ = rule.nodes;
    s_weights_ = rule.weights;

    // The window only sets the explicit part of the lattice sum; it is grown
    // until the neglected tail (half the sandwich gap of the integral
    // estimate) is below tolerance relative to the whole weight integral.
    long J = std::max<long>(2, static_cast<long>(std::ceil(spec.t_window / kTwoPi)));
    for (int attempt = 0;; ++attempt) {
        folded_w_.assign(s_nodes_.size(), 0.0);
        double unc_int = 0.0, whole_int = 0.0;
        for (size_t i = 0; i < s_nodes_.size(); ++i) {
            const double s = s_nodes_[i];
            double w = std::pow(1.0 + std::pow(std::abs(s), spec.delta), -spec.r);
            for (long j = 1; j <= J; ++j) {
                w += std::pow(1.0 + std::pow(kTwoPi * j + s, spec.delta), -spec.r);
                w += std::pow(1.0 + std::pow(kTwoPi * j - s, spec.delta), -spec.r);
            }
            const double tail = weight_tail_integral(J + 0.5, s, spec.delta, spec.r);
            const double uncertainty =
                0.5 * (std::pow(1.0 + std::pow(kTwoPi * J + s, spec.delta), -spec.r) +
                       std::pow(1.0 + std::pow(kTwoPi * J - s, spec.delta), -spec.r));
            w += tail;
            folded_w_[i] = w;
            unc_int += s_weights_[i] * uncertainty;
            whole_int += s_weights_[i] * w;
        }
        tail_rel_ = unc_int / whole_int;
        spec_.t_window = kTwoPi * static_cast<double>(J);
        if (tail_rel_ <= spec.tail_tolerance) break;
        if (attempt >= 12)
            throw resolution_error("WeightedNormEvaluator: window tail above tolerance");
        J *= 2;
    }

    const int L = ctx.tables.n_max();
    cos_tab_.resize(s_nodes_.size() * static_cast<size_t>(L));
    sin_over_n_tab_.resize(cos_tab_.size());
    for (size_t i = 0; i < s_nodes_.size(); ++i) {
        for (int n = 1; n <= L; ++n) {
            cos_tab_[i * L + (n - 1)] = std::cos(n * s_nodes_[i]);
            sin_over_n_tab_[i * L + (n - 1)] = std::sin(n * s_nodes_[i]) / n;
        }
    }
    if (std::isinf(spec.p)) {
        fine_grid_ = std::make_unique<SphereGrid>(
            SphereGrid::for_degree(ctx.grid.exactness_degree * 2 + 8));
        fine_plan_ = std::make_unique<TransformPlan>(ctx.tables, *fine_grid_);
    }
}

double WeightedNormEvaluator::eval(const StatePair& data, Projection proj, int cutoff) const {
    const int L = ctx_->tables.n_max();
    if (data.n_max() > L) throw std::invalid_argument("eval: data exceeds context n_max");
    SphereField pos_t(data.n_max());
    double acc = 0.0;
    double delta_worst = 0.0;
    for (size_t i = 0; i < s_nodes_.size(); ++i) {
        for (int n = 1; n <= data.n_max(); ++n) {
            const bool zero = (proj == Projection::low_pass && n > cutoff) ||
                              (proj == Projection::high_pass && n <= cutoff);
            const int base = SphereField::flat_index(n, 1);
            if (zero) {
                for (int k = 0; k < n * n; ++k) pos_t.coeffs[static_cast<size_t>(base + k)] = 0.0;
                continue;
            }
            const double c = cos_tab_[i * L + (n - 1)];
            const double so = sin_over_n_tab_[i * L + (n - 1)];
            for (int k = 0; k < n * n; ++k)
                pos_t.coeffs[static_cast<size_t>(base + k)] =
                    c * data.pos.coeffs[static_cast<size_t>(base + k)] +
                    so * data.vel.coeffs[static_cast<size_t>(base + k)];
        }
        const GridValues v = ctx_->plan.synthesize(pos_t);
        double sp = lp_norm(v, spec_.p, ctx_->grid);
        if (fine_plan_) {
            const double sp_fine = lp_norm(fine_plan_->synthesize(pos_t), spec_.p, *fine_grid_);
            if (sp > 0.0) delta_worst = std::max(delta_worst, std::abs(sp_fine - sp) / std::max(sp, sp_fine));
            sp = std::max(sp, sp_fine);
        }
        acc += s_weights_[i] * folded_w_[i] * std::pow(sp, spec_.r);
    }
    linf_delta_ = delta_worst;
    return std::pow(acc, 1.0 / spec_.r);
}

double weighted_spacetime_norm(const SphereContext& ctx, const StatePair& data,
                               const WeightedNormSpec& spec) {
    return WeightedNormEvaluator(ctx, spec).eval(data);
}

TailExperimentResult tail_experiment(const SphereContext& ctx, const CoefficientProfile& profile,
                                     const std::vector<BasisRotation>* rotations,
                                     const TailExperimentConfig& cfg) {
    WeightedNormSpec spec;
    WeightedNormEvaluator::Projection proj = WeightedNormEvaluator::Projection::none;
    switch (cfg.regime) {
        case 1:
            spec = WeightedNormSpec::for_time_exponent(cfg.p_m, cfg.p_m);
            proj = WeightedNormEvaluator::Projection::high_pass;
            break;
        case 2:
            spec = WeightedNormSpec::for_time_exponent(3.0, 6.0);
            break;
        case 3:
            spec = WeightedNormSpec::for_time_exponent(1.0, std::numeric_limits<double>::infinity());
            proj = WeightedNormEvaluator::Projection::low_pass;
            break;
        default:
            throw std::invalid_argument("tail_experiment: regime must be 1, 2 or 3");
    }
    const WeightedNormEvaluator evaluator(ctx, spec);
    std::vector<double> values(static_cast<size_t>(cfg.n_draws));
    parallel_for(values.size(), [&](size_t i) {
        Rng rng = Rng::stream(cfg.seed, "tail-experiment", i);
        const RandomDraw draw = sample_draw(profile.n_max, cfg.dist, rng);
        const StatePair data = draw_scaled_data(profile, rotations, draw, cfg.amplitude_scale);
        values[i] = evaluator.eval(data, proj, cfg.cutoff);
    });

    std::vector<double> levels = cfg.levels;
    std::vector<double> scored;
    if (levels.empty()) {
        // quantile levels from a pilot batch, survival scored on the rest
        const size_t pilot = std::max<size_t>(50, values.size() / 10);
        std::vector<double> head(values.begin(), values.begin() + pilot);
        std::sort(head.begin(), head.end());
        const double qs[] = {0.5, 0.65, 0.78, 0.88, 0.94, 0.97, 0.985, 0.993, 0.997, 0.999};
        for (double q : qs) {
            const double lv = head[std::min(head.size() - 1, static_cast<size_t>(q * head.size()))];
            if (levels.empty() || lv > levels.back()) levels.push_back(lv);
        }
        scored.assign(values.begin() + pilot, values.end());
    } else {
        for (size_t i = 0; i + 1 < levels.size(); ++i)
            if (levels[i + 1] <= levels[i])
                throw std::invalid_argument("tail_experiment: levels must be increasing");
        scored = values;
    }
    TailExperimentResult result;
    result.spec = spec;
    result.values = scored;
    result.tail.levels = levels;
    result.tail.n_samples = static_cast<long>(scored.size());
    for (double lv : levels) {
        long count = 0;
        for (double v : scored)
            if (v >= lv) ++count;
        const double p = static_cast<double>(count) / scored.size();
        result.tail.survival.push_back(p);
        result.tail.wilson_half.push_back(wilson_half_width(p, result.tail.n_samples, kZ99));
    }
    return result;
}

} // namespace pnlw
