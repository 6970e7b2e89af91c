#include "pnlw/random_basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pnlw/csv.hpp"
#include "pnlw/errors.hpp"
#include "pnlw/parallel.hpp"

namespace pnlw {

namespace {

// Householder QR in place; returns the signs of the R diagonal.
std::vector<double> householder_qr(std::vector<double>& a, int n, std::vector<double>& q) {
    std::vector<double> v(n), diag_sign(n, 1.0);
    q.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) q[static_cast<size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        double norm = 0.0;
        for (int i = col; i < n; ++i) {
            v[i] = a[static_cast<size_t>(i) * n + col];
            norm += v[i] * v[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = (v[col] >= 0.0) ? -norm : norm;
        v[col] -= alpha;
        double vnorm2 = 0.0;
        for (int i = col; i < n; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) {
            diag_sign[col] = (alpha >= 0.0) ? 1.0 : -1.0;
            continue;
        }
        // apply H = I - 2 v v^T / (v^T v) to A (left) and accumulate into Q (right)
        for (int j = col; j < n; ++j) {
            double dot = 0.0;
            for (int i = col; i < n; ++i) dot += v[i] * a[static_cast<size_t>(i) * n + j];
            const double f = 2.0 * dot / vnorm2;
            for (int i = col; i < n; ++i) a[static_cast<size_t>(i) * n + j] -= f * v[i];
        }
        for (int i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int j = col; j < n; ++j) dot += q[static_cast<size_t>(i) * n + j] * v[j];
            const double f = 2.0 * dot / vnorm2;
            for (int j = col; j < n; ++j) q[static_cast<size_t>(i) * n + j] -= f * v[j];
        }
        diag_sign[col] = (a[static_cast<size_t>(col) * n + col] >= 0.0) ? 1.0 : -1.0;
    }
    return diag_sign;
}

int degree_for_lq(int n, double q) {
    const double needed = std::ceil(q) * (n - 1);
    if (needed > kMaxQuadratureDegree)
        throw resolution_error("quadrature degree for L^q norm on E_n exceeds cap");
    return std::max(2 * (n - 1), static_cast<int>(needed));
}

struct BlockNormContext {
    BasisTables tables;
    SphereGrid grid;
    TransformPlan plan;
    int n;

    BlockNormContext(int n_, int degree)
        : tables(n_), grid(SphereGrid::for_degree(degree)), plan(tables, grid), n(n_) {}

    double lq(const std::vector<double>& block_coeffs, double q) const {
        SphereField f(n);
        const int base = SphereField::flat_index(n, 1);
        for (int k = 0; k < n * n; ++k) f.coeffs[static_cast<size_t>(base + k)] = block_coeffs[k];
        return lp_norm(plan.synthesize(f), q, grid);
    }
};

std::vector<double> unit_sphere_draw(int dim, Rng& rng) {
    std::vector<double> x(dim);
    double norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        x[i] = rng.gaussian();
        norm2 += x[i] * x[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : x) v *= inv;
    return x;
}

} // namespace

BasisRotation sample_haar(int N, Rng& rng) {
    if (N < 1) throw std::invalid_argument("sample_haar: N must be >= 1");
    BasisRotation rot;
    rot.dim = N;
    const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(N))));
    rot.degree = (root * root == N) ? root : 0;
    std::vector<double> a(static_cast<size_t>(N) * N);
    for (auto& v : a) v = rng.gaussian();
    std::vector<double> q;
    const std::vector<double> sign = householder_qr(a, N, q);
    // scale columns so the implicit R has positive diagonal
    for (int j = 0; j < N; ++j)
        if (sign[j] < 0.0)
            for (int i = 0; i < N; ++i) q[static_cast<size_t>(i) * N + j] = -q[static_cast<size_t>(i) * N + j];
    rot.q = std::move(q);
    return rot;
}

double max_orthogonality_error(const BasisRotation& rot) {
    const int n = rot.dim;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double dot = 0.0;
            for (int r = 0; r < n; ++r) dot += rot.entry(r, i) * rot.entry(r, j);
            worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

double determinant(const BasisRotation& rot) {
    const int n = rot.dim;
    std::vector<double> a = rot.q;
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int i = col + 1; i < n; ++i)
            if (std::abs(a[static_cast<size_t>(i) * n + col]) >
                std::abs(a[static_cast<size_t>(pivot) * n + col]))
                pivot = i;
        if (pivot != col) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<size_t>(pivot) * n + j], a[static_cast<size_t>(col) * n + j]);
            det = -det;
        }
        const double d = a[static_cast<size_t>(col) * n + col];
        if (d == 0.0) return 0.0;
        det *= d;
        for (int i = col + 1; i < n; ++i) {
            const double f = a[static_cast<size_t>(i) * n + col] / d;
            for (int j = col; j < n; ++j)
                a[static_cast<size_t>(i) * n + j] -= f * a[static_cast<size_t>(col) * n + j];
        }
    }
    return det;
}

SphereField basis_vector_field(const BasisRotation& rot, int k) {
    const int n = rot.degree;
    if (n < 1 || rot.dim != n * n)
        throw std::invalid_argument("basis_vector_field: rotation is not a degree block");
    if (k < 1 || k > rot.dim) throw std::invalid_argument("basis_vector_field: k out of range");
    SphereField f(n);
    const int base = SphereField::flat_index(n, 1);
    for (int j = 0; j < rot.dim; ++j)
        f.coeffs[static_cast<size_t>(base + j)] = rot.entry(j, k - 1);
    return f;
}

void rotate_block_to_reference(const BasisRotation& rot, const double* e_coeffs,
                               double* ref_coeffs) {
    const int n = rot.dim;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += rot.entry(i, j) * e_coeffs[j];
        ref_coeffs[i] = acc;
    }
}

std::vector<double> sample_block_lq_norms(int n, double q, int n_samples, uint64_t seed) {
    if (q < 2.0) throw std::invalid_argument("sample_block_lq_norms: q must be >= 2");
    BlockNormContext ctx(n, degree_for_lq(n, q));
    std::vector<double> norms(static_cast<size_t>(n_samples));
    parallel_for(static_cast<size_t>(n_samples), [&](size_t i) {
        Rng rng = Rng::stream(seed, "block-lq", i);
        norms[i] = ctx.lq(unit_sphere_draw(n * n, rng), q);
    });
    return norms;
}

MedianEstimate estimate_median_lq(int n, double q, int n_samples, uint64_t seed) {
    if (n_samples < 100) throw std::invalid_argument("estimate_median_lq: need >= 100 samples");
    const std::vector<double> norms = sample_block_lq_norms(n, q, n_samples, seed);
    MedianEstimate est;
    est.n = n;
    est.q = q;
    est.n_samples = n_samples;
    est.median = median_of(norms);
    Rng rng = Rng::stream(seed, "median-bootstrap");
    const BootstrapCI ci = bootstrap_median_ci(norms, 1000, 0.95, rng);
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    return est;
}

TailEstimate empirical_tail(int n, double q, const std::vector<double>& levels,
                            int n_samples, uint64_t seed) {
    for (size_t i = 0; i + 1 < levels.size(); ++i)
        if (levels[i + 1] <= levels[i])
            throw std::invalid_argument("empirical_tail: levels must be increasing");
    if (!levels.empty() && levels.front() < 0.0)
        throw std::invalid_argument("empirical_tail: levels must be nonnegative");
    const std::vector<double> norms = sample_block_lq_norms(n, q, n_samples, seed);
    const double med = median_of(norms);
    TailEstimate tail;
    tail.levels = levels;
    tail.n_samples = n_samples;
    for (double r : levels) {
        long count = 0;
        for (double v : norms)
            if (std::abs(v - med) >= r) ++count;
        const double p = static_cast<double>(count) / n_samples;
        tail.survival.push_back(p);
        tail.wilson_half.push_back(wilson_half_width(p, n_samples, kZ99));
    }
    return tail;
}

TailEstimate empirical_tail_auto(int n, double q, int n_samples, uint64_t seed) {
    const std::vector<double> norms = sample_block_lq_norms(n, q, n_samples, seed);
    const size_t pilot = std::max<size_t>(50, norms.size() / 4);
    std::vector<double> head(norms.begin(), norms.begin() + pilot);
    const double med_pilot = median_of(head);
    std::vector<double> dev;
    dev.reserve(pilot);
    for (double v : head) dev.push_back(std::abs(v - med_pilot));
    std::sort(dev.begin(), dev.end());
    if (dev.back() < 1e-12 * med_pilot) {
        // degenerate concentration: the norm is constant on this eigenspace
        // (degrees 1 and 2, whose harmonics are single orbit types), so there
        // is no tail to estimate
        TailEstimate tail;
        tail.n_samples = static_cast<long>(norms.size() - pilot);
        return tail;
    }
    std::vector<double> levels;
    const double qs[] = {0.5, 0.65, 0.78, 0.88, 0.94, 0.97, 0.985, 0.993, 0.997};
    for (double qq : qs) {
        const double lv = dev[std::min(dev.size() - 1, static_cast<size_t>(qq * dev.size()))];
        if ((levels.empty() && lv > 0.0) || (!levels.empty() && lv > levels.back()))
            levels.push_back(lv);
    }
    std::vector<double> scored(norms.begin() + pilot, norms.end());
    const double med = median_of(scored);
    TailEstimate tail;
    tail.levels = levels;
    tail.n_samples = static_cast<long>(scored.size());
    for (double r : levels) {
        long count = 0;
        for (double v : scored)
            if (std::abs(v - med) >= r) ++count;
        const double p = static_cast<double>(count) / scored.size();
        tail.survival.push_back(p);
        tail.wilson_half.push_back(wilson_half_width(p, tail.n_samples, kZ99));
    }
    return tail;
}

std::optional<double> fitted_tail_rate(const TailEstimate& tail, double s_min, double s_max) {
    std::vector<double> x, y;
    for (size_t i = 0; i < tail.levels.size(); ++i) {
        const double s = tail.survival[i];
        if (s >= s_min && s <= s_max) {
            x.push_back(tail.levels[i] * tail.levels[i]);
            y.push_back(std::log(s));
        }
    }
    if (x.size() < 3) return std::nullopt;
    return -fit_line(x, y).slope;
}

double bernstein_ratio(int n, double q, int n_samples, uint64_t seed) {
    const bool inf = std::isinf(q);
    if (!inf && q < 2.0) throw std::invalid_argument("bernstein_ratio: q must be in [2, inf]");
    const int degree = inf ? std::max(2 * (n - 1), 8 * (n - 1)) : degree_for_lq(n, q);
    BlockNormContext ctx(n, degree);
    const double scale = inf ? static_cast<double>(n)
                             : std::pow(static_cast<double>(n), 1.0 - 2.0 / q);
    std::vector<double> ratios(static_cast<size_t>(n_samples));
    parallel_for(static_cast<size_t>(n_samples), [&](size_t i) {
        Rng rng = Rng::stream(seed, "bernstein", i);
        // draws are unit vectors, so ||u||_2 = 1
        ratios[i] = ctx.lq(unit_sphere_draw(n * n, rng), q) / scale;
    });
    double worst = 0.0;
    for (double r : ratios) worst = std::max(worst, r);
    // zonal witness peaks the kernel at a grid point
    const SphereField z = zonal_field(ctx.tables, n, ctx.grid.chi[0], std::acos(ctx.grid.theta_u[0]),
                                      ctx.grid.phi_at(0));
    const GridValues zv = ctx.plan.synthesize(z);
    const double zr = lp_norm(zv, q, ctx.grid) / (z.l2_norm() * scale);
    return std::max(worst, zr);
}

TailEstimate coordinate_tail_check(int N, const std::vector<double>& t_levels,
                                   int n_samples, uint64_t seed) {
    if (N < 2) throw std::invalid_argument("coordinate_tail_check: N must be >= 2");
    std::vector<double> x1(static_cast<size_t>(n_samples));
    parallel_for(static_cast<size_t>(n_samples), [&](size_t i) {
        Rng rng = Rng::stream(seed, "coordinate-tail", i);
        x1[i] = std::abs(unit_sphere_draw(N, rng)[0]);
    });
    TailEstimate tail;
    tail.levels = t_levels;
    tail.n_samples = n_samples;
    for (double t : t_levels) {
        long count = 0;
        for (double v : x1)
            if (v > t) ++count;
        const double p = static_cast<double>(count) / n_samples;
        tail.survival.push_back(p);
        tail.wilson_half.push_back(wilson_half_width(p, n_samples, kZ99));
    }
    return tail;
}

double lq_moment(int n, double q, int n_samples, uint64_t seed) {
    const std::vector<double> norms = sample_block_lq_norms(n, q, n_samples, seed);
    double acc = 0.0;
    for (double v : norms) acc += std::pow(v, q);
    return std::pow(acc / n_samples, 1.0 / q);
}

UniformBasisResult search_uniform_basis(int n_max, const std::vector<double>& q_list,
                                        double bound_constant, int max_attempts,
                                        uint64_t seed) {
    UniformBasisResult result;
    double q_max = 2.0;
    for (double q : q_list) q_max = std::max(q_max, q);
    for (int n = 1; n <= n_max; ++n) {
        BlockNormContext ctx(n, degree_for_lq(n, q_max));
        bool accepted = false;
        int attempt = 0;
        std::vector<double> col(static_cast<size_t>(n) * n);
        for (; attempt < max_attempts && !accepted; ++attempt) {
            Rng rng = Rng::stream(seed, "uniform-basis", (static_cast<uint64_t>(n) << 32) | attempt);
            BasisRotation rot = sample_haar(n * n, rng);
            rot.degree = n;
            rot.master_seed = seed;
            rot.draw_index = attempt;
            std::vector<char> ok(static_cast<size_t>(rot.dim), 1);
            parallel_for(static_cast<size_t>(rot.dim), [&](size_t k) {
                std::vector<double> column(static_cast<size_t>(rot.dim));
                for (int j = 0; j < rot.dim; ++j) column[j] = rot.entry(j, static_cast<int>(k));
                SphereField f(n);
                const int base = SphereField::flat_index(n, 1);
                for (int j = 0; j < rot.dim; ++j)
                    f.coeffs[static_cast<size_t>(base + j)] = column[j];
                const GridValues v = ctx.plan.synthesize(f);
                for (double q : q_list) {
                    if (lp_norm(v, q, ctx.grid) > bound_constant * std::sqrt(q)) {
                        ok[k] = 0;
                        return;
                    }
                }
            });
            accepted = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
            if (accepted) result.rotations.push_back(std::move(rot));
        }
        result.attempts_used.push_back(attempt);
        result.acceptance_rate.push_back(accepted ? 1.0 / attempt : 0.0);
        if (!accepted) {
            result.success = false;
            result.first_failed_degree = n;
            return result;
        }
    }
    result.success = true;
    return result;
}

void save_rotation_csv(const BasisRotation& rot, const std::string& path) {
    CsvWriter out(path);
    out.row({"n", std::to_string(rot.degree), "seed", std::to_string(rot.master_seed)});
    for (int i = 0; i < rot.dim; ++i) {
        std::vector<std::string> cells;
        cells.reserve(static_cast<size_t>(rot.dim));
        for (int j = 0; j < rot.dim; ++j) cells.push_back(CsvWriter::num(rot.entry(i, j)));
        out.row(cells);
    }
}

void save_tail_csv(const TailEstimate& tail, const std::string& path) {
    CsvWriter out(path);
    out.row({"level", "survival", "ci_low", "ci_high"});
    for (size_t i = 0; i < tail.levels.size(); ++i) {
        const double lo = std::max(0.0, tail.survival[i] - tail.wilson_half[i]);
        const double hi = std::min(1.0, tail.survival[i] + tail.wilson_half[i]);
        out.row({CsvWriter::num(tail.levels[i]), CsvWriter::num(tail.survival[i]),
                 CsvWriter::num(lo), CsvWriter::num(hi)});
    }
}

} // namespace pnlw
