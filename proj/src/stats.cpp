#include "pnlw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pnlw/quadrature.hpp"

namespace pnlw {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need two samples of equal size >= 2");
    const size_t n = x.size();
    double sx = 0, sy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r_squared = (syy > 0) ? 1.0 - ss_res / syy : 1.0;
    if (n > 2) f.slope_stderr = std::sqrt(ss_res / ((n - 2) * sxx));
    return f;
}

double wilson_half_width(double p_hat, long n, double z) {
    if (n <= 0) return 1.0;
    const double z2 = z * z;
    return z * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
}

double wilson_upper(double p_hat, long n, double z) {
    if (n <= 0) return 1.0;
    const double z2 = z * z;
    const double center = (p_hat + z2 / (2.0 * n)) / (1.0 + z2 / n);
    return center + wilson_half_width(p_hat, n, z);
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median_of: empty sample");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BootstrapCI bootstrap_median_ci(const std::vector<double>& values, int n_resamples,
                                double level, Rng& rng) {
    if (values.empty()) throw std::invalid_argument("bootstrap_median_ci: empty sample");
    std::vector<double> meds(n_resamples);
    std::vector<double> resample(values.size());
    for (int b = 0; b < n_resamples; ++b) {
        for (size_t i = 0; i < values.size(); ++i)
            resample[i] = values[static_cast<size_t>(rng.uniform() * values.size())];
        meds[b] = median_of(resample);
    }
    std::sort(meds.begin(), meds.end());
    const double alpha = 1.0 - level;
    const auto pick = [&](double q) {
        const double idx = q * (n_resamples - 1);
        const size_t lo = static_cast<size_t>(idx);
        const size_t hi = std::min<size_t>(lo + 1, n_resamples - 1);
        return meds[lo] + (idx - lo) * (meds[hi] - meds[lo]);
    };
    return {pick(alpha / 2.0), pick(1.0 - alpha / 2.0)};
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample_pvalue: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double va = a[ia], vb = b[ib];
        if (va <= vb) ++ia;
        if (vb <= va) ++ib;
        d = std::max(d, std::abs(ia / na - ib / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    // Kolmogorov tail series.
    double p = 0.0, sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
        p += term;
        sign = -sign;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean_of: empty sample");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("stddev_of: need >= 2 samples");
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

} // namespace pnlw
