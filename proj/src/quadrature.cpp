#include "pnlw/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pnlw {

Rule1D gauss_legendre(int m) {
    if (m < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    Rule1D rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    const double pi = 3.14159265358979323846;
    // Newton iteration from the Chebyshev-angle initial guess; symmetric pairs.
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < m; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = m * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[m - 1 - i] = x;
        rule.weights[m - 1 - i] = w;
    }
    return rule;
}

Rule1D gauss_legendre(int m, double a, double b) {
    Rule1D base = gauss_legendre(m);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < m; ++i) {
        base.nodes[i] = mid + half * base.nodes[i];
        base.weights[i] *= half;
    }
    return base;
}

Rule1D gauss_legendre_panels(int m, double a, double b, int n_panels) {
    if (n_panels < 1) throw std::invalid_argument("gauss_legendre_panels: n_panels must be >= 1");
    Rule1D base = gauss_legendre(m);
    Rule1D rule;
    rule.nodes.reserve(static_cast<size_t>(m) * n_panels);
    rule.weights.reserve(static_cast<size_t>(m) * n_panels);
    const double h = (b - a) / n_panels;
    for (int p = 0; p < n_panels; ++p) {
        const double mid = a + (p + 0.5) * h, half = 0.5 * h;
        for (int i = 0; i < m; ++i) {
            rule.nodes.push_back(mid + half * base.nodes[i]);
            rule.weights.push_back(half * base.weights[i]);
        }
    }
    return rule;
}

Rule1D chebyshev2(int m) {
    if (m < 1) throw std::invalid_argument("chebyshev2: order must be >= 1");
    Rule1D rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    const double pi = 3.14159265358979323846;
    for (int i = 1; i <= m; ++i) {
        const double a = i * pi / (m + 1);
        const double s = std::sin(a);
        rule.nodes[i - 1] = std::cos(a);
        rule.weights[i - 1] = pi / (m + 1) * s * s;
    }
    return rule;
}

double pairwise_sum(const double* x, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

} // namespace pnlw
