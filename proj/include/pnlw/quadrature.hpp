#pragma once

#include <vector>
#include <cstddef>

namespace pnlw {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    size_t size() const { return nodes.size(); }
};

// Gauss-Legendre rule on [-1, 1], exact for polynomials of degree <= 2m-1.
Rule1D gauss_legendre(int m);

// Same rule mapped to [a, b].
Rule1D gauss_legendre(int m, double a, double b);

// Composite Gauss-Legendre: n_panels equal panels of order m over [a, b].
Rule1D gauss_legendre_panels(int m, double a, double b, int n_panels);

// Gauss-Chebyshev (second kind): nodes x_i = cos(i pi/(m+1)),
// weights pi/(m+1) sin^2(i pi/(m+1)); exact for
// integral f(x) sqrt(1-x^2) dx with f of degree <= 2m-1.
Rule1D chebyshev2(int m);

// Order-insensitive reduction with a fixed tree shape, so sums do not depend
// on how work was chunked.
double pairwise_sum(const double* x, size_t n);
double pairwise_sum(const std::vector<double>& x);

} // namespace pnlw
