#pragma once

#include <vector>
#include <cstdint>

#include "pnlw/rng.hpp"

namespace pnlw {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    size_t n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Wilson score interval half-width for a binomial proportion.
double wilson_half_width(double p_hat, long n, double z);
double wilson_upper(double p_hat, long n, double z);

// 99% two-sided normal quantile used throughout the tail checks.
inline constexpr double kZ99 = 2.5758293035489004;

double median_of(std::vector<double> values); // takes a copy, sorts

struct BootstrapCI {
    double low = 0.0;
    double high = 0.0;
};

// Percentile bootstrap CI of the median (resamples with replacement).
BootstrapCI bootstrap_median_ci(const std::vector<double>& values, int n_resamples,
                                double level, Rng& rng);

// Two-sample Kolmogorov-Smirnov: returns asymptotic p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

double mean_of(const std::vector<double>& values);
double stddev_of(const std::vector<double>& values); // sample standard deviation

} // namespace pnlw
