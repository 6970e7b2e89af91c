#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pnlw/rng.hpp"
#include "pnlw/sphere_harmonics.hpp"
#include "pnlw/stats.hpp"

namespace pnlw {

// Orthogonal change of basis of one eigenspace: e_{n,k} = sum_j Q_{jk} f_{n,j}.
struct BasisRotation {
    int degree = 0; // 0 when the matrix is not attached to an eigenspace
    int dim = 0;
    std::vector<double> q; // row-major dim x dim
    uint64_t master_seed = 0;
    uint64_t draw_index = 0;

    double entry(int i, int j) const { return q[static_cast<size_t>(i) * dim + j]; }
};

// Haar draw on O(N): QR of an i.i.d. standard normal matrix, with the sign of
// the R diagonal absorbed into Q so the factorization is the unique one with
// positive diagonal.
BasisRotation sample_haar(int N, Rng& rng);

double max_orthogonality_error(const BasisRotation& rot); // max |Q^T Q - I|
double determinant(const BasisRotation& rot);

// Column k (1-based) of the rotation as a field in E_n, n = rot.degree.
SphereField basis_vector_field(const BasisRotation& rot, int k);

// Reference coefficients of a degree-n block given e-basis coefficients.
void rotate_block_to_reference(const BasisRotation& rot, const double* e_coeffs,
                               double* ref_coeffs);

struct TailEstimate {
    std::vector<double> levels;
    std::vector<double> survival;
    std::vector<double> wilson_half; // 99% half-widths
    long n_samples = 0;
};

struct MedianEstimate {
    int n = 0;
    double q = 0.0;
    double median = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    long n_samples = 0;
};

inline constexpr int kMaxQuadratureDegree = 256;

// L^q norms of u drawn uniformly on the unit sphere of E_n (first column of a
// Haar draw, realized as a normalized gaussian vector).
std::vector<double> sample_block_lq_norms(int n, double q, int n_samples, uint64_t seed);

MedianEstimate estimate_median_lq(int n, double q, int n_samples, uint64_t seed);

// Empirical exceedance of |  ||u||_{L^q} - M_{n,q}  | at the given levels.
TailEstimate empirical_tail(int n, double q, const std::vector<double>& levels,
                            int n_samples, uint64_t seed);

// Same, with levels taken from deviation quantiles of a pilot quarter of the
// sample and survival scored on the rest.
TailEstimate empirical_tail_auto(int n, double q, int n_samples, uint64_t seed);

// Rate of the fitted envelope exp(-c r^2): negated slope of log(survival)
// against level^2 over the survival window [s_min, s_max].
std::optional<double> fitted_tail_rate(const TailEstimate& tail, double s_min = 1e-3,
                                       double s_max = 0.5);

// max over draws and the zonal witness of ||u||_q / ||u||_2 / n^{1-2/q}.
double bernstein_ratio(int n, double q, int n_samples, uint64_t seed);

// Survival of |x_1| for x uniform on S^{N-1}.
TailEstimate coordinate_tail_check(int N, const std::vector<double>& t_levels,
                                   int n_samples, uint64_t seed);

// ( E ||u||_{L^q}^q )^{1/q} over uniform draws on the unit sphere of E_n.
double lq_moment(int n, double q, int n_samples, uint64_t seed);

struct UniformBasisResult {
    bool success = false;
    int first_failed_degree = 0;
    std::vector<BasisRotation> rotations;   // per degree 1..n_max on success
    std::vector<int> attempts_used;         // per degree
    std::vector<double> acceptance_rate;    // per degree
};

// Rejection search for rotations making every basis vector satisfy
// ||e_{n,k}||_{L^q} <= C sqrt(q) for all q in q_list.
UniformBasisResult search_uniform_basis(int n_max, const std::vector<double>& q_list,
                                        double bound_constant, int max_attempts,
                                        uint64_t seed);

void save_rotation_csv(const BasisRotation& rot, const std::string& path);
void save_tail_csv(const TailEstimate& tail, const std::string& path);

} // namespace pnlw
