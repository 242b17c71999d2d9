#pragma once

/**
 * @file geometry.h
 * @brief Measurements on the critical Cantor set: sampled pieces B^n_w, distances, average
 *        Jacobians b_F, b_z, b_1, x-axis overlaps and the Hoelder exponent bound.
 */

#include <string>
#include <vector>

#include "renorm/scope.h"
#include "renorm/seeds.h"

namespace renorm {

/// Image of the boundary grid of B(F_n) under Psi^n_{k,w}, n = k + |w|.
struct PieceSample {
    Word word;
    int k = 0;
    int n = 0;
    std::vector<Point> hull;
    Box bbox;
};

PieceSample piece(const RenormalizationSequence& seq, const Word& word, int k = 0, int per_axis = 5);

/// Largest pairwise Euclidean distance between hull samples.
double diam(const PieceSample& p);
/// Smallest Euclidean distance between samples of p and samples of q.
double dist_min(const PieceSample& p, const PieceSample& q);

/// The 2^n points Psi^n_{0,w}(x) in word-index order (x at level n).
std::vector<Point> orbit_points(const RenormalizationSequence& seq, int n, const Point& x);

struct AverageEstimate {
    double value = 0.0;      // exp of the mean log
    double error = 0.0;      // |value(N) - value(N - 1)|
    bool degenerate = false; // some integrand was below 1e-300; value is then 0
};

/// b_F from the mean of log |Jac F_0| over the 2^N orbit points of tau_N.
AverageEstimate average_jacobian(const ScopeAnalysis& sa, int N);

struct BzEstimate {
    double orbit = 0.0;   // exp of the mean of log |det Z_0| over the orbit of tau_N
    double product = 0.0; // |det Z_N(tau_N)|^(2^-N)
    double gap = 0.0;     // |orbit - product| / orbit
};

/// Throws SingularZ when |det Z| < 1e-300 at an orbit point; for m = 0 both estimates are 1.
BzEstimate b_z(const ScopeAnalysis& sa, int N);

struct UniversalRow {
    int depth = 0;
    double b_F = 0.0, b_z_orbit = 0.0, b_z_product = 0.0, b1 = 0.0, gap = 0.0;
};

struct UniversalNumbers {
    double b_F = 0.0, b_z = 0.0, b1 = 0.0;
    double b_F_error = 0.0, b_z_gap = 0.0;
    bool degenerate = false;
    std::vector<UniversalRow> table;  // depth 1..N
    /// max_x |Jac F_n(x, 0, 0) / (b_F^(2^n) a_hat(x)) - 1| for n = 1..N-1, a_hat taken at level N
    std::vector<double> jacobian_universality;
    /// same for d_y eps_n - E_n Z_n^-1 Y_n against b_1^(2^n)
    std::vector<double> b1_universality;
    /// log a_hat(x) on the x-grid used above
    std::vector<double> a_hat_x, log_a_hat;
};

UniversalNumbers universal_numbers(const ScopeAnalysis& sa, int N, int x_points = 9);

/// sup |det DF - (d_y eps - E Z^-1 Y) det Z| over a grid where det Z != 0.
double block_determinant_residual(const HenonMap& F, int per_axis = 9);

struct OverlapReport {
    int k = 0, n = 0;
    bool overlap = false;
    double overlap_length = 0.0;   // > 0 iff the x-projections intersect
    double resonance_ratio = 0.0;  // |sigma_{n,k}| / b1^(2^k)
};

/// x-projections of Psi^n_k(B^1_v) and Psi^n_k(B^1_c) on hull samples; needs depth >= n + 1.
OverlapReport overlap_scan(const ScopeAnalysis& sa, int k, int n, double b1, int per_axis = 9);

struct GeometryRatio {
    int k = 0, n = 0;
    Word word;  // v^k c v^(n-k-1)
    double dist_min = 0.0, diam = 0.0, ratio = 0.0;
    double sigma_k = 0.0;  // |sigma|^k of the solved 1-D fixed point
};

/// dist_min(B^{n+1}_{wv}, B^{n+1}_{wc}) / diam(B^{n+1}_{wv}) for w = v^k c v^(n-k-1).
GeometryRatio geometry_ratio_scan(const RenormalizationSequence& seq, int k, int n, int per_axis = 5);

struct GeometryRow {
    int k = 0, n = 0;
    std::string word;
    double diam = 0.0, dist_min = 0.0, ratio = 0.0;
    bool overlap = false;
    double resonance_ratio = 0.0;
};

/// All pairs 0 <= k < n with n + 1 <= depth and k <= kmax, sorted by (k, n).
std::vector<GeometryRow> geometry_table(const ScopeAnalysis& sa, int kmax, double b1, int per_axis = 5);

struct SweepRow {
    double parameter = 0.0;
    double b1 = 0.0, b_F = 0.0, b_z = 0.0;
    std::vector<GeometryRow> rows;
    std::string error;  // non-empty when the tower could not be built
};

/**
 * Multiply every eps coefficient of `spec` by each parameter value, build tuned towers of the
 * given depth and record b_1 and the geometry table for k <= kmax.
 */
std::vector<SweepRow> sweep_b1(const SeedSpec& spec, const std::vector<double>& parameters, int depth,
                               int kmax, const RenormOptions& opt = {});

/// (1/2)(1 + log b1 / log b1_tilde); DomainError unless both lie in (0, 1).
double holder_bound(double b1, double b1_tilde);

}  // namespace renorm
