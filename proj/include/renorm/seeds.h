#pragma once

/**
 * @file seeds.h
 * @brief Seed maps for experiments: polynomial perturbations of the extended fixed point.
 */

#include <string>
#include <vector>

#include "renorm/henon.h"

namespace renorm {

/// coef * prod_i w_i^powers[i]
struct PolyTerm {
    double coef = 0.0;
    std::vector<int> powers;
};

struct SeedSpec {
    int m = 1;
    double radius = 1.2;
    std::vector<int> degrees;     // per axis for eps and delta; empty -> default_degree(m)
    int f_degree = 32;
    int fixed_point_degree = 16;
    double eps_bar = 0.05;
    std::string f_kind = "fixed_point";  // "fixed_point": f*_ext - a x^2; "quadratic": 1 - a x^2
    double f_param = 0.0;                // a
    std::vector<PolyTerm> eps;
    std::vector<std::vector<PolyTerm>> delta;  // m components

    // delta^j = eta^j(C_j0 y - sum_i C_ji z_i) + x when `example` is set
    bool example = false;
    std::vector<std::vector<double>> eta;  // power-series coefficients of eta^j(t), constant term first
    std::vector<std::vector<double>> C;    // m rows of m + 1 entries

    bool tune = true;  // pick f_param on the stable manifold before building towers
    int tune_degree = 0;  // per-axis degree of eps/delta while tuning; 0 = default_tune_degree(m)
};

/// 16 per axis for m <= 1, 10 for m = 2, 8 above.
int default_degree(int m);
/// 10 for m <= 1, 6 above.
int default_tune_degree(int m);

/// The degree-16 solution of Rf = f on [-1, 1], solved once per process and cached.
const RenormFixedPoint& reference_fixed_point(int degree = 16);
/// f* extended to [-r, r] at the given degree (cached).
const Function& extended_fixed_point(double r, int degree, int fp_degree = 16);

/// Evaluate a term list at w.
double eval_terms(const std::vector<PolyTerm>& terms, const double* w);

/// The seed with f_param replaced by a.
HenonMap build_seed(const SeedSpec& spec, double a);
inline HenonMap build_seed(const SeedSpec& spec) { return build_seed(spec, spec.f_param); }

/// delta^j = eta^j(C_j0 y - sum_i C_ji z_i) + x on the cube of half-width r; throws ConstraintViolated
/// unless C_j0 = sum_i C_ji within 1e-12.
VectorFunction example_delta(int m, double r, const std::vector<int>& degrees,
                             const std::vector<Function>& eta, const std::vector<std::vector<double>>& C);

/// Tower of the seed: tuned on sigma_k when spec.tune, otherwise built directly.
RenormalizationSequence build_tower(const SeedSpec& spec, int depth, const RenormOptions& opt = {});

/// Common seeds.
SeedSpec generic_seed(int m, double scale = 0.05);
/// eps = b y, delta^j = c z_j: Jacobian b c^m everywhere.
SeedSpec constant_jacobian_seed(double b, double c, int m = 1);
/// Member of the class N: delta^j = eta^j(C_j0 y - sum C_ji z_i) + x with eta^j(t) = s ((1 + 0.2 j) t + 0.15 t^2),
/// so eta' and det Z stay away from 0 on B.
SeedSpec example_seed(int m, double s = 0.05, double eps_scale = 0.05);

}  // namespace renorm
