#pragma once

/**
 * @file henon.h
 * @brief Henon-like maps F(x,y,z) = (f(x) - eps(w), x, delta(w)) and their renormalization.
 */

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "renorm/function.h"
#include "renorm/unimodal.h"

namespace renorm {

/// Map on the cube B of dimension m + 2 with coordinates w = (x, y, z_1..z_m).
struct HenonMap {
    int m = 1;
    Box B;
    Function f;            // on pi_x(B)
    Function eps;          // on B
    VectorFunction delta;  // m components on B
    double eps_bar = 0.0;
    std::string provenance;

    int dim() const { return m + 2; }
    /// F(w); excursions of w up to kClampSlack are clamped.
    void eval(const double* w, double* out) const;
    Point operator()(const Point& w) const;
    /// f(x) - eps(w)
    double phi(const double* w) const;
    Eigen::MatrixXd derivative(const double* w) const;

    /// Sup norms of eps and delta^j over a uniform grid.
    double eps_norm(int per_axis = 0) const;
    double delta_norm(int per_axis = 0) const;
};

/// Checks dimensions and domains; throws DomainError on mismatch.
HenonMap make_henon(int m, const Box& B, Function f, Function eps, VectorFunction delta,
                    double eps_bar, std::string provenance = "");

/// The degenerate map (f, x, 0) on the cube of half-width r.
HenonMap degenerate_map(const Function& f, int m, double r, int degree);

struct FixedPoints {
    Point beta0;  // all non-negligible eigenvalues with positive real part
    Point beta1;  // some eigenvalue with negative real part
    Eigen::VectorXcd eig0, eig1;
};

FixedPoints fixed_points(const HenonMap& F, double classify_tol = 1e-8);

struct JacobianValue {
    double det = 0.0;         // det DF(w)
    double block = 0.0;       // (d_y eps - E Z^-1 Y) det Z
    bool has_block = false;   // det Z != 0
};

JacobianValue jacobian(const HenonMap& F, const double* w);

struct RenormOptions {
    std::vector<int> degrees;  // per-axis degrees of eps_next and delta_next; empty = keep F's
    int f_degree = -1;         // degree of f_next; negative = keep F's
    double tol = kDefaultTol;
    int boundary_per_axis = 5; // sample density for the B -> B check
};

/**
 * One renormalization step. Lambda^-1(w) = sigma0 * w + T with T = (t, t, 0, ..., 0):
 * t puts the critical point of the renormalized first coordinate at 0 and sigma0 < 0
 * makes its critical value 1. Then psi_v(w) = H^-1(sigma0 w + T) and psi_c = F o psi_v.
 */
class RenormStep {
public:
    RenormStep() = default;
    RenormStep(HenonMap F, double sigma0, double shift = 0.0);

    const HenonMap& F() const { return F_; }
    const HenonMap& F_next() const { return F_next_; }
    double sigma0() const { return sigma0_; }
    double s() const { return 1.0 / sigma0_; }
    double shift() const { return shift_; }
    /// Lambda^-1(w) = sigma0 w + T.
    void unscale(const double* w, double* out) const;
    double branch_lo() const { return branch_lo_; }
    double branch_hi() const { return branch_hi_; }

    /// Inverse branch of f through the critical value side.
    double finv(double y) const;
    /// p(y) = delta(y, f^-1(y), 0), written to out[0..m).
    void p(double y, double* out) const;
    /// q(y) = d/dy p(y) by the chain rule at a point.
    void q(double y, double* out) const;

    void H(const double* w, double* out) const;
    void H_inv(const double* w, double* out) const;
    /// d(pi_x H^-1) at w: the gradient of phi^-1.
    void phi_inv_gradient(const double* w, double* grad) const;
    Eigen::MatrixXd DH_inv(const double* w) const;

    void psi_v(const double* w, double* out) const;
    void psi_c(const double* w, double* out) const;
    Eigen::MatrixXd D_psi_v(const double* w) const;
    Eigen::MatrixXd D_psi_c(const double* w) const;

    /// Newton solve for xi - f^-1(X) where phi(xi, Y, Zp) = X; Zp already includes p(Y).
    double solve_offset(double X, double g, double Y, const double* Zp) const;
    /// First coordinate of H o F^2 o H^-1 at (X, Y, 0) and its X-derivative.
    double prf_line(double X, double Y, double* dX = nullptr) const;

    /// Projected p and q = p' on sigma0 * pi_y(B), built by composition with (y, f^-1(y), 0).
    const VectorFunction& p_functions() const { return p_fun_; }
    const VectorFunction& q_functions() const { return q_fun_; }

    double eps_next_norm = 0.0;
    double delta_next_norm = 0.0;

    friend RenormStep renormalize(const HenonMap& F, const RenormOptions& opt);
    friend RenormStep restore_step(HenonMap F, HenonMap F_next, double sigma0, double shift);

private:
    void build_pq();

    HenonMap F_;
    HenonMap F_next_;
    double sigma0_ = 0.0;
    double shift_ = 0.0;
    double crit_ = 0.0;
    double branch_lo_ = 0.0, branch_hi_ = 0.0;
    VectorFunction p_fun_, q_fun_;
};

RenormStep renormalize(const HenonMap& F, const RenormOptions& opt = {});
/// Rebuild a step from stored maps (for towers read back from disk).
RenormStep restore_step(HenonMap F, HenonMap F_next, double sigma0, double shift);

struct ConjugacyResidual {
    double second_iterate = 0.0;  // |psi_v o F_next - F^2 o psi_v|
    double via_psi_c = 0.0;       // |psi_v o F_next - F o psi_c|
    double y_relation = 0.0;      // |pi_y psi_v o F_next - pi_x psi_c|
};

ConjugacyResidual conjugacy_residual(const RenormStep& step, int per_axis = 11);

struct RenormalizationSequence {
    std::vector<HenonMap> maps;    // F_0..F_N
    std::vector<RenormStep> steps; // steps[k] renormalizes maps[k]
    std::vector<double> eps_norms, delta_norms;
    std::vector<double> distance_to_fixed;  // ||F_k - F_*||, empty without a reference
    double rho_hat = 0.0;                   // fitted rate of distance_to_fixed over k >= 1
    double tuning_parameter = 0.0;

    int depth() const { return static_cast<int>(steps.size()); }
};

/// Build F_0..F_N; errors carry the failing level in the message.
RenormalizationSequence renormalize_tower(const HenonMap& F, int N, const RenormOptions& opt = {},
                                          const Function* f_star = nullptr);

/// Fitted ratio r in y_k ~ C r^k by least squares on log y_k.
double fit_rate(const std::vector<double>& values, int first = 0);

/**
 * Pick a in a one-parameter family so that the tower stays near the fixed point
 * up to `depth`: progressive secant on sigma_k(a) - sigma_star, k = 1..depth.
 * Returns the tower built at the final parameter.
 */
RenormalizationSequence tune_and_build(const std::function<HenonMap(double)>& family, int depth,
                                       double sigma_star, const RenormOptions& opt = {},
                                       const Function* f_star = nullptr, double a0 = 0.0);

struct Normalization {
    double sigma0 = 0.0;
    double shift = 0.0;
};

/**
 * The affine normalization of RF: shift t is the critical point of X -> prf_line(X, t)
 * next to the critical point of f, and sigma0 = prf_line(t, t) - t.
 * For eps = 0 and even f this is t = 0, sigma0 = f^2(0).
 */
Normalization normalization_of(const HenonMap& F);
double dilation_of(const HenonMap& F);

}  // namespace renorm
