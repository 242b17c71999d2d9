#pragma once

#include "renorm/function.h"

namespace renorm {

/// A map of an interval with exactly one interior critical point.
class UnimodalMap {
public:
    UnimodalMap() = default;
    /// Locates the critical point; throws DomainError without exactly one interior critical point.
    explicit UnimodalMap(Function f);

    const Function& f() const { return f_; }
    const Box& interval() const { return f_.domain(); }
    double lo() const { return f_.domain().lower[0]; }
    double hi() const { return f_.domain().upper[0]; }
    double critical_point() const { return c_; }
    /// +1 if the critical point is a minimum, -1 for a maximum.
    int critical_type() const { return type_; }

    double operator()(double x) const { return f_.eval_clamped(&x); }
    double derivative(double x) const { return f_.derivative(&x, 0); }

    /// The fixed point where f' < 0, and the other preimage of it; NaN when absent.
    double reversing_fixed_point() const;

private:
    Function f_;
    double c_ = 0.0;
    int type_ = 0;
};

struct Renormalizability {
    bool renormalizable = false;
    double lo = 0.0;
    double hi = 0.0;
};

/// Interval J with c in J, f^2(J) in J and f^2(c) on its boundary, if it exists.
Renormalizability is_renormalizable_1d(const UnimodalMap& f);

/// The affine map A sending J onto I; orientation keeps the critical-point type of Rf equal to f's.
struct AffineRescale {
    double scale = 1.0;   // A(x) = I_mid + scale * (x - J_mid)
    double j_mid = 0.0;
    double i_mid = 0.0;
    double apply(double x) const { return i_mid + scale * (x - j_mid); }
    double inverse(double x) const { return j_mid + (x - i_mid) / scale; }
};

AffineRescale renormalization_rescale(const UnimodalMap& f, const Renormalizability& J);

/// Rf = A o f^2 o A^-1 re-projected at `degree` (default: degree of f).
UnimodalMap renormalize_1d(const UnimodalMap& f, int degree = -1);

/// sup over a grid of |A f^2 A^-1 (x) - f(x)|, evaluated pointwise.
double renormalization_residual_1d(const UnimodalMap& f, int samples = 801);

struct RenormFixedPoint {
    UnimodalMap f_star;
    double sigma = 0.0;      // |J| / |I|
    double residual = 0.0;   // sup |Rf* - f*|
    int iterations = 0;
};

/// Even polynomial start 1 - 1.5276 x^2 + 0.1048 x^4 on [-1, 1] at the given degree.
UnimodalMap fixed_point_initial_guess(int degree = 16);

/**
 * Newton iteration on the even Chebyshev coefficients (f(0) = 1 enforced) for
 * Rf = f on [-1, 1]. The Jacobian is a forward finite difference with step 1e-7.
 */
RenormFixedPoint fixed_point_1d(const UnimodalMap& initial, double tol = 1e-10, int max_iter = 50);

/**
 * Extend the fixed point to [-r, r] through f(x) = f(f(s x)) / s, s = f^2(0),
 * which only samples f on [-1, 1] when r |s| stays below the dynamical interval.
 */
Function extend_fixed_point(const RenormFixedPoint& fp, double r, int degree);

}  // namespace renorm
