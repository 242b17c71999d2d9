#pragma once

/**
 * @file function.h
 * @brief Tensor-product Chebyshev series on a box.
 */

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "renorm/box.h"

namespace renorm {

constexpr double kDefaultTol = 1e-10;
constexpr double kEvalSlack = 1e-12;
constexpr double kClampSlack = 1e-9;

/**
 * Scalar function on a box, stored as a truncated tensor Chebyshev series in
 * coordinates rescaled to [-1, 1] per axis. Coefficients are row-major with the
 * last axis varying fastest.
 */
class Function {
public:
    using Sampler = std::function<double(const double*)>;

    Function() = default;
    Function(Box domain, std::vector<int> degrees, std::vector<double> coeffs,
             double tol = kDefaultTol);

    static Function constant(const Box& domain, double value);
    /// w -> w[axis], exact at degree 1 along that axis.
    static Function coordinate(const Box& domain, int axis);
    /// Interpolate g at the tensor Chebyshev-Lobatto nodes of the given degrees.
    static Function project(const Box& domain, const std::vector<int>& degrees, const Sampler& g,
                            double tol = kDefaultTol);
    /// Same, with a sampler that fills all node values at once (nodes in coefficient order).
    static Function project_nodes(const Box& domain, const std::vector<int>& degrees,
                                  const std::vector<double>& node_values, double tol = kDefaultTol);
    static std::vector<Point> nodes(const Box& domain, const std::vector<int>& degrees);

    const Box& domain() const { return domain_; }
    int dim() const { return static_cast<int>(degrees_.size()); }
    const std::vector<int>& degrees() const { return degrees_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double tolerance() const { return tol_; }
    bool empty() const { return coeffs_.empty(); }

    /// Checked evaluation; throws PointOutsideDomain beyond kEvalSlack.
    double operator()(const double* w) const;
    double operator()(const Point& w) const { return (*this)(w.data()); }
    double operator()(double x) const { return (*this)(&x); }
    /// Evaluation that clamps excursions up to `slack` and throws RangeEscapesDomain beyond.
    double eval_clamped(const double* w, double slack = kClampSlack) const;
    /// Value and full gradient (grad has dim() entries). Clamped like eval_clamped.
    double value_gradient(const double* w, double* grad, double slack = kClampSlack) const;
    /// Single partial derivative at a point.
    double derivative(const double* w, int axis, double slack = kClampSlack) const;

    /**
     * f(p + h) - f(p) computed by telescoping one axis at a time through
     * Chebyshev divided differences, so the result keeps relative accuracy
     * when h is tiny (no cancellation between two large values).
     */
    double difference(const double* p, const double* h, double slack = kClampSlack) const;

    Function partial(int axis) const;

    Function operator+(const Function& o) const;
    Function operator-(const Function& o) const;
    Function operator*(double s) const;
    Function operator-() const { return (*this) * -1.0; }

    /// Sum of absolute coefficients: an upper bound for the sup norm.
    double coeff_bound() const;
    /// Maximum |f| over a uniform grid.
    double grid_sup(int per_axis) const;

    /// Copy with a different recorded tolerance.
    Function with_tolerance(double tol) const;

    void write(std::ostream& os) const;
    static Function read(std::istream& is);
    void save(const std::string& path) const;
    static Function load(const std::string& path);

private:
    double contract(const std::vector<std::vector<double>>& axis_vectors) const;
    std::size_t stride(int axis) const;

    Box domain_;
    std::vector<int> degrees_;
    std::vector<double> coeffs_;
    double tol_ = kDefaultTol;
};

using VectorFunction = std::vector<Function>;

/// Number of points per axis for validation grids: `preferred`, capped so the grid stays below ~40k points.
int validation_points_per_axis(int dim, int preferred = 33);

/**
 * Re-project outer(inner_1(w), ..., inner_d(w)) on the inner functions' domain.
 * Validates the result against pointwise composition on a grid.
 */
Function compose(const Function& outer, const std::vector<Function>& inner,
                 const std::vector<int>& degrees, double tol = kDefaultTol,
                 double* residual_out = nullptr);

/**
 * Inverse of a 1-D function on a monotone branch, projected on f(branch).
 * degree <= 0 selects the degree by doubling from 32 until the residual
 * |f(g(y)) - y| meets tol.
 */
Function invert_monotone_1d(const Function& f, double lo, double hi, int degree = 0,
                            double tol = kDefaultTol);

/// Solve f(x) = y for x in [lo, hi] (f monotone there) by safeguarded Newton.
double solve_monotone_1d(const Function& f, double y, double lo, double hi);

}  // namespace renorm
