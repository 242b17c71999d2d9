#pragma once

#include <cstddef>
#include <vector>

namespace renorm {

using Point = std::vector<double>;

/// Axis-aligned box [lower_i, upper_i] in R^dim.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    Box() = default;
    Box(std::vector<double> lo, std::vector<double> hi);

    /// Hypercube [-r, r]^dim.
    static Box cube(std::size_t dim, double r);
    static Box interval(double lo, double hi) { return Box({lo}, {hi}); }

    std::size_t dim() const { return lower.size(); }
    double width(std::size_t i) const { return upper[i] - lower[i]; }
    double mid(std::size_t i) const { return 0.5 * (upper[i] + lower[i]); }
    Point center() const;

    bool contains(const double* w, double slack = 0.0) const;
    bool contains(const Point& w, double slack = 0.0) const { return contains(w.data(), slack); }

    /// Largest distance by which w leaves the box (0 if inside).
    double excursion(const double* w) const;

    Box project_axis(std::size_t i) const { return interval(lower[i], upper[i]); }

    bool operator==(const Box& other) const = default;
};

/// Tensor grid of `per_axis` equispaced points per axis (endpoints included).
std::vector<Point> uniform_grid(const Box& box, int per_axis);

/// Points of a per-axis equispaced grid lying on the boundary of the box, plus the center.
std::vector<Point> boundary_samples(const Box& box, int per_axis);

}  // namespace renorm
