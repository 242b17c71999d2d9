#include "renorm/box.h"

#include <algorithm>
#include <cassert>

#include "renorm/error.h"

namespace renorm {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::PointOutsideDomain: return "PointOutsideDomain";
        case ErrorKind::RangeEscapesDomain: return "RangeEscapesDomain";
        case ErrorKind::TruncationOverflow: return "TruncationOverflow";
        case ErrorKind::NotMonotone: return "NotMonotone";
        case ErrorKind::NotRenormalizable: return "NotRenormalizable";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::NewtonDiverged: return "NewtonDiverged";
        case ErrorKind::ClassificationAmbiguous: return "ClassificationAmbiguous";
        case ErrorKind::HInversionFailed: return "HInversionFailed";
        case ErrorKind::ConstraintViolated: return "ConstraintViolated";
        case ErrorKind::DepthExceeded: return "DepthExceeded";
        case ErrorKind::SingularDerivative: return "SingularDerivative";
        case ErrorKind::DegenerateJacobian: return "DegenerateJacobian";
        case ErrorKind::SingularZ: return "SingularZ";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Box::Box(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.empty())
        throw Error(ErrorKind::DomainError, "box bounds have mismatched or zero dimension");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (!(lower[i] < upper[i])) throw Error(ErrorKind::DomainError, "box requires lower < upper");
}

Box Box::cube(std::size_t dim, double r) {
    return Box(std::vector<double>(dim, -r), std::vector<double>(dim, r));
}

Point Box::center() const {
    Point c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = mid(i);
    return c;
}

bool Box::contains(const double* w, double slack) const {
    return excursion(w) <= slack;
}

double Box::excursion(const double* w) const {
    double e = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
        e = std::max(e, lower[i] - w[i]);
        e = std::max(e, w[i] - upper[i]);
    }
    return e;
}

std::vector<Point> uniform_grid(const Box& box, int per_axis) {
    const std::size_t d = box.dim();
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);
    std::vector<Point> pts;
    pts.reserve(total);
    std::vector<int> idx(d, 0);
    for (std::size_t n = 0; n < total; ++n) {
        Point p(d);
        for (std::size_t i = 0; i < d; ++i) {
            double s = per_axis == 1 ? 0.5 : static_cast<double>(idx[i]) / (per_axis - 1);
            p[i] = box.lower[i] + s * box.width(i);
        }
        pts.push_back(std::move(p));
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] < per_axis) break;
            idx[i] = 0;
        }
    }
    return pts;
}

std::vector<Point> boundary_samples(const Box& box, int per_axis) {
    std::vector<Point> out;
    for (auto& p : uniform_grid(box, per_axis)) {
        bool on_face = false;
        for (std::size_t i = 0; i < box.dim(); ++i)
            if (p[i] == box.lower[i] || p[i] == box.upper[i]) on_face = true;
        if (on_face) out.push_back(std::move(p));
    }
    out.push_back(box.center());
    return out;
}

}  // namespace renorm
