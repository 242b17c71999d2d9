#include "renorm/unimodal.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "renorm/error.h"

namespace renorm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bisection-refined root of g on [a, b] given a sign change.
template <class G>
double bisect(G g, double a, double b) {
    double ga = g(a);
    for (int it = 0; it < 200 && b - a > 1e-16 * (1.0 + std::abs(a)); ++it) {
        double m = 0.5 * (a + b);
        double gm = g(m);
        if (gm == 0.0) return m;
        if ((gm < 0) == (ga < 0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// All sign-change roots of g on [lo, hi] sampled at n+1 points.
template <class G>
std::vector<double> roots(G g, double lo, double hi, int n) {
    std::vector<double> out;
    double xp = lo, gp = g(lo);
    if (gp == 0.0) out.push_back(lo);
    for (int i = 1; i <= n; ++i) {
        double x = lo + (hi - lo) * i / n;
        double gx = g(x);
        if (gx == 0.0) {
            out.push_back(x);
        } else if (gp != 0.0 && (gx < 0) != (gp < 0)) {
            out.push_back(bisect(g, xp, x));
        }
        xp = x;
        gp = gx;
    }
    return out;
}

}  // namespace

UnimodalMap::UnimodalMap(Function f) : f_(std::move(f)) {
    if (f_.dim() != 1) throw Error(ErrorKind::DomainError, "unimodal map needs a 1-D function");
    Function df = f_.partial(0);
    auto g = [&](double x) { return df.eval_clamped(&x); };
    // interior roots only; a derivative vanishing at an endpoint is not a critical point here
    std::vector<double> crit;
    for (double r : roots(g, lo(), hi(), 512))
        if (r > lo() && r < hi()) crit.push_back(r);
    if (crit.size() != 1) {
        std::ostringstream os;
        os << "expected one interior critical point, found " << crit.size();
        throw Error(ErrorKind::DomainError, os.str());
    }
    c_ = crit[0];
    // polish with Newton on f'
    Function ddf = df.partial(0);
    for (int it = 0; it < 5; ++it) {
        double s = ddf.eval_clamped(&c_);
        if (s == 0.0) break;
        double step = g(c_) / s;
        if (!(std::abs(step) < 1e-3)) break;
        c_ -= step;
    }
    type_ = ddf.eval_clamped(&c_) > 0 ? 1 : -1;
}

double UnimodalMap::reversing_fixed_point() const {
    auto g = [&](double x) { return (*this)(x) - x; };
    for (double r : roots(g, lo(), hi(), 512))
        if (derivative(r) < 0) return r;
    return kNaN;
}

Renormalizability is_renormalizable_1d(const UnimodalMap& f) {
    Renormalizability out;
    const double c = f.critical_point();
    const double a = f(f(c));
    if (a == c) return out;
    const double target = f(a);
    // the other side of c from a
    double lo = a < c ? c : f.lo();
    double hi = a < c ? f.hi() : c;
    double flo = f(lo), fhi = f(hi);
    if ((target - flo) * (target - fhi) > 0) return out;
    double b = solve_monotone_1d(f.f(), target, lo, hi);
    double jlo = std::min(a, b), jhi = std::max(a, b);
    if (!(jlo < c && c < jhi)) return out;
    if (jhi - jlo >= f.hi() - f.lo() - 1e-12) return out;
    // J must sit inside the interval bounded by the reversing fixed point and its preimage
    double p = f.reversing_fixed_point();
    if (std::isnan(p)) return out;
    double plo = p < c ? c : f.lo();
    double phi = p < c ? f.hi() : c;
    double fpl = f(plo), fph = f(phi);
    if ((p - fpl) * (p - fph) > 0) return out;
    double pp = solve_monotone_1d(f.f(), p, plo, phi);
    const double slack = 1e-12;
    if (jlo < std::min(p, pp) - slack || jhi > std::max(p, pp) + slack) return out;
    for (int i = 0; i <= 400; ++i) {
        double x = jlo + (jhi - jlo) * i / 400.0;
        double y = f(f(x));
        if (y < jlo - slack || y > jhi + slack) return out;
    }
    out.renormalizable = true;
    out.lo = jlo;
    out.hi = jhi;
    return out;
}

AffineRescale renormalization_rescale(const UnimodalMap& f, const Renormalizability& J) {
    AffineRescale A;
    A.j_mid = 0.5 * (J.lo + J.hi);
    A.i_mid = 0.5 * (f.lo() + f.hi());
    double orientation = f.derivative(f(f.critical_point())) > 0 ? 1.0 : -1.0;
    A.scale = orientation * (f.hi() - f.lo()) / (J.hi - J.lo);
    return A;
}

UnimodalMap renormalize_1d(const UnimodalMap& f, int degree) {
    Renormalizability J = is_renormalizable_1d(f);
    if (!J.renormalizable) throw Error(ErrorKind::NotRenormalizable, "f is not renormalizable");
    AffineRescale A = renormalization_rescale(f, J);
    if (degree < 0) degree = f.f().degrees()[0];
    Function Rf = Function::project(f.interval(), {degree}, [&](const double* x) {
        return A.apply(f(f(A.inverse(*x))));
    });
    return UnimodalMap(Rf);
}

double renormalization_residual_1d(const UnimodalMap& f, int samples) {
    Renormalizability J = is_renormalizable_1d(f);
    if (!J.renormalizable) throw Error(ErrorKind::NotRenormalizable, "f is not renormalizable");
    AffineRescale A = renormalization_rescale(f, J);
    double r = 0.0;
    for (int i = 0; i < samples; ++i) {
        double x = f.lo() + (f.hi() - f.lo()) * i / (samples - 1);
        r = std::max(r, std::abs(A.apply(f(f(A.inverse(x)))) - f(x)));
    }
    return r;
}

UnimodalMap fixed_point_initial_guess(int degree) {
    Box I = Box::interval(-1.0, 1.0);
    return UnimodalMap(Function::project(I, {degree}, [](const double* x) {
        double s = x[0] * x[0];
        return 1.0 - 1.5276 * s + 0.1048 * s * s;
    }));
}

namespace {

// Even Chebyshev representation with f(0) = 1: unknowns are c_2, c_4, ..., c_D.
Function even_function(const Eigen::VectorXd& u, int degree) {
    std::vector<double> c(degree + 1, 0.0);
    double c0 = 1.0;
    for (int k = 1; 2 * k <= degree; ++k) {
        c[2 * k] = u[k - 1];
        c0 -= (k % 2 == 0 ? 1.0 : -1.0) * u[k - 1];  // T_{2k}(0) = (-1)^k
    }
    c[0] = c0;
    return Function(Box::interval(-1.0, 1.0), {degree}, c);
}

Eigen::VectorXd even_residual(const Eigen::VectorXd& u, int degree) {
    UnimodalMap f(even_function(u, degree));
    UnimodalMap Rf = renormalize_1d(f, degree);
    Eigen::VectorXd r(u.size());
    for (int k = 1; 2 * k <= degree; ++k) r[k - 1] = Rf.f().coeffs()[2 * k] - f.f().coeffs()[2 * k];
    return r;
}

}  // namespace

RenormFixedPoint fixed_point_1d(const UnimodalMap& initial, double tol, int max_iter) {
    const int degree = initial.f().degrees()[0];
    if (degree < 2) throw Error(ErrorKind::DomainError, "fixed point needs degree >= 2");
    const int n = degree / 2;
    Box I = Box::interval(-1.0, 1.0);
    // re-read the initial guess as an even series on [-1, 1] with f(0) = 1
    Function start = Function::project(I, {degree}, [&](const double* x) {
        return 0.5 * (initial(x[0]) + initial(-x[0])) / initial(0.0);
    });
    Eigen::VectorXd u(n);
    for (int k = 1; k <= n; ++k) u[k - 1] = start.coeffs()[2 * k];

    const double h = 1e-7;
    RenormFixedPoint out;
    double residual = renormalization_residual_1d(UnimodalMap(even_function(u, degree)));
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::VectorXd r = even_residual(u, degree);
        Eigen::MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd up = u;
            up[j] += h;
            J.col(j) = (even_residual(up, degree) - r) / h;
        }
        Eigen::VectorXd step = J.partialPivLu().solve(-r);
        if (!step.allFinite()) throw Error(ErrorKind::NoConvergence, "singular Newton system");
        u += step;
        residual = renormalization_residual_1d(UnimodalMap(even_function(u, degree)));
        if (residual <= tol && step.lpNorm<Eigen::Infinity>() < 1e-12) {
            ++it;
            break;
        }
    }
    if (!(residual <= tol)) {
        std::ostringstream os;
        os << "residual " << residual << " above tolerance " << tol << " after " << it << " iterations";
        throw Error(ErrorKind::NoConvergence, os.str());
    }
    out.f_star = UnimodalMap(even_function(u, degree));
    Renormalizability J = is_renormalizable_1d(out.f_star);
    out.sigma = (J.hi - J.lo) / (out.f_star.hi() - out.f_star.lo());
    out.residual = residual;
    out.iterations = it;
    return out;
}

Function extend_fixed_point(const RenormFixedPoint& fp, double r, int degree) {
    const UnimodalMap& f = fp.f_star;
    const double s = f(f(0.0));
    if (r * std::abs(s) > 1.0)
        throw Error(ErrorKind::DomainError, "extension radius too large for the functional equation");
    return Function::project(Box::interval(-r, r), {degree}, [&](const double* x) {
        return f(f(s * x[0])) / s;
    });
}

}  // namespace renorm
