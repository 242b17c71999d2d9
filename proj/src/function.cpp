#include "renorm/function.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "renorm/error.h"

namespace renorm {

namespace {

// T_0..T_{n-1} at t.
void cheb_values(double t, int n, double* out) {
    out[0] = 1.0;
    if (n > 1) out[1] = t;
    for (int j = 2; j < n; ++j) out[j] = 2.0 * t * out[j - 1] - out[j - 2];
}

// T'_0..T'_{n-1} at t (derivative in t); needs T values.
void cheb_derivs(double t, int n, const double* T, double* out) {
    out[0] = 0.0;
    if (n > 1) out[1] = 1.0;
    for (int j = 2; j < n; ++j) out[j] = 2.0 * T[j - 1] + 2.0 * t * out[j - 1] - out[j - 2];
}

// Divided differences (T_j(a) - T_j(b)) / (a - b), j = 0..n-1; needs T values at a.
void cheb_divided(double b, int n, const double* Ta, double* out) {
    out[0] = 0.0;
    if (n > 1) out[1] = 1.0;
    for (int j = 2; j < n; ++j) out[j] = 2.0 * Ta[j - 1] + 2.0 * b * out[j - 1] - out[j - 2];
}

// DCT-I interpolation matrix for Chebyshev-Lobatto nodes cos(pi k / n), k = 0..n.
const std::vector<double>& dct_matrix(int n) {
    thread_local std::vector<std::vector<double>> cache;
    if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
    auto& M = cache[n];
    if (!M.empty()) return M;
    const int s = n + 1;
    M.assign(static_cast<std::size_t>(s) * s, 0.0);
    if (n == 0) {
        M[0] = 1.0;
        return M;
    }
    for (int j = 0; j <= n; ++j) {
        for (int k = 0; k <= n; ++k) {
            double w = (k == 0 || k == n) ? 0.5 : 1.0;
            double v = 2.0 / n * w * std::cos(std::numbers::pi * j * k / n);
            if (j == 0 || j == n) v *= 0.5;
            M[static_cast<std::size_t>(j) * s + k] = v;
        }
    }
    return M;
}

double lobatto_node(int k, int n) {
    if (n == 0) return 0.0;
    // sin form is symmetric and exact at the center node
    return std::sin(std::numbers::pi * (n - 2.0 * k) / (2.0 * n));
}

std::size_t total_size(const std::vector<int>& degrees) {
    std::size_t n = 1;
    for (int d : degrees) n *= static_cast<std::size_t>(d + 1);
    return n;
}

// Scratch buffers reused across evaluations.
struct Scratch {
    std::vector<std::vector<double>> vecs;
    std::vector<double> tmp;
    std::vector<std::vector<double>> bufs;
};

Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

// Contract the trailing axis of `in` (shape outer x n) with v, writing outer values to out.
void contract_last(const double* in, std::size_t outer, int n, const double* v, double* out) {
    for (std::size_t p = 0; p < outer; ++p) {
        const double* row = in + p * n;
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += row[j] * v[j];
        out[p] = s;
    }
}

}  // namespace

Function::Function(Box domain, std::vector<int> degrees, std::vector<double> coeffs, double tol)
    : domain_(std::move(domain)), degrees_(std::move(degrees)), coeffs_(std::move(coeffs)), tol_(tol) {
    if (degrees_.size() != domain_.dim())
        throw Error(ErrorKind::DomainError, "degree list does not match domain dimension");
    for (int d : degrees_)
        if (d < 0) throw Error(ErrorKind::DomainError, "negative degree");
    if (coeffs_.size() != total_size(degrees_))
        throw Error(ErrorKind::DomainError, "coefficient tensor does not match degrees");
}

Function Function::constant(const Box& domain, double value) {
    return Function(domain, std::vector<int>(domain.dim(), 0), {value});
}

Function Function::coordinate(const Box& domain, int axis) {
    std::vector<int> deg(domain.dim(), 0);
    deg[axis] = 1;
    std::vector<double> c(2);
    c[0] = domain.mid(axis);
    c[1] = 0.5 * domain.width(axis);
    return Function(domain, deg, c);
}

std::vector<Point> Function::nodes(const Box& domain, const std::vector<int>& degrees) {
    const std::size_t d = domain.dim();
    const std::size_t total = total_size(degrees);
    std::vector<Point> pts;
    pts.reserve(total);
    std::vector<int> idx(d, 0);
    for (std::size_t n = 0; n < total; ++n) {
        Point p(d);
        for (std::size_t i = 0; i < d; ++i)
            p[i] = domain.mid(i) + 0.5 * domain.width(i) * lobatto_node(idx[i], degrees[i]);
        pts.push_back(std::move(p));
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] <= degrees[i]) break;
            idx[i] = 0;
        }
    }
    return pts;
}

Function Function::project_nodes(const Box& domain, const std::vector<int>& degrees,
                                 const std::vector<double>& node_values, double tol) {
    const std::size_t total = total_size(degrees);
    if (node_values.size() != total)
        throw Error(ErrorKind::DomainError, "node value count does not match degrees");
    std::vector<double> c = node_values;
    std::vector<double> line;
    const int d = static_cast<int>(degrees.size());
    for (int a = 0; a < d; ++a) {
        const int n = degrees[a] + 1;
        if (n == 1) continue;
        std::size_t inner = 1;
        for (int b = a + 1; b < d; ++b) inner *= static_cast<std::size_t>(degrees[b] + 1);
        const std::size_t outer = total / (inner * n);
        const auto& M = dct_matrix(degrees[a]);
        line.resize(n);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t base = o * n * inner + i;
                for (int k = 0; k < n; ++k) line[k] = c[base + k * inner];
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    const double* row = &M[static_cast<std::size_t>(j) * n];
                    for (int k = 0; k < n; ++k) s += row[k] * line[k];
                    c[base + j * inner] = s;
                }
            }
        }
    }
    return Function(domain, degrees, std::move(c), tol);
}

Function Function::project(const Box& domain, const std::vector<int>& degrees, const Sampler& g,
                           double tol) {
    auto pts = nodes(domain, degrees);
    std::vector<double> vals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = g(pts[i].data());
    return project_nodes(domain, degrees, vals, tol);
}

std::size_t Function::stride(int axis) const {
    std::size_t s = 1;
    for (int b = axis + 1; b < dim(); ++b) s *= static_cast<std::size_t>(degrees_[b] + 1);
    return s;
}

double Function::contract(const std::vector<std::vector<double>>& v) const {
    const int d = dim();
    const int n_last = degrees_[d - 1] + 1;
    if (d == 1) {
        double s = 0.0;
        for (int j = 0; j < n_last; ++j) s += coeffs_[j] * v[0][j];
        return s;
    }
    auto& buf = scratch().tmp;
    std::size_t outer = coeffs_.size() / n_last;
    buf.resize(outer);
    contract_last(coeffs_.data(), outer, n_last, v[d - 1].data(), buf.data());
    for (int a = d - 2; a >= 0; --a) {
        const int n = degrees_[a] + 1;
        outer /= n;
        contract_last(buf.data(), outer, n, v[a].data(), buf.data());
    }
    return buf[0];
}

namespace {

double rescale(const Box& box, int i, double w, double slack, bool checked) {
    const double lo = box.lower[i], hi = box.upper[i];
    if (w < lo || w > hi) {
        double e = std::max(lo - w, w - hi);
        if (!(e <= slack)) {
            std::ostringstream os;
            os << "coordinate " << i << " = " << w << " outside [" << lo << ", " << hi << "]";
            throw Error(checked ? ErrorKind::PointOutsideDomain : ErrorKind::RangeEscapesDomain, os.str());
        }
        w = std::clamp(w, lo, hi);
    }
    return (2.0 * w - lo - hi) / (hi - lo);
}

}  // namespace

double Function::operator()(const double* w) const {
    auto& vecs = scratch().vecs;
    const int d = dim();
    if (static_cast<int>(vecs.size()) < d) vecs.resize(d);
    for (int i = 0; i < d; ++i) {
        const double t = rescale(domain_, i, w[i], kEvalSlack, true);
        vecs[i].resize(degrees_[i] + 1);
        cheb_values(t, degrees_[i] + 1, vecs[i].data());
    }
    return contract(vecs);
}

double Function::eval_clamped(const double* w, double slack) const {
    auto& vecs = scratch().vecs;
    const int d = dim();
    if (static_cast<int>(vecs.size()) < d) vecs.resize(d);
    for (int i = 0; i < d; ++i) {
        const double t = rescale(domain_, i, w[i], slack, false);
        vecs[i].resize(degrees_[i] + 1);
        cheb_values(t, degrees_[i] + 1, vecs[i].data());
    }
    return contract(vecs);
}

double Function::value_gradient(const double* w, double* grad, double slack) const {
    const int d = dim();
    thread_local std::vector<std::vector<double>> T, dT;
    if (static_cast<int>(T.size()) < d) {
        T.resize(d);
        dT.resize(d);
    }
    for (int i = 0; i < d; ++i) {
        const double t = rescale(domain_, i, w[i], slack, false);
        const int n = degrees_[i] + 1;
        T[i].resize(n);
        dT[i].resize(n);
        cheb_values(t, n, T[i].data());
        cheb_derivs(t, n, T[i].data(), dT[i].data());
    }
    // bufs[0] carries the plain contraction; bufs[1 + a] the one differentiated along axis a.
    auto& bufs = scratch().bufs;
    if (static_cast<int>(bufs.size()) < d + 1) bufs.resize(d + 1);
    const int n_last = degrees_[d - 1] + 1;
    std::size_t outer = coeffs_.size() / n_last;
    bufs[0].resize(outer);
    bufs[d].resize(outer);
    contract_last(coeffs_.data(), outer, n_last, T[d - 1].data(), bufs[0].data());
    contract_last(coeffs_.data(), outer, n_last, dT[d - 1].data(), bufs[d].data());
    for (int a = d - 2; a >= 0; --a) {
        const int n = degrees_[a] + 1;
        outer /= n;
        bufs[1 + a].resize(outer);
        contract_last(bufs[0].data(), outer, n, dT[a].data(), bufs[1 + a].data());
        for (int b = a + 1; b < d; ++b)
            contract_last(bufs[1 + b].data(), outer, n, T[a].data(), bufs[1 + b].data());
        contract_last(bufs[0].data(), outer, n, T[a].data(), bufs[0].data());
    }
    for (int a = 0; a < d; ++a) grad[a] = bufs[1 + a][0] * 2.0 / domain_.width(a);
    return bufs[0][0];
}

double Function::derivative(const double* w, int axis, double slack) const {
    const int d = dim();
    thread_local std::vector<std::vector<double>> v;
    if (static_cast<int>(v.size()) < d) v.resize(d);
    for (int i = 0; i < d; ++i) {
        const double t = rescale(domain_, i, w[i], slack, false);
        const int n = degrees_[i] + 1;
        v[i].resize(n);
        cheb_values(t, n, v[i].data());
        if (i == axis) {
            std::vector<double> tv = v[i];
            cheb_derivs(t, n, tv.data(), v[i].data());
        }
    }
    std::vector<std::vector<double>> vv(v.begin(), v.begin() + d);
    return contract(vv) * 2.0 / domain_.width(axis);
}

double Function::difference(const double* p, const double* h, double slack) const {
    const int d = dim();
    std::vector<std::vector<double>> Tp(d), Tq(d);
    std::vector<double> tp(d), tq(d);
    for (int i = 0; i < d; ++i) {
        const int n = degrees_[i] + 1;
        tp[i] = rescale(domain_, i, p[i], slack, false);
        tq[i] = rescale(domain_, i, p[i] + h[i], slack, false);
        Tp[i].resize(n);
        Tq[i].resize(n);
        cheb_values(tp[i], n, Tp[i].data());
        cheb_values(tq[i], n, Tq[i].data());
    }
    double total = 0.0;
    std::vector<std::vector<double>> v(d);
    for (int i = 0; i < d; ++i) {
        if (h[i] == 0.0) continue;
        for (int a = 0; a < d; ++a) v[a] = a < i ? Tq[a] : Tp[a];
        const int n = degrees_[i] + 1;
        v[i].assign(n, 0.0);
        cheb_divided(tp[i], n, Tq[i].data(), v[i].data());
        const double ht = h[i] * 2.0 / domain_.width(i);
        total += ht * contract(v);
    }
    return total;
}

Function Function::partial(int axis) const {
    if (axis < 0 || axis >= dim()) throw Error(ErrorKind::DomainError, "partial: axis out of range");
    std::vector<double> out(coeffs_.size(), 0.0);
    const int n = degrees_[axis] + 1;
    const std::size_t inner = stride(axis);
    const std::size_t outer = coeffs_.size() / (inner * n);
    const double scale = 2.0 / domain_.width(axis);
    std::vector<double> c(n), dc(n + 1);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * n * inner + i;
            for (int k = 0; k < n; ++k) c[k] = coeffs_[base + k * inner];
            std::fill(dc.begin(), dc.end(), 0.0);
            for (int k = n - 1; k >= 1; --k) dc[k - 1] = dc[k + 1] + 2.0 * k * c[k];
            dc[0] *= 0.5;
            for (int k = 0; k < n; ++k) out[base + k * inner] = dc[k] * scale;
        }
    }
    return Function(domain_, degrees_, std::move(out), tol_);
}

namespace {

Function combine(const Function& a, const Function& b, double sb) {
    if (!(a.domain() == b.domain())) throw Error(ErrorKind::DomainError, "combine: domains differ");
    const int d = a.dim();
    std::vector<int> deg(d);
    for (int i = 0; i < d; ++i) deg[i] = std::max(a.degrees()[i], b.degrees()[i]);
    std::size_t total = 1;
    for (int x : deg) total *= static_cast<std::size_t>(x + 1);
    std::vector<double> c(total, 0.0);
    auto scatter = [&](const Function& f, double s) {
        std::vector<int> idx(d, 0);
        for (std::size_t n = 0; n < f.coeffs().size(); ++n) {
            std::size_t flat = 0;
            for (int i = 0; i < d; ++i) flat = flat * (deg[i] + 1) + idx[i];
            c[flat] += s * f.coeffs()[n];
            for (int i = d; i-- > 0;) {
                if (++idx[i] <= f.degrees()[i]) break;
                idx[i] = 0;
            }
        }
    };
    scatter(a, 1.0);
    scatter(b, sb);
    return Function(a.domain(), deg, std::move(c), std::max(a.tolerance(), b.tolerance()));
}

}  // namespace

Function Function::operator+(const Function& o) const { return combine(*this, o, 1.0); }
Function Function::operator-(const Function& o) const { return combine(*this, o, -1.0); }

Function Function::operator*(double s) const {
    std::vector<double> c = coeffs_;
    for (double& x : c) x *= s;
    return Function(domain_, degrees_, std::move(c), tol_);
}

double Function::coeff_bound() const {
    double s = 0.0;
    for (double c : coeffs_) s += std::abs(c);
    return s;
}

double Function::grid_sup(int per_axis) const {
    double m = 0.0;
    for (const auto& p : uniform_grid(domain_, per_axis)) m = std::max(m, std::abs((*this)(p)));
    return m;
}

Function Function::with_tolerance(double tol) const {
    Function f = *this;
    f.tol_ = tol;
    return f;
}

void Function::write(std::ostream& os) const {
    os << std::setprecision(17);
    os << dim();
    for (int d : degrees_) os << ' ' << d;
    for (int i = 0; i < dim(); ++i) os << ' ' << domain_.lower[i] << ' ' << domain_.upper[i];
    os << '\n';
    for (double c : coeffs_) os << c << '\n';
}

Function Function::read(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw Error(ErrorKind::IoError, "missing function header");
    std::istringstream hs(header);
    int d = 0;
    if (!(hs >> d) || d <= 0) throw Error(ErrorKind::IoError, "bad dimension in function header");
    std::vector<int> deg(d);
    for (int& x : deg)
        if (!(hs >> x)) throw Error(ErrorKind::IoError, "bad degree in function header");
    std::vector<double> lo(d), hi(d);
    for (int i = 0; i < d; ++i)
        if (!(hs >> lo[i] >> hi[i])) throw Error(ErrorKind::IoError, "bad bounds in function header");
    std::vector<double> c(total_size(deg));
    for (double& x : c)
        if (!(is >> x)) throw Error(ErrorKind::IoError, "truncated coefficient list");
    return Function(Box(lo, hi), deg, std::move(c));
}

void Function::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
    write(os);
}

Function Function::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::IoError, "cannot read " + path);
    return read(is);
}

int validation_points_per_axis(int dim, int preferred) {
    int n = preferred;
    while (n > 3 && std::pow(static_cast<double>(n), dim) > 40000.0) --n;
    return n;
}

Function compose(const Function& outer, const std::vector<Function>& inner,
                 const std::vector<int>& degrees, double tol, double* residual_out) {
    if (static_cast<int>(inner.size()) != outer.dim())
        throw Error(ErrorKind::DomainError, "compose: inner count must equal outer dimension");
    const Box& dom = inner.front().domain();
    for (const auto& g : inner)
        if (!(g.domain() == dom)) throw Error(ErrorKind::DomainError, "compose: inner domains differ");
    const int d = outer.dim();
    auto eval_at = [&](const double* w) {
        double y[16];
        for (int i = 0; i < d; ++i) y[i] = inner[i](w);
        return outer.eval_clamped(y);
    };
    const int per_axis = validation_points_per_axis(static_cast<int>(dom.dim()));
    const auto grid = uniform_grid(dom, per_axis);
    for (const auto& w : grid) {
        double y[16];
        for (int i = 0; i < d; ++i) y[i] = inner[i](w);
        if (outer.domain().excursion(y) > kClampSlack)
            throw Error(ErrorKind::RangeEscapesDomain, "compose: inner range leaves outer domain");
    }
    Function result = Function::project(dom, degrees, eval_at, tol);
    double res = 0.0;
    for (const auto& w : grid) res = std::max(res, std::abs(result(w) - eval_at(w.data())));
    if (residual_out) *residual_out = res;
    if (res > 10.0 * tol) {
        std::ostringstream os;
        os << "compose residual " << res << " exceeds 10x tolerance " << tol;
        throw Error(ErrorKind::TruncationOverflow, os.str());
    }
    return result;
}

double solve_monotone_1d(const Function& f, double y, double lo, double hi) {
    double flo = f.eval_clamped(&lo), fhi = f.eval_clamped(&hi);
    const bool increasing = fhi > flo;
    const double ymin = std::min(flo, fhi), ymax = std::max(flo, fhi);
    const double slack = 1e-12 * (1.0 + std::abs(ymax - ymin));
    if (y < ymin - slack || y > ymax + slack) {
        std::ostringstream os;
        os << "value " << y << " outside branch image [" << ymin << ", " << ymax << "]";
        throw Error(ErrorKind::DomainError, os.str());
    }
    if (y <= ymin) return increasing ? lo : hi;
    if (y >= ymax) return increasing ? hi : lo;
    double a = lo, b = hi;
    double x = lo + (y - flo) / (fhi - flo) * (hi - lo);
    for (int it = 0; it < 200; ++it) {
        double g;
        double v = f.value_gradient(&x, &g);
        double r = v - y;
        if (r == 0.0) return x;
        // keep the bracket [a, b] around the root
        if ((r < 0.0) == increasing) a = x; else b = x;
        double xn = (g != 0.0) ? x - r / g : 0.5 * (a + b);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (std::abs(xn - x) <= 1e-16 * (1.0 + std::abs(x)) || b - a <= 1e-16 * (1.0 + std::abs(x)))
            return xn;
        x = xn;
    }
    return x;
}

Function invert_monotone_1d(const Function& f, double lo, double hi, int degree, double tol) {
    if (f.dim() != 1) throw Error(ErrorKind::DomainError, "invert_monotone_1d needs a 1-D function");
    int sign = 0;
    const int checks = 257;
    for (int i = 0; i < checks; ++i) {
        double x = lo + (hi - lo) * i / (checks - 1);
        double g;
        f.value_gradient(&x, &g);
        int s = g > 0 ? 1 : (g < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign))
            throw Error(ErrorKind::NotMonotone, "derivative changes sign on branch");
        sign = s;
    }
    double flo = f.eval_clamped(&lo), fhi = f.eval_clamped(&hi);
    Box image = Box::interval(std::min(flo, fhi), std::max(flo, fhi));
    auto sampler = [&](const double* y) { return solve_monotone_1d(f, *y, lo, hi); };
    auto residual = [&](const Function& g) {
        double r = 0.0;
        for (int i = 0; i <= 400; ++i) {
            double y = image.lower[0] + image.width(0) * i / 400.0;
            double x = g(&y);
            r = std::max(r, std::abs(f.eval_clamped(&x, 1e-6) - y));
        }
        return r;
    };
    if (degree > 0) {
        Function g = Function::project(image, {degree}, sampler, tol);
        if (residual(g) > 10.0 * tol)
            throw Error(ErrorKind::TruncationOverflow, "inverse residual exceeds 10x tolerance");
        return g;
    }
    for (int deg = 32; deg <= 2048; deg *= 2) {
        Function g = Function::project(image, {deg}, sampler, tol);
        if (residual(g) <= tol) return g;
    }
    throw Error(ErrorKind::TruncationOverflow, "inverse did not reach tolerance at degree 2048");
}

}  // namespace renorm
