#include "renorm/henon.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "renorm/error.h"

namespace renorm {

namespace {

Error level_error(const Error& e, int level) {
    std::ostringstream os;
    os << "level " << level << ": " << e.what();
    return Error(e.kind(), os.str());
}

double sup_abs(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

// ---------------------------------------------------------------- HenonMap

double HenonMap::phi(const double* w) const {
    return f.eval_clamped(w) - eps.eval_clamped(w);
}

void HenonMap::eval(const double* w, double* out) const {
    const double x = w[0];
    const double first = f.eval_clamped(&x) - eps.eval_clamped(w);
    for (int j = 0; j < m; ++j) out[2 + j] = delta[j].eval_clamped(w);
    out[0] = first;
    out[1] = x;
}

Point HenonMap::operator()(const Point& w) const {
    Point out(dim());
    eval(w.data(), out.data());
    return out;
}

Eigen::MatrixXd HenonMap::derivative(const double* w) const {
    const int d = dim();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d, d);
    std::vector<double> g(d);
    eps.value_gradient(w, g.data());
    D(0, 0) = f.derivative(w, 0) - g[0];
    for (int i = 1; i < d; ++i) D(0, i) = -g[i];
    D(1, 0) = 1.0;
    for (int j = 0; j < m; ++j) {
        delta[j].value_gradient(w, g.data());
        for (int i = 0; i < d; ++i) D(2 + j, i) = g[i];
    }
    return D;
}

double HenonMap::eps_norm(int per_axis) const {
    return eps.grid_sup(per_axis > 0 ? per_axis : validation_points_per_axis(dim(), 17));
}

double HenonMap::delta_norm(int per_axis) const {
    double r = 0.0;
    for (const Function& d : delta)
        r = std::max(r, d.grid_sup(per_axis > 0 ? per_axis : validation_points_per_axis(dim(), 17)));
    return r;
}

HenonMap make_henon(int m, const Box& B, Function f, Function eps, VectorFunction delta,
                    double eps_bar, std::string provenance) {
    if (m < 0) throw Error(ErrorKind::DomainError, "m must be nonnegative");
    if (static_cast<int>(B.dim()) != m + 2) throw Error(ErrorKind::DomainError, "box dimension is not m + 2");
    if (f.dim() != 1 || !(f.domain() == B.project_axis(0)))
        throw Error(ErrorKind::DomainError, "f must live on the x-projection of B");
    if (!(eps.domain() == B)) throw Error(ErrorKind::DomainError, "eps must live on B");
    if (static_cast<int>(delta.size()) != m) throw Error(ErrorKind::DomainError, "delta needs m components");
    for (const Function& d : delta)
        if (!(d.domain() == B)) throw Error(ErrorKind::DomainError, "delta components must live on B");
    HenonMap F;
    F.m = m;
    F.B = B;
    F.f = std::move(f);
    F.eps = std::move(eps);
    F.delta = std::move(delta);
    F.eps_bar = eps_bar;
    F.provenance = std::move(provenance);
    return F;
}

HenonMap degenerate_map(const Function& f, int m, double r, int degree) {
    Box B = Box::cube(m + 2, r);
    Function f1 = f;
    if (!(f.domain() == B.project_axis(0)))
        f1 = Function::project(B.project_axis(0), f.degrees(), [&](const double* x) { return f.eval_clamped(x); });
    std::vector<int> deg(m + 2, degree);
    std::size_t total = 1;
    for (int d : deg) total *= d + 1;
    Function zero(B, deg, std::vector<double>(total, 0.0));
    return make_henon(m, B, f1, zero, VectorFunction(m, zero), 0.0, "degenerate");
}

// ---------------------------------------------------------------- fixed points

FixedPoints fixed_points(const HenonMap& F, double classify_tol) {
    const double lo = F.B.lower[0], hi = F.B.upper[0];
    auto g = [&](double x) { return F.f.eval_clamped(&x) - x; };
    std::vector<double> roots;
    const int n = 512;
    double xp = lo, gp = g(lo);
    for (int i = 1; i <= n; ++i) {
        double x = lo + (hi - lo) * i / n, gx = g(x);
        if ((gx < 0) != (gp < 0) || gx == 0.0) {
            double a = xp, b = x, ga = gp;
            for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
                double c = 0.5 * (a + b), gc = g(c);
                if ((gc < 0) == (ga < 0)) { a = c; ga = gc; } else { b = c; }
            }
            roots.push_back(0.5 * (a + b));
        }
        xp = x;
        gp = gx;
    }
    if (roots.empty()) throw Error(ErrorKind::NewtonDiverged, "f has no fixed point on the x-interval");

    const int d = F.dim();
    FixedPoints out;
    bool have0 = false, have1 = false;
    for (double r : roots) {
        Point w(d, 0.0);
        w[0] = w[1] = r;
        for (int it = 0; it < 30; ++it)
            for (int j = 0; j < F.m; ++j) w[2 + j] = F.delta[j].eval_clamped(w.data(), 1e6);
        Point Fw(d);
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            if (F.B.excursion(w.data()) > kClampSlack) break;
            F.eval(w.data(), Fw.data());
            Eigen::VectorXd G(d);
            for (int i = 0; i < d; ++i) G[i] = Fw[i] - w[i];
            Eigen::MatrixXd J = F.derivative(w.data()) - Eigen::MatrixXd::Identity(d, d);
            Eigen::VectorXd step = J.fullPivLu().solve(-G);
            if (!step.allFinite()) break;
            for (int i = 0; i < d; ++i) w[i] += step[i];
            if (sup_abs(step) < 1e-14) {
                converged = F.B.excursion(w.data()) <= kClampSlack;
                break;
            }
        }
        if (!converged) throw Error(ErrorKind::NewtonDiverged, "Newton for a fixed point did not converge in B");
        Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(F.derivative(w.data())).eigenvalues();
        bool negative = false, significant = false;
        for (int i = 0; i < ev.size(); ++i) {
            if (std::abs(ev[i]) <= classify_tol) continue;  // degenerate directions carry no sign
            significant = true;
            if (std::abs(ev[i].real()) <= classify_tol)
                throw Error(ErrorKind::ClassificationAmbiguous, "eigenvalue real part within tolerance of zero");
            if (ev[i].real() < 0) negative = true;
        }
        if (!significant) throw Error(ErrorKind::ClassificationAmbiguous, "all eigenvalues vanish");
        if (!negative && !have0) {
            out.beta0 = w;
            out.eig0 = ev;
            have0 = true;
        } else if (negative && !have1) {
            out.beta1 = w;
            out.eig1 = ev;
            have1 = true;
        }
    }
    if (!have0 || !have1) throw Error(ErrorKind::ClassificationAmbiguous, "could not find one fixed point of each type");
    return out;
}

JacobianValue jacobian(const HenonMap& F, const double* w) {
    Eigen::MatrixXd D = F.derivative(w);
    JacobianValue out;
    out.det = D.determinant();
    const int m = F.m;
    const double eps_y = -D(0, 1);
    if (m == 0) {
        out.block = eps_y;
        out.has_block = true;
        return out;
    }
    Eigen::MatrixXd Z = D.block(2, 2, m, m);
    Eigen::VectorXd Y = D.block(2, 1, m, 1);
    Eigen::RowVectorXd E = -D.block(0, 2, 1, m);
    const double detZ = Z.determinant();
    if (detZ != 0.0 && std::isfinite(detZ)) {
        out.block = (eps_y - (E * Z.partialPivLu().solve(Y))(0)) * detZ;
        out.has_block = true;
    }
    return out;
}

// ---------------------------------------------------------------- RenormStep

RenormStep::RenormStep(HenonMap F, double sigma0, double shift)
    : F_(std::move(F)), sigma0_(sigma0), shift_(shift) {
    UnimodalMap u(F_.f);
    crit_ = u.critical_point();
    if (u(crit_) > crit_) {
        branch_lo_ = crit_;
        branch_hi_ = u.hi();
    } else {
        branch_lo_ = u.lo();
        branch_hi_ = crit_;
    }
    // monotone away from the critical point itself
    Function df = F_.f.partial(0);
    int sign = 0;
    for (int i = 1; i <= 256; ++i) {
        double x = branch_lo_ + (branch_hi_ - branch_lo_) * i / 257.0;
        double v = df.eval_clamped(&x);
        int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign))
            throw Error(ErrorKind::HInversionFailed, "inverse branch of f is not monotone");
        sign = s;
    }
}

double RenormStep::finv(double y) const {
    try {
        return solve_monotone_1d(F_.f, y, branch_lo_, branch_hi_);
    } catch (const Error& e) {
        throw Error(ErrorKind::HInversionFailed, std::string("f^-1: ") + e.what());
    }
}

void RenormStep::p(double y, double* out) const {
    if (F_.m == 0) return;
    std::vector<double> w(F_.dim(), 0.0);
    w[0] = y;
    w[1] = finv(y);
    for (int j = 0; j < F_.m; ++j) out[j] = F_.delta[j].eval_clamped(w.data());
}

void RenormStep::q(double y, double* out) const {
    if (F_.m == 0) return;
    std::vector<double> w(F_.dim(), 0.0), g(F_.dim());
    w[0] = y;
    w[1] = finv(y);
    const double dg = 1.0 / F_.f.derivative(&w[1], 0);
    for (int j = 0; j < F_.m; ++j) {
        F_.delta[j].value_gradient(w.data(), g.data());
        out[j] = g[0] + g[1] * dg;
    }
}

void RenormStep::H(const double* w, double* out) const {
    const int m = F_.m;
    std::vector<double> pv(m);
    p(w[1], pv.data());
    out[0] = F_.phi(w);
    out[1] = w[1];
    for (int j = 0; j < m; ++j) out[2 + j] = w[2 + j] - pv[j];
}

double RenormStep::solve_offset(double X, double g, double Y, const double* Zp) const {
    const int d = F_.dim();
    thread_local std::vector<double> w, grad;
    w.assign(d, 0.0);
    grad.resize(d);
    w[1] = Y;
    for (int j = 0; j < F_.m; ++j) w[2 + j] = Zp[j];
    double D = 0.0, prev_step = INFINITY;
    for (int it = 0; it < 60; ++it) {
        w[0] = g + D;
        double e = F_.eps.value_gradient(w.data(), grad.data());
        double r = F_.f.difference(&g, &D) - e;
        double dr = F_.f.derivative(w.data(), 0) - grad[0];
        if (dr == 0.0 || !std::isfinite(dr)) break;
        double step = r / dr;
        D -= step;
        // stalled steps at the rounding floor of r also count as converged
        const bool stalled = std::abs(step) >= 0.5 * prev_step && std::abs(step) <= 1e-12 * std::abs(D);
        prev_step = std::abs(step);
        if (std::abs(step) <= 1e-15 * std::abs(D) || step == 0.0 || stalled) {
            if (g + D < F_.B.lower[0] - kClampSlack || g + D > F_.B.upper[0] + kClampSlack) break;
            return D;
        }
    }
    std::ostringstream os;
    os << "horizontal inversion failed at X = " << X << ", Y = " << Y;
    throw Error(ErrorKind::HInversionFailed, os.str());
}

void RenormStep::H_inv(const double* W, double* out) const {
    const int m = F_.m;
    const double X = W[0], Y = W[1];
    std::vector<double> Zp(m);
    p(Y, Zp.data());
    for (int j = 0; j < m; ++j) Zp[j] += W[2 + j];
    const double g = finv(X);
    const double D = solve_offset(X, g, Y, Zp.data());
    out[0] = g + D;
    out[1] = Y;
    for (int j = 0; j < m; ++j) out[2 + j] = Zp[j];
}

Eigen::MatrixXd RenormStep::DH_inv(const double* W) const {
    const int d = F_.dim(), m = F_.m;
    std::vector<double> P(d), grad(d), qv(m);
    H_inv(W, P.data());
    F_.eps.value_gradient(P.data(), grad.data());
    const double phx = F_.f.derivative(P.data(), 0) - grad[0];
    if (phx == 0.0) throw Error(ErrorKind::SingularDerivative, "d_x phi vanishes");
    q(W[1], qv.data());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
    // rows: x = phi^-1, y = Y, z = Z + p(Y)
    M(0, 0) = 1.0 / phx;
    double ycoef = -grad[1];
    for (int j = 0; j < m; ++j) ycoef += -grad[2 + j] * qv[j];
    M(0, 1) = -ycoef / phx;
    for (int j = 0; j < m; ++j) M(0, 2 + j) = grad[2 + j] / phx;
    M(1, 1) = 1.0;
    for (int j = 0; j < m; ++j) {
        M(2 + j, 1) = qv[j];
        M(2 + j, 2 + j) = 1.0;
    }
    return M;
}

void RenormStep::phi_inv_gradient(const double* W, double* grad) const {
    Eigen::MatrixXd M = DH_inv(W);
    for (int i = 0; i < F_.dim(); ++i) grad[i] = M(0, i);
}

void RenormStep::unscale(const double* w, double* out) const {
    const int d = F_.dim();
    for (int i = 0; i < d; ++i) out[i] = sigma0_ * w[i];
    out[0] += shift_;
    out[1] += shift_;
}

void RenormStep::psi_v(const double* w, double* out) const {
    std::vector<double> W(F_.dim());
    unscale(w, W.data());
    H_inv(W.data(), out);
}

void RenormStep::psi_c(const double* w, double* out) const {
    std::vector<double> v(F_.dim());
    psi_v(w, v.data());
    F_.eval(v.data(), out);
}

Eigen::MatrixXd RenormStep::D_psi_v(const double* w) const {
    std::vector<double> W(F_.dim());
    unscale(w, W.data());
    return DH_inv(W.data()) * sigma0_;
}

Eigen::MatrixXd RenormStep::D_psi_c(const double* w) const {
    std::vector<double> v(F_.dim());
    psi_v(w, v.data());
    return F_.derivative(v.data()) * D_psi_v(w);
}

void RenormStep::build_pq() {
    const int m = F_.m;
    p_fun_.clear();
    q_fun_.clear();
    if (m == 0) return;
    double a = sigma0_ * F_.B.lower[1] + shift_, b = sigma0_ * F_.B.upper[1] + shift_;
    Box Yd = Box::interval(std::min(a, b), std::max(a, b));
    const int deg = 48;
    Function ginv = Function::project(Yd, {deg}, [&](const double* y) { return finv(*y); });
    std::vector<Function> inner(F_.dim(), Function(Yd, {0}, {0.0}));
    inner[0] = Function::coordinate(Yd, 0);
    inner[1] = ginv;
    for (int j = 0; j < m; ++j) {
        Function pj = compose(F_.delta[j], inner, {deg}, F_.delta[j].tolerance());
        q_fun_.push_back(pj.partial(0));
        p_fun_.push_back(std::move(pj));
    }
}

// ---------------------------------------------------------------- renormalization

namespace {

// The pre-renormalized map along the line W0 = (X, Y0, 0).
struct BaseData {
    double X, g, D, xi, A, prf;
    std::vector<double> Zp, zeta, eta;
};

BaseData base_data(const RenormStep& step, double X, double Y0, const std::vector<double>& pY0) {
    const HenonMap& F = step.F();
    const int m = F.m, d = F.dim();
    BaseData b;
    b.X = X;
    b.g = step.finv(X);
    b.Zp = pY0;
    b.D = step.solve_offset(X, b.g, Y0, b.Zp.data());
    b.xi = b.g + b.D;
    std::vector<double> w(d);
    w[0] = b.xi;
    w[1] = Y0;
    for (int j = 0; j < m; ++j) w[2 + j] = b.Zp[j];
    b.zeta.resize(m);
    for (int j = 0; j < m; ++j) b.zeta[j] = F.delta[j].eval_clamped(w.data());
    w[0] = X;
    w[1] = b.xi;
    for (int j = 0; j < m; ++j) w[2 + j] = b.zeta[j];
    b.A = F.f.eval_clamped(&X) - F.eps.eval_clamped(w.data());
    b.eta.resize(m);
    for (int j = 0; j < m; ++j) b.eta[j] = F.delta[j].eval_clamped(w.data());
    w[0] = b.A;
    w[1] = X;
    for (int j = 0; j < m; ++j) w[2 + j] = b.eta[j];
    b.prf = F.f.eval_clamped(&b.A) - F.eps.eval_clamped(w.data());
    return b;
}

// Root of X -> d/dX prf_line(X, Y0) next to `c`, by bisection on a sampled sign change.
double line_critical_point(const RenormStep& step, double c, double h, double Y0) {
    const HenonMap& F = step.F();
    auto du = [&](double X) {
        double d;
        step.prf_line(X, Y0, &d);
        return d;
    };
    const double lo = std::max(c - h, F.B.lower[0]), hi = std::min(c + h, F.B.upper[0]);
    const int n = 32;
    double best = std::numeric_limits<double>::quiet_NaN(), a = 0, b = 0;
    double xp = lo, dp = du(lo);
    for (int i = 1; i <= n; ++i) {
        double x = lo + (hi - lo) * i / n, dx = du(x);
        if ((dx < 0) != (dp < 0) || dx == 0.0) {
            double mid = 0.5 * (x + xp);
            if (std::isnan(best) || std::abs(mid - c) < std::abs(best - c)) {
                best = mid;
                a = xp;
                b = x;
            }
        }
        xp = x;
        dp = dx;
    }
    if (std::isnan(best)) throw Error(ErrorKind::NotRenormalizable, "return map has no critical point near c");
    double da = du(a);
    while (b - a > 4e-16 * (1.0 + std::abs(a))) {
        double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        double dm = du(mid);
        if (dm == 0.0) return mid;
        if ((dm < 0) == (da < 0)) {
            a = mid;
            da = dm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

Normalization find_normalization(const RenormStep& step, const UnimodalMap& uf) {
    const double c = uf.critical_point();
    const double h = 0.5 * std::abs(uf(uf(c)) - c);
    double t = c;
    for (int it = 0; it < 40; ++it) {
        double tn = line_critical_point(step, t, h, t);
        bool done = std::abs(tn - t) <= 1e-15;
        t = tn;
        if (done) break;
    }
    Normalization N;
    N.shift = t;
    N.sigma0 = step.prf_line(t, t) - t;
    return N;
}

}  // namespace

double RenormStep::prf_line(double X, double Y, double* dX) const {
    const int m = F_.m, d = F_.dim();
    std::vector<double> pY(m);
    p(Y, pY.data());
    BaseData b = base_data(*this, X, Y, pY);
    if (dX) {
        // chain rule through xi(X), zeta, A and eta
        std::vector<double> w(d), g(d);
        w[0] = b.xi;
        w[1] = Y;
        for (int j = 0; j < m; ++j) w[2 + j] = b.Zp[j];
        F_.eps.value_gradient(w.data(), g.data());
        const double dxi = 1.0 / (F_.f.derivative(w.data(), 0) - g[0]);
        std::vector<double> dzeta(m);
        for (int j = 0; j < m; ++j) {
            F_.delta[j].value_gradient(w.data(), g.data());
            dzeta[j] = g[0] * dxi;
        }
        w[0] = X;
        w[1] = b.xi;
        for (int j = 0; j < m; ++j) w[2 + j] = b.zeta[j];
        F_.eps.value_gradient(w.data(), g.data());
        double dA = F_.f.derivative(&X, 0) - g[0] - g[1] * dxi;
        for (int j = 0; j < m; ++j) dA -= g[2 + j] * dzeta[j];
        std::vector<double> deta(m);
        for (int j = 0; j < m; ++j) {
            std::vector<double> gj(d);
            F_.delta[j].value_gradient(w.data(), gj.data());
            deta[j] = gj[0] + gj[1] * dxi;
            for (int l = 0; l < m; ++l) deta[j] += gj[2 + l] * dzeta[l];
        }
        w[0] = b.A;
        w[1] = X;
        for (int j = 0; j < m; ++j) w[2 + j] = b.eta[j];
        F_.eps.value_gradient(w.data(), g.data());
        double r = (F_.f.derivative(&b.A, 0) - g[0]) * dA - g[1];
        for (int j = 0; j < m; ++j) r -= g[2 + j] * deta[j];
        *dX = r;
    }
    return b.prf;
}

Normalization normalization_of(const HenonMap& F) {
    UnimodalMap uf(F.f);
    RenormStep probe(F, 0.0);
    return find_normalization(probe, uf);
}

double dilation_of(const HenonMap& F) { return normalization_of(F).sigma0; }

RenormStep renormalize(const HenonMap& F, const RenormOptions& opt) {
    UnimodalMap uf;
    try {
        uf = UnimodalMap(F.f);
    } catch (const Error& e) {
        throw Error(ErrorKind::NotRenormalizable, std::string("first coordinate is not unimodal: ") + e.what());
    }
    if (!is_renormalizable_1d(uf).renormalizable)
        throw Error(ErrorKind::NotRenormalizable, "f is not renormalizable in one dimension");

    RenormStep step(F, 0.0);
    const Normalization nz = find_normalization(step, uf);
    const double sigma0 = nz.sigma0, t = nz.shift;
    if (!(std::abs(sigma0) > 0.0 && std::abs(sigma0) < 1.0))
        throw Error(ErrorKind::NotRenormalizable, "dilation outside (0, 1) in modulus");
    step.sigma0_ = sigma0;
    step.shift_ = t;

    const int m = F.m, d = F.dim();
    const Function& f = F.f;
    const Function& eps = F.eps;
    const VectorFunction& delta = F.delta;

    std::vector<double> pt(m);
    step.p(t, pt.data());
    auto base = [&](double X) { return base_data(step, X, t, pt); };

    // f_next on its own 1-D nodes
    const int fdeg = opt.f_degree >= 0 ? opt.f_degree : f.degrees()[0];
    const Box Ix = F.B.project_axis(0);
    std::vector<double> fvals;
    for (const Point& x : Function::nodes(Ix, {fdeg})) fvals.push_back((base(sigma0 * x[0] + t).prf - t) / sigma0);
    Function f_next = Function::project_nodes(Ix, {fdeg}, fvals, f.tolerance());

    std::vector<int> deg = opt.degrees.empty() ? eps.degrees() : opt.degrees;
    if (static_cast<int>(deg.size()) != d) throw Error(ErrorKind::DomainError, "degree list must have m + 2 entries");
    // scaled node offsets per axis; x and y are measured from t
    std::vector<std::vector<double>> axis(d);
    for (int i = 0; i < d; ++i)
        for (const Point& x : Function::nodes(F.B.project_axis(i), {deg[i]})) axis[i].push_back(sigma0 * x[0]);

    std::vector<BaseData> bases;
    for (double X : axis[0]) bases.push_back(base(X + t));
    std::vector<std::vector<double>> pY(axis[1].size(), std::vector<double>(m));
    for (std::size_t i = 0; i < axis[1].size(); ++i) step.p(axis[1][i] + t, pY[i].data());

    std::size_t total = 1;
    for (int k : deg) total *= k + 1;
    std::vector<double> eps_vals(total);
    std::vector<std::vector<double>> delta_vals(m, std::vector<double>(total));

    std::vector<int> idx(d, 0);
    std::vector<double> Zp(m), zeta(m), dzeta(m), eta_step(m), p(d), h(d);
    for (std::size_t n = 0; n < total; ++n) {
        const BaseData& b = bases[idx[0]];
        const double X = b.X, dY = axis[1][idx[1]], Y = dY + t;
        for (int j = 0; j < m; ++j) Zp[j] = axis[2 + j][idx[2 + j]] + pY[idx[1]][j];
        const double D = step.solve_offset(X, b.g, Y, Zp.data());

        // zeta = delta(xi, Y, Zp), and zeta - zeta0 without cancellation
        p[0] = b.xi;
        p[1] = t;
        for (int j = 0; j < m; ++j) p[2 + j] = b.Zp[j];
        h[0] = D - b.D;
        h[1] = dY;
        for (int j = 0; j < m; ++j) h[2 + j] = Zp[j] - b.Zp[j];
        for (int j = 0; j < m; ++j) {
            dzeta[j] = delta[j].difference(p.data(), h.data());
            zeta[j] = b.zeta[j] + dzeta[j];
        }

        // A - A0 and eta - eta0 from the base point (X, xi0, zeta0)
        p[0] = X;
        p[1] = b.xi;
        for (int j = 0; j < m; ++j) p[2 + j] = b.zeta[j];
        h[0] = 0.0;
        h[1] = D - b.D;
        for (int j = 0; j < m; ++j) h[2 + j] = dzeta[j];
        const double dA = -eps.difference(p.data(), h.data());
        for (int j = 0; j < m; ++j) eta_step[j] = delta[j].difference(p.data(), h.data());

        // PRF_1(W) - PRF_1(W0)
        p[0] = b.A;
        p[1] = X;
        for (int j = 0; j < m; ++j) p[2 + j] = b.eta[j];
        h[0] = dA;
        h[1] = 0.0;
        for (int j = 0; j < m; ++j) h[2 + j] = eta_step[j];
        const double diff = f.difference(&b.A, &dA) - eps.difference(p.data(), h.data());
        eps_vals[n] = -diff / sigma0;

        // delta_next = (delta(X, xi, zeta) - delta(X, f^-1(X), 0)) / sigma0
        p[0] = X;
        p[1] = b.g;
        for (int j = 0; j < m; ++j) p[2 + j] = 0.0;
        h[0] = 0.0;
        h[1] = D;
        for (int j = 0; j < m; ++j) h[2 + j] = zeta[j];
        for (int j = 0; j < m; ++j) delta_vals[j][n] = delta[j].difference(p.data(), h.data()) / sigma0;

        for (int i = d; i-- > 0;) {
            if (++idx[i] <= deg[i]) break;
            idx[i] = 0;
        }
    }

    Function eps_next = Function::project_nodes(F.B, deg, eps_vals, eps.tolerance());
    VectorFunction delta_next;
    for (int j = 0; j < m; ++j)
        delta_next.push_back(Function::project_nodes(F.B, deg, delta_vals[j], delta[j].tolerance()));

    step.F_next_ = make_henon(m, F.B, std::move(f_next), std::move(eps_next), std::move(delta_next), F.eps_bar,
                              "R(" + F.provenance + ")");
    step.build_pq();

    // the rescaled return map must send B into B
    Point out(d);
    for (const Point& w : boundary_samples(F.B, opt.boundary_per_axis)) {
        step.F_next_.eval(w.data(), out.data());
        if (F.B.excursion(out.data()) > kClampSlack)
            throw Error(ErrorKind::NotRenormalizable, "renormalized map does not send B into B");
    }
    step.eps_next_norm = step.F_next_.eps_norm();
    step.delta_next_norm = step.F_next_.delta_norm();
    return step;
}

RenormStep restore_step(HenonMap F, HenonMap F_next, double sigma0, double shift) {
    RenormStep step(std::move(F), sigma0, shift);
    step.F_next_ = std::move(F_next);
    step.build_pq();
    step.eps_next_norm = step.F_next_.eps_norm();
    step.delta_next_norm = step.F_next_.delta_norm();
    return step;
}

ConjugacyResidual conjugacy_residual(const RenormStep& step, int per_axis) {
    const HenonMap& F = step.F();
    const HenonMap& G = step.F_next();
    const int d = F.dim();
    ConjugacyResidual r;
    Point a(d), b(d), v(d), Gw(d), c(d), t(d);
    for (const Point& w : uniform_grid(G.B, per_axis)) {
        G.eval(w.data(), Gw.data());
        step.psi_v(Gw.data(), a.data());
        step.psi_v(w.data(), v.data());
        F.eval(v.data(), t.data());
        F.eval(t.data(), b.data());
        step.psi_c(w.data(), c.data());
        F.eval(c.data(), t.data());
        for (int i = 0; i < d; ++i) {
            r.second_iterate = std::max(r.second_iterate, std::abs(a[i] - b[i]));
            r.via_psi_c = std::max(r.via_psi_c, std::abs(a[i] - t[i]));
        }
        r.y_relation = std::max(r.y_relation, std::abs(a[1] - c[0]));
    }
    return r;
}

// ---------------------------------------------------------------- towers

double fit_rate(const std::vector<double>& values, int first) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = first; k < static_cast<int>(values.size()); ++k) {
        if (!(values[k] > 0.0)) continue;
        double y = std::log(values[k]);
        sx += k;
        sy += y;
        sxx += double(k) * k;
        sxy += k * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::exp(slope);
}

namespace {

double distance_to(const HenonMap& F, const Function& f_star) {
    double r = 0.0;
    for (int i = 0; i <= 400; ++i) {
        double x = F.B.lower[0] + F.B.width(0) * i / 400.0;
        r = std::max(r, std::abs(F.f.eval_clamped(&x) - f_star.eval_clamped(&x)));
    }
    return std::max({r, F.eps_norm(), F.delta_norm()});
}

}  // namespace

RenormalizationSequence renormalize_tower(const HenonMap& F, int N, const RenormOptions& opt,
                                          const Function* f_star) {
    RenormalizationSequence seq;
    seq.maps.push_back(F);
    seq.eps_norms.push_back(F.eps_norm());
    seq.delta_norms.push_back(F.delta_norm());
    if (f_star) seq.distance_to_fixed.push_back(distance_to(F, *f_star));
    for (int k = 0; k < N; ++k) {
        try {
            seq.steps.push_back(renormalize(seq.maps.back(), opt));
        } catch (const Error& e) {
            throw level_error(e, k);
        }
        const HenonMap& G = seq.steps.back().F_next();
        seq.maps.push_back(G);
        seq.eps_norms.push_back(seq.steps.back().eps_next_norm);
        seq.delta_norms.push_back(seq.steps.back().delta_next_norm);
        if (f_star) seq.distance_to_fixed.push_back(distance_to(G, *f_star));
    }
    if (f_star && N >= 2) seq.rho_hat = fit_rate(seq.distance_to_fixed, 1);
    return seq;
}

// sigma_k is only reproducible to about 1e-12 at depth 5
constexpr double kTuneTol = 1e-12;

RenormalizationSequence tune_and_build(const std::function<HenonMap(double)>& family, int depth,
                                       double sigma_star, const RenormOptions& opt, const Function* f_star,
                                       double a0) {
    struct Eval {
        double a, e;
        RenormalizationSequence seq;
    };
    auto evaluate = [&](double a, int level) {
        Eval r{a, 0.0, renormalize_tower(family(a), level, opt, f_star)};
        r.e = dilation_of(r.seq.maps.back()) - sigma_star;
        return r;
    };
    // a failing trial is pulled back toward the last good parameter
    auto safe_evaluate = [&](double a_good, double a, int level) {
        for (int tries = 0; tries < 30; ++tries) {
            try {
                return evaluate(a, level);
            } catch (const Error&) {
                a = 0.5 * (a + a_good);
            }
        }
        return evaluate(a_good, level);
    };

    // start from a0, or the nearest renormalizable parameter on a doubling search around it
    auto first_good = [&]() -> Eval {
        const int level = std::min(1, depth);
        std::string last;
        for (double h = 0.0; h <= 1.0; h = h == 0.0 ? 1e-3 : 2.0 * h)
            for (double s : {1.0, -1.0}) {
                if (h == 0.0 && s < 0) continue;
                try {
                    return evaluate(a0 + s * h, level);
                } catch (const Error& e) {
                    last = e.what();
                }
            }
        throw Error(ErrorKind::NotRenormalizable, "no renormalizable parameter near the seed: " + last);
    };

    Eval best = first_good();
    double a = best.a;
    double slope = 0.0, prev_slope = 0.0;
    for (int level = 1; level <= depth; ++level) {
        Eval e0 = best.seq.depth() == level && best.a == a ? best : evaluate(a, level);
        if (std::abs(e0.e) > kTuneTol) {
            double a1;
            if (slope != 0.0) {
                double ratio = prev_slope != 0.0 ? slope / prev_slope : 4.67;
                a1 = a - e0.e / (slope * ratio);
            } else {
                a1 = a + 1e-5;
            }
            Eval e1 = safe_evaluate(a, a1, level);
            double new_slope = (e1.e - e0.e) / (e1.a - e0.a);
            for (int it = 0; it < 8; ++it) {
                if (std::abs(e1.e) <= kTuneTol || e1.e == e0.e) break;
                double a2 = e1.a - e1.e * (e1.a - e0.a) / (e1.e - e0.e);
                if (std::abs(a2 - e1.a) <= 1e-16 * (1.0 + std::abs(a2))) break;
                Eval e2 = safe_evaluate(e1.a, a2, level);
                new_slope = (e2.e - e1.e) / (e2.a - e1.a);
                e0 = std::move(e1);
                e1 = std::move(e2);
            }
            if (std::abs(e0.e) < std::abs(e1.e)) std::swap(e0, e1);
            prev_slope = slope;
            slope = new_slope;
            a = e1.a;
            best = std::move(e1);
        } else {
            best = std::move(e0);
        }
    }
    RenormalizationSequence seq = best.seq.depth() == depth ? std::move(best.seq) : evaluate(a, depth).seq;
    seq.tuning_parameter = a;
    return seq;
}

}  // namespace renorm
