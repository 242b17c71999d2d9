#include "renorm/scope.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "renorm/error.h"

namespace renorm {

Word Word::parse(const std::string& s) {
    Word w;
    for (char ch : s) {
        if (ch == 'v' || ch == 'V') w.letters.push_back(0);
        else if (ch == 'c' || ch == 'C') w.letters.push_back(1);
        else throw Error(ErrorKind::ConfigError, "word letters are v or c, got '" + s + "'");
    }
    return w;
}

Word Word::from_index(std::uint64_t index, int length) {
    if (length < 0 || length > 63) throw Error(ErrorKind::DomainError, "word length out of range");
    Word w;
    for (int i = 0; i < length; ++i) w.letters.push_back(static_cast<int>((index >> i) & 1u));
    if (length < 64 && (index >> length) != 0) throw Error(ErrorKind::DomainError, "word index too large for length");
    return w;
}

std::string Word::str() const {
    std::string s;
    for (int l : letters) s.push_back(l ? 'c' : 'v');
    return s;
}

std::uint64_t Word::index() const {
    if (letters.size() > 63) throw Error(ErrorKind::DomainError, "word too long for an index");
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < letters.size(); ++i) r |= static_cast<std::uint64_t>(letters[i]) << i;
    return r;
}

Word Word::operator+(const Word& tail) const {
    Word w = *this;
    w.letters.insert(w.letters.end(), tail.letters.begin(), tail.letters.end());
    return w;
}

ScopeMap::ScopeMap(const RenormalizationSequence& seq, int k, int n, Word w)
    : seq_(&seq), k_(k), n_(n), word_(std::move(w)) {
    if (k < 0 || n < k || n > seq.depth()) {
        std::ostringstream os;
        os << "scope map " << n << " -> " << k << " needs a tower of depth >= " << n << ", have " << seq.depth();
        throw Error(ErrorKind::DepthExceeded, os.str());
    }
    if (word_.size() != n - k) throw Error(ErrorKind::DomainError, "word length must be n - k");
}

void ScopeMap::eval(const double* w, double* out) const {
    const int d = seq_->maps[n_].dim();
    std::vector<double> cur(w, w + d), next(d);
    for (int j = n_ - 1; j >= k_; --j) {
        const RenormStep& st = seq_->steps[j];
        if (word_.letters[j - k_]) st.psi_c(cur.data(), next.data());
        else st.psi_v(cur.data(), next.data());
        cur.swap(next);
    }
    std::copy(cur.begin(), cur.end(), out);
}

Point ScopeMap::operator()(const Point& w) const {
    Point out(w.size());
    eval(w.data(), out.data());
    return out;
}

Eigen::MatrixXd ScopeMap::jacobian(const double* w) const {
    const int d = seq_->maps[n_].dim();
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d);
    std::vector<double> cur(w, w + d), next(d);
    for (int j = n_ - 1; j >= k_; --j) {
        const RenormStep& st = seq_->steps[j];
        if (word_.letters[j - k_]) {
            J = st.D_psi_c(cur.data()) * J;
            st.psi_c(cur.data(), next.data());
        } else {
            J = st.D_psi_v(cur.data()) * J;
            st.psi_v(cur.data(), next.data());
        }
        cur.swap(next);
    }
    return J;
}

namespace {

double dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

template <class Map>
Point iterate_to_fixed_point(const Map& map, Point x, const char* what, double* residual) {
    Point y(x.size());
    for (int it = 0; it < 400; ++it) {
        map(x.data(), y.data());
        double r = dist(x, y);
        x.swap(y);
        if (r <= 1e-15) break;
    }
    map(x.data(), y.data());
    double r = dist(x, y);
    if (residual) *residual = r;
    if (!(r <= 1e-12)) {
        std::ostringstream os;
        os << what << " iteration did not settle (step " << r << ")";
        throw Error(ErrorKind::NoConvergence, os.str());
    }
    return x;
}

void require_tower(const RenormalizationSequence& seq) {
    if (seq.depth() < 1) throw Error(ErrorKind::DepthExceeded, "scope analysis needs a tower of depth >= 1");
}

}  // namespace

TipEstimate tips(const RenormalizationSequence& seq, int per_axis) {
    require_tower(seq);
    const int N = seq.depth();
    const RenormStep& last = seq.steps[N - 1];
    TipEstimate te;
    Point tauN = iterate_to_fixed_point([&](const double* a, double* b) { last.psi_v(a, b); },
                                        seq.maps[N].B.center(), "tip", &te.fixed_point_residual);
    te.tau.assign(N + 1, Point());
    te.radius.assign(N + 1, 0.0);
    te.tau[N] = tauN;
    std::vector<Point> samples = boundary_samples(seq.maps[N].B, per_axis);
    for (int k = N; k >= 0; --k) {
        ScopeMap sm(seq, k, N, Word::all_v(N - k));
        if (k < N) te.tau[k] = sm(tauN);
        double r = 0.0;
        for (const Point& s : samples) {
            Point img(s.size());
            if (k == N) last.psi_v(s.data(), img.data());
            else sm.eval(s.data(), img.data());
            r = std::max(r, dist(img, te.tau[k]));
        }
        te.radius[k] = 2.0 * r;
    }
    return te;
}

std::vector<Point> critical_points(const RenormalizationSequence& seq) {
    require_tower(seq);
    const int N = seq.depth();
    const RenormStep& last = seq.steps[N - 1];
    Point cN = iterate_to_fixed_point([&](const double* a, double* b) { last.psi_c(a, b); },
                                      seq.maps[N].B.center(), "critical point", nullptr);
    std::vector<Point> c(N + 1);
    c[N] = cN;
    for (int k = N - 1; k >= 0; --k) c[k] = ScopeMap(seq, k, N, Word::all_c(N - k))(cN);
    return c;
}

ScopeAnalysis::ScopeAnalysis(const RenormalizationSequence& seq, int R_degree)
    : seq_(&seq), R_degree_(R_degree), tips_(tips(seq)) {}

void ScopeAnalysis::centered(int n, int k, const double* w, double* out) const {
    const Point& tn = tip(n);
    const Point& tk = tip(k);
    Point p(tn.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = tn[i] + w[i];
    ScopeMap(*seq_, k, n, Word::all_v(n - k)).eval(p.data(), out);
    for (std::size_t i = 0; i < p.size(); ++i) out[i] -= tk[i];
}

double ScopeAnalysis::x_plus_S(int n, int k, const double* w) const {
    const ScopeDecomposition& sd = at(n, k);
    const int m = static_cast<int>(sd.u.size());
    std::vector<double> psi(m + 2);
    centered(n, k, w, psi.data());
    double ud = m ? sd.u.dot(sd.d) : 0.0;
    double v = psi[0] - (sd.t - ud) * psi[1];
    for (int i = 0; i < m; ++i) v -= sd.u[i] * psi[2 + i];
    return v / sd.alpha;
}

const ScopeDecomposition& ScopeAnalysis::at(int n, int k) const {
    if (k < 0 || n <= k || n > depth()) {
        std::ostringstream os;
        os << "decomposition (" << n << ", " << k << ") needs 0 <= k < n <= " << depth();
        throw Error(ErrorKind::DepthExceeded, os.str());
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = cache_[{n, k}];
    if (slot) return *slot;

    const HenonMap& Fn = seq_->maps[n];
    const int m = Fn.m;
    const int d = m + 2;
    auto sd = std::make_unique<ScopeDecomposition>();
    sd->n = n;
    sd->k = k;
    sd->D = Eigen::MatrixXd::Identity(d, d);
    for (int j = k; j < n; ++j) sd->D = sd->D * seq_->steps[j].D_psi_v(tip(j + 1).data());
    const Eigen::MatrixXd& D = sd->D;
    sd->sigma = D(1, 1);
    sd->alpha = D(0, 0);
    if (!(std::abs(sd->sigma) > 1e-14) || !(std::abs(sd->alpha) > 1e-300)) {
        std::ostringstream os;
        os << "scope derivative (" << n << ", " << k << ") is singular: sigma = " << sd->sigma
           << ", alpha = " << sd->alpha;
        throw Error(ErrorKind::SingularDerivative, os.str());
    }
    const double s = sd->sigma;
    sd->t = D(0, 1) / s;
    sd->u.resize(m);
    sd->d.resize(m);
    double sr = std::abs(D(1, 0));
    for (int i = 0; i < m; ++i) {
        sd->u[i] = D(0, 2 + i) / s;
        sd->d[i] = D(2 + i, 1) / s;
        sr = std::max({sr, std::abs(D(1, 2 + i)), std::abs(D(2 + i, 0))});
        for (int l = 0; l < m; ++l) sr = std::max(sr, std::abs(D(2 + i, 2 + l) - (i == l ? s : 0.0)));
    }
    sd->structure_residual = sr / std::abs(s);

    // R(y) = Psi_z(0, y, 0) / sigma - d y; the z row of Psi depends on y and z only
    Box Iy = Box::interval(Fn.B.lower[1] - tip(n)[1], Fn.B.upper[1] - tip(n)[1]);
    if (m > 0) {
        std::vector<Point> nodes = Function::nodes(Iy, {R_degree_});
        std::vector<std::vector<double>> vals(m, std::vector<double>(nodes.size()));
        std::vector<double> w(d, 0.0), out(d);
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            w[1] = nodes[a][0];
            centered(n, k, w.data(), out.data());
            for (int j = 0; j < m; ++j) vals[j][a] = out[2 + j] / s - sd->d[j] * w[1];
        }
        for (int j = 0; j < m; ++j) {
            sd->R.push_back(Function::project_nodes(Iy, {R_degree_}, vals[j]));
            sd->R_norm = std::max(sd->R_norm, sd->R.back().grid_sup(257));
            sd->R_prime_norm = std::max(sd->R_prime_norm, sd->R.back().partial(0).grid_sup(257));
        }
    }

    Box centered_box = Fn.B;
    for (int i = 0; i < d; ++i) {
        centered_box.lower[i] -= tip(n)[i];
        centered_box.upper[i] -= tip(n)[i];
    }
    std::vector<double> out(d);
    for (const Point& w : uniform_grid(centered_box, 5)) {
        centered(n, k, w.data(), out.data());
        double r = std::abs(out[1] - s * w[1]);
        for (int j = 0; j < m; ++j) {
            double rec = s * (sd->d[j] * w[1] + w[2 + j] + sd->R[j].eval_clamped(&w[1]));
            r = std::max(r, std::abs(out[2 + j] - rec));
        }
        sd->reconstruction_residual = std::max(sd->reconstruction_residual, r);
    }
    slot = std::move(sd);
    return *slot;
}

DutRecursionReport verify_dut_recursions(const ScopeAnalysis& sa, int N) {
    if (N > sa.depth()) throw Error(ErrorKind::DepthExceeded, "dut recursion depth exceeds the tower");
    DutRecursionReport r;
    for (int n = 1; n <= N; ++n) {
        for (int k = 0; k < n; ++k) {
            const ScopeDecomposition& nk = sa.at(n, k);
            const int m = static_cast<int>(nk.d.size());
            r.structure = std::max(r.structure, nk.structure_residual);
            Eigen::VectorXd dsum = Eigen::VectorXd::Zero(m), usum = Eigen::VectorXd::Zero(m);
            double tsum = 0.0, tudsum = 0.0, W = 1.0;
            for (int i = k; i < n; ++i) {
                const ScopeDecomposition& step = sa.at(i + 1, i);
                Eigen::VectorXd d_n = i + 1 < n ? sa.at(n, i + 1).d : Eigen::VectorXd::Zero(m);
                const Eigen::VectorXd& d_ik = sa.at(i + 1, k).d;
                dsum += step.d;
                usum += W * step.u;
                tsum += W * (step.t + (m ? step.u.dot(d_n) : 0.0));
                tudsum += W * (step.t - (m ? step.u.dot(d_ik) : 0.0));
                W *= step.alpha / step.sigma;
            }
            if (m) {
                r.d_additivity = std::max(r.d_additivity, (nk.d - dsum).cwiseAbs().maxCoeff());
                r.u_recursion = std::max(r.u_recursion, (nk.u - usum).cwiseAbs().maxCoeff());
            }
            r.t_recursion = std::max(r.t_recursion, std::abs(nk.t - tsum));
            r.t_minus_ud = std::max(r.t_minus_ud, std::abs(nk.t - (m ? nk.u.dot(nk.d) : 0.0) - tudsum));
            if (n - 1 > k) {
                Eigen::MatrixXd prod = sa.at(n - 1, k).D * sa.at(n, n - 1).D;
                r.product_rule = std::max(r.product_rule, (nk.D - prod).cwiseAbs().maxCoeff() /
                                                              nk.D.cwiseAbs().maxCoeff());
            }
        }
    }
    return r;
}

RRecursionReport verify_R_recursion(const ScopeAnalysis& sa, int k, int N, int per_axis) {
    if (N > sa.depth() || k < 0 || k >= N) throw Error(ErrorKind::DepthExceeded, "R recursion levels out of range");
    RRecursionReport r;
    for (int n = k + 1; n <= N; ++n) {
        const ScopeDecomposition& nk = sa.at(n, k);
        r.norms.push_back(nk.R_norm);
        r.prime_norms.push_back(nk.R_prime_norm);
        if (n < k + 2) continue;
        const ScopeDecomposition& top = sa.at(n, n - 1);
        const ScopeDecomposition& rest = sa.at(n - 1, k);
        const double s = top.sigma;
        for (std::size_t j = 0; j < nk.R.size(); ++j) {
            const Box& Iy = nk.R[j].domain();
            for (const Point& y : uniform_grid(Iy, per_axis)) {
                double sy = s * y[0];
                double v = nk.R[j](y) - top.R[j].eval_clamped(y.data()) - rest.R[j].eval_clamped(&sy) / s;
                r.recursion = std::max(r.recursion, std::abs(v));
            }
        }
    }
    bool positive = std::all_of(r.norms.begin(), r.norms.end(), [](double v) { return v > 0.0; });
    if (r.norms.size() >= 2 && positive) r.fitted_rate = fit_rate(r.norms);
    return r;
}

double verify_q_sum_identity(const ScopeAnalysis& sa, int n, int k, int per_axis) {
    const ScopeDecomposition& nk = sa.at(n, k);
    const RenormalizationSequence& seq = sa.sequence();
    const int m = static_cast<int>(nk.d.size());
    if (m == 0) return 0.0;
    const int d = m + 2;
    VectorFunction Rp;
    for (const Function& R : nk.R) Rp.push_back(R.partial(0));
    double worst = 0.0;
    std::vector<double> cur(d), next(d);
    for (const Point& y : uniform_grid(nk.R[0].domain(), per_axis)) {
        cur = sa.tip(n);
        cur[1] += y[0];
        std::vector<double> sum(m, 0.0);
        for (int i = n - 1; i >= k; --i) {
            const RenormStep& st = seq.steps[i];
            st.psi_v(cur.data(), next.data());
            cur.swap(next);
            for (int j = 0; j < m; ++j) sum[j] += st.q_functions()[j].eval_clamped(&cur[1]);
        }
        for (int j = 0; j < m; ++j)
            worst = std::max(worst, std::abs(sum[j] - nk.d[j] - Rp[j].eval_clamped(y.data())));
    }
    return worst;
}

ScalingReport scaling_rates(const ScopeAnalysis& sa, int k, int N) {
    if (N > sa.depth() || k < 0 || k >= N) throw Error(ErrorKind::DepthExceeded, "scaling levels out of range");
    ScalingReport r;
    for (int n = k + 1; n <= N; ++n) {
        const ScopeDecomposition& nk = sa.at(n, k);
        r.sigma_nk.push_back(nk.sigma);
        r.alpha_nk.push_back(nk.alpha);
        r.R_norm.push_back(nk.R_norm);
    }
    auto rate = [](const std::vector<double>& v) {
        std::vector<double> a;
        for (double x : v) a.push_back(std::abs(x));
        if (a.size() < 2 || std::any_of(a.begin(), a.end(), [](double x) { return !(x > 0.0); })) return 0.0;
        return fit_rate(a);
    };
    r.sigma_rate = rate(r.sigma_nk);
    r.alpha_rate = rate(r.alpha_nk);
    r.R_rate = rate(r.R_norm);
    return r;
}

}  // namespace renorm
