#include "renorm/geometry.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "renorm/classn.h"
#include "renorm/error.h"

namespace renorm {

namespace {

double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// d_y eps - E Z^-1 Y at w
double schur_y(const HenonMap& F, const double* w) {
    const int m = F.m;
    double ey = F.eps.derivative(w, 1);
    if (m == 0) return ey;
    Eigen::RowVectorXd E(m);
    Eigen::VectorXd Y(m);
    Eigen::MatrixXd Z(m, m);
    for (int i = 0; i < m; ++i) E[i] = F.eps.derivative(w, 2 + i);
    for (int j = 0; j < m; ++j) {
        Y[j] = F.delta[j].derivative(w, 1);
        for (int i = 0; i < m; ++i) Z(j, i) = F.delta[j].derivative(w, 2 + i);
    }
    return ey - E * Z.fullPivLu().solve(Y);
}

double mean_log_jacobian(const HenonMap& F0, const std::vector<Point>& pts, bool& degenerate) {
    double s = 0.0;
    for (const Point& p : pts) {
        double j = std::abs(jacobian(F0, p.data()).det);
        if (!(j >= 1e-300)) {
            degenerate = true;
            return 0.0;
        }
        s += std::log(j);
    }
    return s / static_cast<double>(pts.size());
}

}  // namespace

PieceSample piece(const RenormalizationSequence& seq, const Word& word, int k, int per_axis) {
    const int n = k + word.size();
    ScopeMap sm(seq, k, n, word);  // throws DepthExceeded
    PieceSample p;
    p.word = word;
    p.k = k;
    p.n = n;
    for (const Point& s : boundary_samples(seq.maps[n].B, per_axis)) p.hull.push_back(sm(s));
    const std::size_t d = p.hull.front().size();
    std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
    for (const Point& h : p.hull)
        for (std::size_t i = 0; i < d; ++i) {
            lo[i] = std::min(lo[i], h[i]);
            hi[i] = std::max(hi[i], h[i]);
        }
    // the z-extent of a degenerate piece is a single value
    for (std::size_t i = 0; i < d; ++i)
        if (!(hi[i] > lo[i])) hi[i] = std::nextafter(lo[i], INFINITY);
    p.bbox = Box(lo, hi);
    return p;
}

double diam(const PieceSample& p) {
    double best = 0.0;
    for (std::size_t i = 0; i < p.hull.size(); ++i)
        for (std::size_t j = i + 1; j < p.hull.size(); ++j) best = std::max(best, dist2(p.hull[i], p.hull[j]));
    return std::sqrt(best);
}

double dist_min(const PieceSample& p, const PieceSample& q) {
    double best = INFINITY;
    for (const Point& a : p.hull)
        for (const Point& b : q.hull) best = std::min(best, dist2(a, b));
    return std::sqrt(best);
}

std::vector<Point> orbit_points(const RenormalizationSequence& seq, int n, const Point& x) {
    if (n > seq.depth()) throw Error(ErrorKind::DepthExceeded, "orbit needs a deeper tower");
    std::vector<Point> out;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(ScopeMap(seq, 0, n, Word::from_index(i, n))(x));
    return out;
}

AverageEstimate average_jacobian(const ScopeAnalysis& sa, int N) {
    if (N < 1 || N > sa.depth()) throw Error(ErrorKind::DepthExceeded, "average Jacobian depth out of range");
    const RenormalizationSequence& seq = sa.sequence();
    AverageEstimate r;
    double cur = mean_log_jacobian(seq.maps[0], orbit_points(seq, N, sa.tip(N)), r.degenerate);
    if (r.degenerate) return r;
    double prev = mean_log_jacobian(seq.maps[0], orbit_points(seq, N - 1, sa.tip(N - 1)), r.degenerate);
    if (r.degenerate) return r;
    r.value = std::exp(cur);
    r.error = std::abs(r.value - std::exp(prev));
    return r;
}

BzEstimate b_z(const ScopeAnalysis& sa, int N) {
    if (N < 1 || N > sa.depth()) throw Error(ErrorKind::DepthExceeded, "b_z depth out of range");
    const RenormalizationSequence& seq = sa.sequence();
    BzEstimate r;
    if (seq.maps[0].m == 0) {
        r.orbit = r.product = 1.0;
        return r;
    }
    auto log_det = [](const DerivativeBlocks& b, const Point& w, const char* where) {
        Eigen::VectorXd x, y;
        Eigen::MatrixXd z;
        b.eval(w.data(), x, y, z);
        double d = std::abs(z.determinant());
        if (!(d >= 1e-300)) throw Error(ErrorKind::SingularZ, std::string("det Z vanishes at ") + where);
        return std::log(d);
    };
    DerivativeBlocks b0 = blocks(seq.maps[0]);
    double s = 0.0;
    std::vector<Point> pts = orbit_points(seq, N, sa.tip(N));
    for (const Point& p : pts) s += log_det(b0, p, "an orbit point");
    r.orbit = std::exp(s / static_cast<double>(pts.size()));
    r.product = std::exp(std::ldexp(log_det(blocks(seq.maps[N]), sa.tip(N), "the deepest tip"), -N));
    r.gap = std::abs(r.orbit - r.product) / r.orbit;
    return r;
}

UniversalNumbers universal_numbers(const ScopeAnalysis& sa, int N, int x_points) {
    const RenormalizationSequence& seq = sa.sequence();
    UniversalNumbers u;
    for (int d = 1; d <= N; ++d) {
        UniversalRow row;
        row.depth = d;
        AverageEstimate bf = average_jacobian(sa, d);
        if (bf.degenerate) {
            u.degenerate = true;
            u.table.clear();
            return u;
        }
        BzEstimate bz = b_z(sa, d);
        row.b_F = bf.value;
        row.b_z_orbit = bz.orbit;
        row.b_z_product = bz.product;
        row.b1 = bf.value / bz.orbit;
        row.gap = bz.gap;
        u.table.push_back(row);
        if (d == N) {
            u.b_F = bf.value;
            u.b_F_error = bf.error;
            u.b_z = bz.orbit;
            u.b_z_gap = bz.gap;
            u.b1 = row.b1;
        }
    }
    const int dim = seq.maps[0].dim();
    std::vector<Point> xs;
    for (int i = 0; i < x_points; ++i) {
        Point w(dim, 0.0);
        w[0] = x_points > 1 ? -1.0 + 2.0 * i / (x_points - 1) : 0.0;
        xs.push_back(w);
        u.a_hat_x.push_back(w[0]);
    }
    const double lbF = std::log(u.b_F), lb1 = std::log(u.b1);
    std::vector<double> log_a1;
    for (const Point& w : xs) {
        u.log_a_hat.push_back(std::log(std::abs(jacobian(seq.maps[N], w.data()).det)) - std::ldexp(lbF, N));
        log_a1.push_back(std::log(std::abs(schur_y(seq.maps[N], w.data()))) - std::ldexp(lb1, N));
    }
    for (int n = 1; n < N; ++n) {
        double dj = 0.0, db = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double lj = std::log(std::abs(jacobian(seq.maps[n], xs[i].data()).det)) - std::ldexp(lbF, n);
            double lb = std::log(std::abs(schur_y(seq.maps[n], xs[i].data()))) - std::ldexp(lb1, n);
            dj = std::max(dj, std::abs(std::expm1(lj - u.log_a_hat[i])));
            db = std::max(db, std::abs(std::expm1(lb - log_a1[i])));
        }
        u.jacobian_universality.push_back(dj);
        u.b1_universality.push_back(db);
    }
    return u;
}

double block_determinant_residual(const HenonMap& F, int per_axis) {
    double r = 0.0;
    for (const Point& w : uniform_grid(F.B, per_axis)) {
        JacobianValue j = jacobian(F, w.data());
        if (j.has_block) r = std::max(r, std::abs(j.det - j.block));
    }
    return r;
}

OverlapReport overlap_scan(const ScopeAnalysis& sa, int k, int n, double b1, int per_axis) {
    if (k < 0 || n <= k || n + 1 > sa.depth()) {
        std::ostringstream os;
        os << "overlap at (" << k << ", " << n << ") needs 0 <= k < n and depth >= n + 1";
        throw Error(ErrorKind::DepthExceeded, os.str());
    }
    const RenormalizationSequence& seq = sa.sequence();
    PieceSample pv = piece(seq, Word::all_v(n - k) + Word::parse("v"), k, per_axis);
    PieceSample pc = piece(seq, Word::all_v(n - k) + Word::parse("c"), k, per_axis);
    OverlapReport r;
    r.k = k;
    r.n = n;
    r.overlap_length = std::min(pv.bbox.upper[0], pc.bbox.upper[0]) - std::max(pv.bbox.lower[0], pc.bbox.lower[0]);
    r.overlap = r.overlap_length > 0.0;
    r.resonance_ratio = std::abs(sa.at(n, k).sigma) / std::pow(b1, std::ldexp(1.0, k));
    return r;
}

GeometryRatio geometry_ratio_scan(const RenormalizationSequence& seq, int k, int n, int per_axis) {
    if (k < 0 || n <= k) throw Error(ErrorKind::DomainError, "geometry ratio needs 0 <= k < n");
    GeometryRatio g;
    g.k = k;
    g.n = n;
    g.word = Word::all_v(k) + Word::parse("c") + Word::all_v(n - k - 1);
    PieceSample pv = piece(seq, g.word + Word::parse("v"), 0, per_axis);
    PieceSample pc = piece(seq, g.word + Word::parse("c"), 0, per_axis);
    g.dist_min = dist_min(pv, pc);
    g.diam = diam(pv);
    g.ratio = g.dist_min / g.diam;
    g.sigma_k = std::pow(std::abs(reference_fixed_point().sigma), k);
    return g;
}

std::vector<GeometryRow> geometry_table(const ScopeAnalysis& sa, int kmax, double b1, int per_axis) {
    std::vector<GeometryRow> rows;
    for (int k = 0; k <= kmax; ++k) {
        for (int n = k + 1; n + 1 <= sa.depth(); ++n) {
            GeometryRatio g = geometry_ratio_scan(sa.sequence(), k, n, per_axis);
            OverlapReport o = overlap_scan(sa, k, n, b1, std::max(per_axis, 9));
            GeometryRow row;
            row.k = k;
            row.n = n;
            row.word = g.word.str();
            row.diam = g.diam;
            row.dist_min = g.dist_min;
            row.ratio = g.ratio;
            row.overlap = o.overlap;
            row.resonance_ratio = o.resonance_ratio;
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepRow> sweep_b1(const SeedSpec& spec, const std::vector<double>& parameters, int depth, int kmax,
                               const RenormOptions& opt) {
    std::vector<SweepRow> out;
    for (double s : parameters) {
        SweepRow row;
        row.parameter = s;
        SeedSpec scaled = spec;
        for (PolyTerm& t : scaled.eps) t.coef *= s;
        try {
            RenormalizationSequence seq = build_tower(scaled, depth, opt);
            ScopeAnalysis sa(seq);
            UniversalNumbers u = universal_numbers(sa, depth);
            row.b1 = u.b1;
            row.b_F = u.b_F;
            row.b_z = u.b_z;
            if (u.degenerate) throw Error(ErrorKind::DegenerateJacobian, "b_F vanishes");
            row.rows = geometry_table(sa, kmax, u.b1);
        } catch (const Error& e) {
            row.error = e.what();
        }
        out.push_back(std::move(row));
    }
    return out;
}

double holder_bound(double b1, double b1_tilde) {
    if (!(b1 > 0.0 && b1 < 1.0) || !(b1_tilde > 0.0 && b1_tilde < 1.0)) {
        std::ostringstream os;
        os << "holder bound needs b1, b1_tilde in (0, 1), got " << b1 << ", " << b1_tilde;
        throw Error(ErrorKind::DomainError, os.str());
    }
    return 0.5 * (1.0 + std::log(b1) / std::log(b1_tilde));
}

}  // namespace renorm
