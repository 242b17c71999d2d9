#include "renorm/classn.h"

#include <algorithm>
#include <cmath>

#include "renorm/error.h"

namespace renorm {

void DerivativeBlocks::eval(const double* w, Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::MatrixXd& z) const {
    const int n = m();
    x.resize(n);
    y.resize(n);
    z.resize(n, n);
    for (int j = 0; j < n; ++j) {
        x[j] = X[j].eval_clamped(w);
        y[j] = Y[j].eval_clamped(w);
        for (int i = 0; i < n; ++i) z(j, i) = Z[j][i].eval_clamped(w);
    }
}

DerivativeBlocks blocks(const HenonMap& F) {
    DerivativeBlocks b;
    for (int j = 0; j < F.m; ++j) {
        b.X.push_back(F.delta[j].partial(0));
        b.Y.push_back(F.delta[j].partial(1));
        VectorFunction row;
        for (int i = 0; i < F.m; ++i) row.push_back(F.delta[j].partial(2 + i));
        b.Z.push_back(std::move(row));
    }
    return b;
}

double min_abs_det_z(const DerivativeBlocks& b, const Box& B, int per_axis) {
    if (b.m() == 0) return 1.0;
    Eigen::VectorXd x, y;
    Eigen::MatrixXd z;
    double lo = INFINITY;
    for (const Point& w : uniform_grid(B, per_axis)) {
        b.eval(w.data(), x, y, z);
        lo = std::min(lo, std::abs(z.determinant()));
    }
    return lo;
}

const char* region_name(DefectRegion r) { return r == DefectRegion::Pieces ? "pieces" : "full"; }

DefectRegion parse_region(const std::string& s) {
    if (s == "pieces") return DefectRegion::Pieces;
    if (s == "full") return DefectRegion::Full;
    throw Error(ErrorKind::ConfigError, "unknown region '" + s + "' (pieces|full)");
}

namespace {

// max_j |Y_j(F w) + sum_i Z_ji(F w) X_i(w)|; false when F(w) leaves B.
bool defect_at(const HenonMap& F, const DerivativeBlocks& b, const double* w, double& out) {
    const int d = F.dim();
    std::vector<double> Fw(d);
    F.eval(w, Fw.data());
    if (!F.B.contains(Fw.data(), kClampSlack)) return false;
    Eigen::VectorXd x0, y0, x1, y1;
    Eigen::MatrixXd z0, z1;
    b.eval(w, x0, y0, z0);
    b.eval(Fw.data(), x1, y1, z1);
    Eigen::VectorXd k = y1 + z1 * x0;
    out = k.size() ? k.cwiseAbs().maxCoeff() : 0.0;
    return true;
}

}  // namespace

NDefectReport n_defect(const RenormStep& step, DefectRegion region, int per_axis) {
    const HenonMap& F = step.F();
    NDefectReport r;
    r.region = region;
    r.per_axis = per_axis;
    if (F.m == 0) return r;
    DerivativeBlocks b = blocks(F);
    const int d = F.dim();
    std::vector<double> img(d);
    auto visit = [&](const double* w) {
        double v = 0.0;
        if (!defect_at(F, b, w, v)) {
            ++r.skipped;
            return;
        }
        ++r.points;
        r.sup_defect = std::max(r.sup_defect, v);
    };
    for (const Point& g : uniform_grid(F.B, per_axis)) {
        if (region == DefectRegion::Full) {
            visit(g.data());
            continue;
        }
        step.psi_v(g.data(), img.data());
        visit(img.data());
        step.psi_c(g.data(), img.data());
        visit(img.data());
    }
    return r;
}

NDefectReport n_defect(const HenonMap& F, DefectRegion region, int per_axis) {
    if (region == DefectRegion::Pieces) return n_defect(renormalize(F), region, per_axis);
    // psi maps are not needed for the full box
    NDefectReport r;
    r.region = region;
    r.per_axis = per_axis;
    if (F.m == 0) return r;
    DerivativeBlocks b = blocks(F);
    for (const Point& g : uniform_grid(F.B, per_axis)) {
        double v = 0.0;
        if (!defect_at(F, b, g.data(), v)) {
            ++r.skipped;
            continue;
        }
        ++r.points;
        r.sup_defect = std::max(r.sup_defect, v);
    }
    return r;
}

namespace {

struct RecursionTerms {
    Eigen::VectorXd xc, yc, xv, yv, qX, qY, x1, y1, grad;
    Eigen::MatrixXd zc, zv, z1;
};

void recursion_terms(const RenormStep& step, const DerivativeBlocks& b0, const DerivativeBlocks& b1,
                     const double* w, RecursionTerms& t) {
    const int m = step.F().m;
    const int d = m + 2;
    std::vector<double> pv(d), pc(d), W(d);
    step.psi_v(w, pv.data());
    step.psi_c(w, pc.data());
    step.unscale(w, W.data());
    b0.eval(pv.data(), t.xv, t.yv, t.zv);
    b0.eval(pc.data(), t.xc, t.yc, t.zc);
    b1.eval(w, t.x1, t.y1, t.z1);
    t.qX.resize(m);
    t.qY.resize(m);
    step.q(W[0], t.qX.data());
    step.q(W[1], t.qY.data());
    t.grad.resize(d);
    step.phi_inv_gradient(W.data(), t.grad.data());
}

double max_abs(const Eigen::MatrixXd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

BlockRecursionReport verify_block_recursion(const RenormStep& step, int per_axis) {
    BlockRecursionReport r;
    if (step.F().m == 0) return r;
    DerivativeBlocks b0 = blocks(step.F());
    DerivativeBlocks b1 = blocks(step.F_next());
    RecursionTerms t;
    for (const Point& w : uniform_grid(step.F_next().B, per_axis)) {
        recursion_terms(step, b0, b1, w.data(), t);
        r.x = std::max(r.x, max_abs(t.x1 - (t.xc - t.qX)));
        r.y = std::max(r.y, max_abs(t.y1 - t.zc * (t.yv + t.zv * t.qY)));
        r.z = std::max(r.z, max_abs(t.z1 - t.zc * t.zv));
        r.det_z = std::max(r.det_z, std::abs(t.z1.determinant() - t.zc.determinant() * t.zv.determinant()));
    }
    return r;
}

GeneralRecursionReport verify_general_recursion(const RenormStep& step, int per_axis) {
    GeneralRecursionReport r;
    const int m = step.F().m;
    if (m == 0) return r;
    DerivativeBlocks b0 = blocks(step.F());
    DerivativeBlocks b1 = blocks(step.F_next());
    RecursionTerms t;
    for (const Point& w : uniform_grid(step.F_next().B, per_axis)) {
        recursion_terms(step, b0, b1, w.data(), t);
        Eigen::VectorXd K = t.yc + t.zc * t.xv;
        r.defect_term = std::max(r.defect_term, max_abs(K));
        r.x = std::max(r.x, max_abs(t.x1 - (K * t.grad[0] + t.xc - t.qX)));
        r.y = std::max(r.y, max_abs(t.y1 - (K * t.grad[1] + t.zc * (t.yv + t.zv * t.qY))));
        Eigen::MatrixXd zr = t.zc * t.zv;
        for (int i = 0; i < m; ++i) zr.col(i) += K * t.grad[2 + i];
        r.z = std::max(r.z, max_abs(t.z1 - zr));

        // sum_l Z_c[j][l] (Y_v[j] + sum_i Z_v[l][i] q_i)
        Eigen::VectorXd zq = t.zv * t.qY;
        Eigen::VectorXd yv(m);
        for (int j = 0; j < m; ++j) {
            double s = K[j] * t.grad[1];
            for (int l = 0; l < m; ++l) s += t.zc(j, l) * (t.yv[j] + zq[l]);
            yv[j] = s;
        }
        r.y_index_variant = std::max(r.y_index_variant, max_abs(t.y1 - yv));
    }
    return r;
}

std::vector<InvarianceRow> invariance_experiment(const RenormalizationSequence& seq, int depth, int per_axis) {
    if (seq.maps.empty()) throw Error(ErrorKind::DomainError, "invariance experiment needs a tower");
    std::vector<InvarianceRow> rows;
    RenormStep extra;
    HenonMap current = seq.maps.back();
    for (int k = 0; k <= depth; ++k) {
        const RenormStep* step = nullptr;
        if (k < seq.depth()) {
            step = &seq.steps[k];
        } else {
            if (k > seq.depth()) current = extra.F_next();
            try {
                extra = renormalize(current);
            } catch (const Error& e) {
                throw Error(e.kind(), "level " + std::to_string(k) + ": " + e.what());
            }
            step = &extra;
        }
        InvarianceRow row;
        row.level = k;
        row.defect = n_defect(*step, DefectRegion::Pieces, per_axis).sup_defect;
        row.eps_norm = step->F().eps_norm();
        row.delta_norm = step->F().delta_norm();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace renorm
