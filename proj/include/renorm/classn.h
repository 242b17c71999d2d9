#pragma once

/**
 * @file classn.h
 * @brief The class N of maps with Y o F + (Z o F) X = 0, derivative blocks of delta and
 *        the recursions they satisfy under renormalization.
 */

#include <string>
#include <vector>

#include "renorm/henon.h"

namespace renorm {

/// D delta = (X Y Z): X_j = d_x delta^j, Y_j = d_y delta^j, Z[j][i] = d_{z_i} delta^j.
struct DerivativeBlocks {
    VectorFunction X;
    VectorFunction Y;
    std::vector<VectorFunction> Z;

    int m() const { return static_cast<int>(X.size()); }
    /// Values at w: X, Y as m-vectors, Z as an m x m matrix.
    void eval(const double* w, Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::MatrixXd& z) const;
};

DerivativeBlocks blocks(const HenonMap& F);

/// min |det Z| over a uniform grid (1 for m = 0).
double min_abs_det_z(const DerivativeBlocks& b, const Box& B, int per_axis = 9);

enum class DefectRegion { Pieces, Full };

const char* region_name(DefectRegion r);
DefectRegion parse_region(const std::string& s);

struct NDefectReport {
    double sup_defect = 0.0;
    int per_axis = 0;
    std::size_t points = 0;   // points evaluated
    std::size_t skipped = 0;  // full region: points whose image leaves B
    DefectRegion region = DefectRegion::Pieces;
};

/// sup |Y(F(w)) + Z(F(w)) X(w)| over a grid; Pieces uses psi_v(grid) and psi_c(grid) of `step`.
NDefectReport n_defect(const RenormStep& step, DefectRegion region, int per_axis = 9);
/// Full region only needs F; Pieces renormalizes F first.
NDefectReport n_defect(const HenonMap& F, DefectRegion region, int per_axis = 9);

struct BlockRecursionReport {
    double x = 0.0, y = 0.0, z = 0.0;
    double det_z = 0.0;  // |det Z_1 - det Z(psi_c) det Z(psi_v)|
};

/**
 * Grid residuals of the block recursions valid on N:
 *   X_1 = X o psi_c - q(Y_c),  Y_1 = Z o psi_c [Y o psi_v + Z o psi_v q(Y_v)],  Z_1 = Z o psi_c Z o psi_v,
 * where Y_v = pi_y psi_v(w) and Y_c = pi_x psi_c(w) = pi_y psi_v(F_1 w).
 */
BlockRecursionReport verify_block_recursion(const RenormStep& step, int per_axis = 9);

struct GeneralRecursionReport {
    double x = 0.0, y = 0.0, z = 0.0;
    /// y-formula with d_y delta^j (not delta^l) inside the z-sum; equals y for m = 1.
    double y_index_variant = 0.0;
    /// max |K| where K = Y o psi_c + Z o psi_c X o psi_v, the N-defect along psi_v.
    double defect_term = 0.0;
};

/// Grid residuals of the general recursion of D delta_1 (any renormalizable F).
GeneralRecursionReport verify_general_recursion(const RenormStep& step, int per_axis = 9);

struct InvarianceRow {
    int level = 0;
    double defect = 0.0;
    double eps_norm = 0.0;
    double delta_norm = 0.0;
};

/// n_defect(F_k, pieces) for k = 0..depth; renormalizes past the tower when it is too short.
std::vector<InvarianceRow> invariance_experiment(const RenormalizationSequence& seq, int depth, int per_axis = 9);

}  // namespace renorm
