#pragma once

/**
 * @file scope.h
 * @brief Compositions of scope maps along a renormalization tower, tips, critical points and
 *        the tip-centered decomposition of Psi^n_k into affine part and nonlinear S, R.
 */

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "renorm/henon.h"

namespace renorm {

/**
 * Word in {v, c}. letters[0] is the outermost letter (the psi of level k + 1 in Psi^n_k);
 * as a binary number it is the least significant bit, with v = 0 and c = 1.
 */
struct Word {
    std::vector<int> letters;

    static Word parse(const std::string& s);
    static Word all_v(int n) { return Word{std::vector<int>(n, 0)}; }
    static Word all_c(int n) { return Word{std::vector<int>(n, 1)}; }
    static Word from_index(std::uint64_t index, int length);

    int size() const { return static_cast<int>(letters.size()); }
    std::string str() const;
    std::uint64_t index() const;
    Word operator+(const Word& tail) const;
    bool operator==(const Word& o) const = default;
};

/// Psi^n_{k,w} = psi^{k+1}_{w_1} o ... o psi^n_{w_{n-k}}, from B(F_n) into B(F_k). Keeps a reference to seq.
class ScopeMap {
public:
    ScopeMap(const RenormalizationSequence& seq, int k, int n, Word w);

    int k() const { return k_; }
    int n() const { return n_; }
    const Word& word() const { return word_; }
    const Box& domain() const { return seq_->maps[n_].B; }

    void eval(const double* w, double* out) const;
    Point operator()(const Point& w) const;
    Eigen::MatrixXd jacobian(const double* w) const;

private:
    const RenormalizationSequence* seq_;
    int k_, n_;
    Word word_;
};

struct TipEstimate {
    std::vector<Point> tau;       // tau_0..tau_N
    std::vector<double> radius;   // diameter of the sampled Psi^N_{k,v}(B) around tau_k
    double fixed_point_residual;  // |psi_v(tau_N) - tau_N| for the last step
};

/// tau_N is the fixed point of the deepest psi_v; tau_k = Psi^N_{k,v}(tau_N).
TipEstimate tips(const RenormalizationSequence& seq, int per_axis = 5);

/// c_N is the fixed point of the deepest psi_c; c_k = Psi^N_{k,c}(c_N).
std::vector<Point> critical_points(const RenormalizationSequence& seq);

/**
 * D^n_k = D Psi^n_{k,v}(tau_n) = [[alpha, sigma t, sigma u], [0, sigma, 0], [0, sigma d, sigma I]],
 * and, in tip-centered coordinates, Psi = T diag(alpha, sigma, sigma I) (x + S(w), y, z + R(y)).
 */
struct ScopeDecomposition {
    int n = 0, k = 0;
    Eigen::MatrixXd D;
    double alpha = 0.0, sigma = 0.0, t = 0.0;
    Eigen::VectorXd u, d;
    /// max of |D_yx|, |D_yz|, |D_zx|, |D_yy - sigma|, |D_zz - sigma I| relative to |sigma|
    double structure_residual = 0.0;
    VectorFunction R;  // m components of y on pi_y(B) - tau_n^y
    double R_norm = 0.0;
    double R_prime_norm = 0.0;
    /// sup over a grid of the y and z rows of Psi minus their reconstruction from sigma, d and R
    double reconstruction_residual = 0.0;
};

/// Tip-centered analysis of one tower; decompositions are computed on demand and cached.
class ScopeAnalysis {
public:
    explicit ScopeAnalysis(const RenormalizationSequence& seq, int R_degree = 32);
    // keeps a reference to seq
    ScopeAnalysis(RenormalizationSequence&&, int = 32) = delete;

    const RenormalizationSequence& sequence() const { return *seq_; }
    int depth() const { return seq_->depth(); }
    const TipEstimate& tip_estimate() const { return tips_; }
    const Point& tip(int k) const { return tips_.tau.at(k); }

    /// Throws DepthExceeded unless 0 <= k < n <= depth().
    const ScopeDecomposition& at(int n, int k) const;

    /// Psi^n_{k,v}(tau_n + w) - tau_k.
    void centered(int n, int k, const double* w, double* out) const;
    /// x + S^n_k(w) at a tip-centered point.
    double x_plus_S(int n, int k, const double* w) const;

private:
    const RenormalizationSequence* seq_;
    int R_degree_;
    TipEstimate tips_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<int, int>, std::unique_ptr<ScopeDecomposition>> cache_;
};

struct DutRecursionReport {
    double d_additivity = 0.0;   // d_{n,k} - sum_i d_{i+1,i}
    double u_recursion = 0.0;    // u_{n,k} - sum_i W_i u_{i+1,i}
    double t_recursion = 0.0;    // t_{n,k} - sum_i W_i (t_{i+1,i} + u_{i+1,i} . d_{n,i+1})
    double t_minus_ud = 0.0;     // (t - u.d)_{n,k} - sum_i W_i (t_{i+1,i} - u_{i+1,i} . d_{i+1,k})
    double product_rule = 0.0;   // |D^n_k - D^{n-1}_k D^n_{n-1}| relative
    double structure = 0.0;      // worst structure_residual
};

/// All pairs 0 <= k < n <= N; W_i = prod_{j=k}^{i-1} alpha_{j+1,j} / sigma_{j+1,j}.
DutRecursionReport verify_dut_recursions(const ScopeAnalysis& sa, int N);

struct RRecursionReport {
    double recursion = 0.0;          // sup |R_{n,k}(y) - R_{n,n-1}(y) - R_{n-1,k}(s y)/s|, s = sigma_{n,n-1}
    std::vector<double> norms;       // ||R_{k+j,k}|| for j = 1..N-k
    std::vector<double> prime_norms; // ||R'_{k+j,k}||
    double fitted_rate = 0.0;        // fitted ratio of norms
};

RRecursionReport verify_R_recursion(const ScopeAnalysis& sa, int k, int N, int per_axis = 33);

/// sup over y of |sum_{i=k}^{n-1} q_i(pi_y Psi^n_{i,v}(w)) - d_{n,k} - R'_{n,k}(y)| for w = tau_n + (0, y, 0).
double verify_q_sum_identity(const ScopeAnalysis& sa, int n, int k, int per_axis = 33);

struct ScalingReport {
    std::vector<double> sigma_nk, alpha_nk, R_norm;  // for n - k = 1..N-k
    double sigma_rate = 0.0, alpha_rate = 0.0, R_rate = 0.0;
};

/// Fitted per-level rates of |sigma_{n,k}|, |alpha_{n,k}| and ||R_{n,k}|| for fixed k.
ScalingReport scaling_rates(const ScopeAnalysis& sa, int k, int N);

}  // namespace renorm
