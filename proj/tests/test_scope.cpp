#include <cmath>

#include "doctest.h"
#include "renorm/error.h"
#include "renorm/scope.h"
#include "renorm/seeds.h"

using namespace renorm;

namespace {

const RenormalizationSequence& tower() {
    static const RenormalizationSequence seq = build_tower(generic_seed(1), 5);
    return seq;
}

const ScopeAnalysis& analysis() {
    static const ScopeAnalysis sa(tower());
    return sa;
}

double sigma_star() { return reference_fixed_point().sigma; }

double dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

}  // namespace

TEST_CASE("words: parse, print, index and concatenation") {
    Word w = Word::parse("vcc");
    CHECK(w.size() == 3);
    CHECK(w.str() == "vcc");
    // letters[0] is the least significant bit, c = 1
    CHECK(w.index() == 6);
    CHECK(Word::from_index(6, 3) == w);
    for (std::uint64_t i = 0; i < 16; ++i) CHECK(Word::from_index(i, 4).index() == i);
    CHECK((Word::parse("v") + Word::parse("cc")) == w);
    CHECK(Word::all_v(3).str() == "vvv");
    CHECK(Word::all_c(2).str() == "cc");
    CHECK(Word::parse("").size() == 0);
    CHECK_THROWS_AS(Word::parse("vx"), Error);
}

TEST_CASE("scope maps: composition order and depth check") {
    const RenormalizationSequence& seq = tower();
    Point w = {0.2, -0.3, 0.1}, a(3), b(3);
    // Psi^3_{1, vc} = psi^2_v o psi^3_c
    ScopeMap sm(seq, 1, 3, Word::parse("vc"));
    seq.steps[2].psi_c(w.data(), a.data());
    seq.steps[1].psi_v(a.data(), b.data());
    CHECK(dist(sm(w), b) < 1e-15);
    CHECK_THROWS_AS(ScopeMap(seq, 2, 9, Word::all_v(7)), Error);
    CHECK_THROWS_AS(ScopeMap(seq, 0, 2, Word::all_v(3)), Error);
}

TEST_CASE("scope maps: Jacobian against central differences") {
    const RenormalizationSequence& seq = tower();
    ScopeMap sm(seq, 0, 3, Word::parse("cvc"));
    const double h = 1e-6;
    for (const Point& w : uniform_grid(Box::cube(3, 0.8), 3)) {
        Eigen::MatrixXd J = sm.jacobian(w.data());
        for (int j = 0; j < 3; ++j) {
            Point p = w, q = w;
            p[j] += h;
            q[j] -= h;
            Point fp = sm(p), fq = sm(q);
            for (int i = 0; i < 3; ++i) CHECK(std::abs(J(i, j) - (fp[i] - fq[i]) / (2 * h)) < 1e-7);
        }
    }
}

TEST_CASE("tips and critical points are consistent along the tower") {
    const RenormalizationSequence& seq = tower();
    TipEstimate t = tips(seq);
    REQUIRE(t.tau.size() == 6);
    CHECK(t.fixed_point_residual <= 1e-12);
    for (int k = 0; k < 5; ++k) {
        Point img(3);
        seq.steps[k].psi_v(t.tau[k + 1].data(), img.data());
        CHECK(dist(img, t.tau[k]) < 1e-13);
        CHECK(seq.maps[k].B.contains(t.tau[k]));
    }
    // nested pieces shrink around the tip
    for (int k = 0; k + 1 < 5; ++k) CHECK(t.radius[k] < seq.maps[k].B.width(0));

    std::vector<Point> c = critical_points(seq);
    REQUIRE(c.size() == 6);
    for (int k = 0; k < 5; ++k) {
        Point img(3);
        seq.steps[k].psi_c(c[k + 1].data(), img.data());
        CHECK(dist(img, c[k]) < 1e-13);
    }
}

TEST_CASE("decomposition: structure, reconstruction and bad indices") {
    const ScopeAnalysis& sa = analysis();
    for (int k = 0; k < 5; ++k)
        for (int n = k + 1; n <= 5; ++n) {
            const ScopeDecomposition& d = sa.at(n, k);
            CHECK(d.structure_residual <= 1e-9);
            CHECK(d.reconstruction_residual <= 1e-9);
            CHECK(d.D(1, 1) == doctest::Approx(d.sigma).epsilon(1e-14));
            CHECK(d.D(0, 0) == doctest::Approx(d.alpha).epsilon(1e-14));
            // sigma_{n,k} alternates in sign with n - k
            CHECK((d.sigma < 0) == ((n - k) % 2 == 1));
        }
    CHECK_THROWS_AS(sa.at(2, 2), Error);
    CHECK_THROWS_AS(sa.at(6, 0), Error);
    CHECK_THROWS_AS(sa.at(1, -1), Error);
}

TEST_CASE("x + S at the tip is zero and the reconstruction of the x-row") {
    const ScopeAnalysis& sa = analysis();
    Point zero = {0.0, 0.0, 0.0};
    CHECK(std::abs(sa.x_plus_S(3, 0, zero.data())) < 1e-12);
    // on the x-axis through the tip, x + S is the normalized x-row of the map
    const ScopeDecomposition& d = sa.at(3, 0);
    Point w = {0.05, 0.0, 0.0}, out(3);
    sa.centered(3, 0, w.data(), out.data());
    CHECK(std::abs(out[0] - d.alpha * sa.x_plus_S(3, 0, w.data())) < 1e-12);
}

TEST_CASE("recursions of d, u, t, R and the q-sum identity") {
    const ScopeAnalysis& sa = analysis();
    DutRecursionReport r = verify_dut_recursions(sa, 5);
    CHECK(r.d_additivity <= 1e-10);
    CHECK(r.u_recursion <= 1e-10);
    CHECK(r.t_recursion <= 1e-10);
    CHECK(r.t_minus_ud <= 1e-10);
    CHECK(r.product_rule <= 1e-10);
    for (int k = 0; k < 2; ++k) {
        RRecursionReport rr = verify_R_recursion(sa, k, 5);
        CHECK(rr.recursion <= 1e-9);
        CHECK(rr.norms.size() == static_cast<std::size_t>(5 - k));
    }
    for (int k = 0; k < 3; ++k)
        for (int n = k + 1; n <= 5; ++n) CHECK(verify_q_sum_identity(sa, n, k) <= 1e-7);
}

TEST_CASE("scaling rates of sigma, alpha and R") {
    const ScopeAnalysis& sa = analysis();
    ScalingReport s = scaling_rates(sa, 0, 5);
    REQUIRE(s.sigma_nk.size() == 5);
    const double sg = sigma_star();
    CHECK(std::abs(s.sigma_rate - sg) <= 0.2 * sg);
    CHECK(std::abs(s.alpha_rate - sg * sg) <= 0.2 * sg * sg);
    CHECK(std::abs(s.R_rate - sg) <= 0.25 * sg);
    // sigma_{k+1,k} tends to the sign-carrying 1-D value
    CHECK(std::abs(sa.at(5, 4).sigma + sg) < 1e-3);
}

TEST_CASE("degenerate tower: no u, d or R") {
    const Function& fs = extended_fixed_point(1.2, 32);
    RenormalizationSequence seq = renormalize_tower(degenerate_map(fs, 1, 1.2, 4), 3, {}, &fs);
    ScopeAnalysis sa(seq);
    const ScopeDecomposition& d = sa.at(3, 0);
    CHECK(d.u.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d.d.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d.R_norm < 1e-12);
    CHECK(std::abs(std::abs(d.sigma) - std::pow(sigma_star(), 3)) < 1e-9);
}
