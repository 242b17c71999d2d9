#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "renorm/classn.h"
#include "renorm/error.h"
#include "renorm/seeds.h"

using namespace renorm;

namespace {

// f*_ext with the given delta terms and eps = 0.05 y, not tuned
SeedSpec seed_with_delta(std::vector<PolyTerm> delta, double eps_coef = 0.05) {
    SeedSpec s;
    s.m = 1;
    s.tune = false;
    s.degrees = {12, 12, 12};
    if (eps_coef != 0.0) s.eps = {{eps_coef, {0, 1, 0}}};
    s.delta = {std::move(delta)};
    return s;
}

SeedSpec example_m1(double eta1, double c) {
    SeedSpec s;
    s.m = 1;
    s.tune = false;
    s.degrees = {12, 12, 12};
    s.eps = {{0.05, {0, 1, 0}}};
    s.example = true;
    s.eta = {{0.0, eta1}};
    s.C = {{c, c}};
    return s;
}

}  // namespace

TEST_CASE("region names") {
    CHECK(parse_region("pieces") == DefectRegion::Pieces);
    CHECK(parse_region("full") == DefectRegion::Full);
    CHECK(std::string(region_name(DefectRegion::Full)) == "full");
    CHECK_THROWS_AS(parse_region("everywhere"), Error);
}

TEST_CASE("blocks: zero, constant and finite differences") {
    HenonMap Z0 = build_seed(seed_with_delta({}));
    DerivativeBlocks b0 = blocks(Z0);
    Eigen::VectorXd X, Y;
    Eigen::MatrixXd Z;
    Point w = {0.3, -0.4, 0.2};
    b0.eval(w.data(), X, Y, Z);
    CHECK(X.norm() == 0.0);
    CHECK(Y.norm() == 0.0);
    CHECK(Z.norm() == 0.0);

    HenonMap F = build_seed(seed_with_delta({{0.1, {0, 1, 0}}, {0.2, {0, 0, 1}}}));
    DerivativeBlocks b = blocks(F);
    b.eval(w.data(), X, Y, Z);
    CHECK(std::abs(X[0]) < 1e-12);
    CHECK(Y[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(Z(0, 0) == doctest::Approx(0.2).epsilon(1e-12));

    HenonMap G = build_seed(seed_with_delta({{0.1, {1, 1, 0}}, {0.3, {0, 0, 2}}, {-0.2, {2, 0, 1}}}));
    DerivativeBlocks bg = blocks(G);
    const double h = 1e-6;
    for (const Point& p : uniform_grid(Box::cube(3, 1.0), 4)) {
        bg.eval(p.data(), X, Y, Z);
        double fd[3];
        for (int i = 0; i < 3; ++i) {
            Point a = p, c = p;
            a[i] += h;
            c[i] -= h;
            fd[i] = (G.delta[0](a) - G.delta[0](c)) / (2 * h);
        }
        CHECK(std::abs(X[0] - fd[0]) < 1e-7);
        CHECK(std::abs(Y[0] - fd[1]) < 1e-7);
        CHECK(std::abs(Z(0, 0) - fd[2]) < 1e-7);
    }
}

TEST_CASE("defect: constant delta is 0, delta = 0.1 y gives 0.1") {
    HenonMap C = build_seed(seed_with_delta({{0.03, {0, 0, 0}}}));
    CHECK(n_defect(C, DefectRegion::Full).sup_defect < 1e-12);
    CHECK(n_defect(C, DefectRegion::Pieces).sup_defect < 1e-12);

    HenonMap Y = build_seed(seed_with_delta({{0.1, {0, 1, 0}}}));
    NDefectReport r = n_defect(Y, DefectRegion::Full);
    CHECK(r.sup_defect == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.points > 0);
}

TEST_CASE("example family: delta = x is in N, eta(t) = 0.05 t with equal C is in N") {
    HenonMap X = build_seed(example_m1(0.0, 0.0));
    Point w = {0.4, -0.1, 0.3};
    CHECK(X.delta[0](w) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(n_defect(X, DefectRegion::Pieces).sup_defect <= 1e-12);

    HenonMap E = build_seed(example_m1(0.05, 0.05));
    CHECK(n_defect(E, DefectRegion::Pieces).sup_defect <= 1e-9);
    CHECK(n_defect(E, DefectRegion::Full).sup_defect <= 1e-9);

    // the chain-rule oracle: Y o F + (Z o F) X vanishes because C_10 = C_11 and d_x delta = 1
    DerivativeBlocks b = blocks(E);
    Eigen::VectorXd Xw, Yw, Xf, Yf;
    Eigen::MatrixXd Zw, Zf;
    Point Fw = E(w);
    b.eval(w.data(), Xw, Yw, Zw);
    b.eval(Fw.data(), Xf, Yf, Zf);
    CHECK(std::abs(Yf[0] + Zf(0, 0) * Xw[0]) < 1e-12);
}

TEST_CASE("example family: violated row sum is rejected") {
    std::vector<Function> eta = {Function::coordinate(Box::interval(-3, 3), 0) * 0.05};
    CHECK_THROWS_AS(example_delta(1, 1.2, {8, 8, 8}, eta, {{0.06, 0.05}}), Error);
    try {
        example_delta(1, 1.2, {8, 8, 8}, eta, {{0.06, 0.05}});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConstraintViolated);
    }
}

TEST_CASE("block recursion: zero for delta = 0, small on N, fails off N") {
    RenormStep z = renormalize(build_seed(seed_with_delta({})));
    BlockRecursionReport r0 = verify_block_recursion(z, 7);
    CHECK(r0.x == 0.0);
    CHECK(r0.y == 0.0);
    CHECK(r0.z == 0.0);

    RenormStep e = renormalize(build_seed(example_seed(1)));
    BlockRecursionReport re = verify_block_recursion(e, 9);
    CHECK(re.x <= 1e-7);
    CHECK(re.y <= 1e-7);
    CHECK(re.z <= 1e-7);
    CHECK(re.det_z <= 1e-7);

    RenormStep g = renormalize(build_seed(generic_seed(1)));
    BlockRecursionReport rg = verify_block_recursion(g, 7);
    CHECK(std::max({rg.x, rg.y, rg.z}) > 1e-4);
}

TEST_CASE("general recursion of D delta_1") {
    RenormStep z = renormalize(build_seed(seed_with_delta({})));
    GeneralRecursionReport r0 = verify_general_recursion(z, 7);
    CHECK(r0.x == 0.0);
    CHECK(r0.y == 0.0);
    CHECK(r0.z == 0.0);

    RenormStep g = renormalize(build_seed(generic_seed(1)));
    GeneralRecursionReport rg = verify_general_recursion(g, 9);
    CHECK(rg.x <= 1e-7);
    CHECK(rg.y <= 1e-7);
    CHECK(rg.z <= 1e-7);
    // for m = 1 both index readings coincide
    CHECK(std::abs(rg.y_index_variant - rg.y) <= 1e-12);
    // off N the defect term carries the recursion
    CHECK(rg.defect_term > 1e-3);
}

TEST_CASE("general recursion for m = 2 and the index reading of the y-formula") {
    SeedSpec s = example_seed(2);
    s.tune = false;
    RenormStep g = renormalize(build_seed(s));
    GeneralRecursionReport r = verify_general_recursion(g, 5);
    CHECK(r.x <= 1e-6);
    CHECK(r.y <= 1e-6);
    CHECK(r.z <= 1e-6);
    // using d_y delta^j inside the z-sum is measurably wrong once m > 1
    CHECK(r.y_index_variant > 100.0 * r.y);
}

TEST_CASE("invariance: constant delta stays at 0, the example seed stays in N") {
    SeedSpec c = seed_with_delta({{0.03, {0, 0, 0}}});
    c.tune = true;
    RenormalizationSequence sc = build_tower(c, 2);
    for (const InvarianceRow& row : invariance_experiment(sc, 2, 7)) CHECK(row.defect <= 1e-9);

    RenormalizationSequence se = build_tower(example_seed(1), 3);
    std::vector<InvarianceRow> rows = invariance_experiment(se, 3, 7);
    REQUIRE(rows.size() == 4);
    for (const InvarianceRow& row : rows) CHECK(row.defect <= 100.0 * kDefaultTol);
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].eps_norm < rows[k - 1].eps_norm);
}

TEST_CASE("a generic seed is not in N") {
    HenonMap F = build_seed(generic_seed(1));
    CHECK(n_defect(F, DefectRegion::Pieces).sup_defect >= 1000.0 * kDefaultTol);
}
