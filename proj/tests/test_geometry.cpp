#include <cmath>

#include "doctest.h"
#include "renorm/error.h"
#include "renorm/geometry.h"
#include "renorm/seeds.h"

using namespace renorm;

namespace {

const RenormalizationSequence& generic_tower() {
    static const RenormalizationSequence seq = build_tower(generic_seed(1), 5);
    return seq;
}

const ScopeAnalysis& generic_analysis() {
    static const ScopeAnalysis sa(generic_tower());
    return sa;
}

const RenormalizationSequence& degenerate_tower() {
    static const RenormalizationSequence seq = [] {
        const Function& fs = extended_fixed_point(1.2, 32);
        return renormalize_tower(degenerate_map(fs, 1, 1.2, 4), 5, {}, &fs);
    }();
    return seq;
}

}  // namespace

TEST_CASE("holder bound: exact value, diagonal, domain") {
    CHECK(holder_bound(0.01, 0.0001) == 0.75);
    for (int i = 1; i < 50; ++i) {
        double x = i / 50.0;
        CHECK(holder_bound(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(holder_bound(0.0, 0.5), Error);
    CHECK_THROWS_AS(holder_bound(0.5, 1.0), Error);
    CHECK_THROWS_AS(holder_bound(-0.1, 0.5), Error);
}

TEST_CASE("holder bound: monotone in each argument on a 20 x 20 grid") {
    // decreasing in b1, increasing in b1_tilde
    for (int i = 1; i <= 20; ++i)
        for (int j = 1; j <= 20; ++j) {
            double a = i / 21.0, b = j / 21.0;
            if (i < 20) CHECK(holder_bound((i + 1) / 21.0, b) < holder_bound(a, b));
            if (j < 20) CHECK(holder_bound(a, (j + 1) / 21.0) > holder_bound(a, b));
        }
}

TEST_CASE("pieces: sampled hull, diameter and distance") {
    const RenormalizationSequence& seq = generic_tower();
    PieceSample p = piece(seq, Word::parse("vc"));
    CHECK(p.n == 2);
    CHECK(p.k == 0);
    CHECK(!p.hull.empty());
    for (const Point& q : p.hull) CHECK(p.bbox.contains(q));
    CHECK(diam(p) >= p.bbox.width(0));
    CHECK(diam(p) >= p.bbox.width(1));
    CHECK(dist_min(p, p) == 0.0);
    PieceSample q = piece(seq, Word::parse("cc"));
    CHECK(dist_min(p, q) > 0.0);
    CHECK(dist_min(p, q) == dist_min(q, p));
    CHECK_THROWS_AS(piece(seq, Word::all_v(6)), Error);
}

TEST_CASE("orbit points follow the adding machine") {
    const RenormalizationSequence& seq = generic_tower();
    const ScopeAnalysis& sa = generic_analysis();
    std::vector<Point> pts = orbit_points(seq, 4, sa.tip(4));
    REQUIRE(pts.size() == 16);
    // F o psi_v = psi_c: the point with leading v maps to the one with leading c
    for (std::size_t i = 0; i < 16; i += 2) {
        Point img = seq.maps[0](pts[i]);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(img[j] - pts[i + 1][j]) < 1e-10);
    }
}

TEST_CASE("block determinant identity") {
    CHECK(block_determinant_residual(generic_tower().maps[0]) <= 1e-9);
    CHECK(block_determinant_residual(build_seed(example_seed(2))) <= 1e-9);
}

TEST_CASE("constant Jacobian seed: b_F = |b c|, b_z = |c|, b1 = |b|") {
    RenormalizationSequence seq = build_tower(constant_jacobian_seed(0.05, 0.3), 4);
    ScopeAnalysis sa(seq);
    UniversalNumbers u = universal_numbers(sa, 4);
    REQUIRE_FALSE(u.degenerate);
    CHECK(std::abs(u.b_F - 0.015) <= 1e-8);
    CHECK(std::abs(u.b_z - 0.3) <= 1e-8);
    CHECK(std::abs(u.b1 - 0.05) <= 1e-8);
}

TEST_CASE("b_z estimators agree on N and t resonates with b1") {
    RenormalizationSequence seq = build_tower(example_seed(1), 5);
    ScopeAnalysis sa(seq);
    BzEstimate bz = b_z(sa, 5);
    CHECK(bz.gap <= 0.05);

    const ScopeAnalysis& g = generic_analysis();
    UniversalNumbers u = universal_numbers(g, 5);
    REQUIRE_FALSE(u.degenerate);
    CHECK(u.b1 > 0.0);
    CHECK(u.b1 < 1.0);
    for (int k = 0; k <= 2; ++k) {
        double r = std::abs(g.at(k + 1, k).t) / std::pow(u.b1, std::ldexp(1.0, k));
        CHECK(r >= 0.1);
        CHECK(r <= 10.0);
    }
}

TEST_CASE("degenerate map: b_F vanishes and the gap ratio does not decay") {
    const RenormalizationSequence& seq = degenerate_tower();
    ScopeAnalysis sa(seq);
    CHECK(average_jacobian(sa, 3).degenerate);
    CHECK(universal_numbers(sa, 3).degenerate);
    double lo = INFINITY, hi = 0.0;
    for (int n = 1; n < 5; ++n) {
        GeometryRatio g = geometry_ratio_scan(seq, 0, n);
        CHECK(g.word.str() == "c" + std::string(n - 1, 'v'));
        lo = std::min(lo, g.ratio);
        hi = std::max(hi, g.ratio);
    }
    CHECK(lo > 0.1);
    CHECK(hi / lo < 1.5);
}

TEST_CASE("overlap scan: resonance ratio and depth check") {
    const ScopeAnalysis& sa = generic_analysis();
    const double b1 = 0.04;
    OverlapReport o = overlap_scan(sa, 0, 2, b1);
    CHECK(o.resonance_ratio == doctest::Approx(std::abs(sa.at(2, 0).sigma) / b1).epsilon(1e-14));
    CHECK(o.overlap == (o.overlap_length > 0.0));
    CHECK_THROWS_AS(overlap_scan(sa, 0, 5, b1), Error);
}

TEST_CASE("geometry table: ordering, words and the gap bound") {
    const ScopeAnalysis& sa = generic_analysis();
    UniversalNumbers u = universal_numbers(sa, 5);
    std::vector<GeometryRow> rows = geometry_table(sa, 2, u.b1);
    REQUIRE(!rows.empty());
    const double sg = reference_fixed_point().sigma;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const GeometryRow& r = rows[i];
        CHECK(r.n > r.k);
        CHECK(r.n + 1 <= 5);
        CHECK(r.word.size() == static_cast<std::size_t>(r.n));
        CHECK(r.word[r.k] == 'c');
        CHECK(r.ratio <= 50.0 * std::pow(sg, r.k));
        if (r.overlap) {
            CHECK(r.resonance_ratio >= 1.0 / 20.0);
            CHECK(r.resonance_ratio <= 20.0);
        }
        if (i > 0) CHECK((rows[i - 1].k < r.k || (rows[i - 1].k == r.k && rows[i - 1].n < r.n)));
    }
}

TEST_CASE("sweep records failures instead of throwing") {
    SeedSpec s = generic_seed(1);
    std::vector<SweepRow> rows = sweep_b1(s, {1.0, 8.0}, 3, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].b1 > 0.0);
    CHECK(!rows[0].rows.empty());
    CHECK(!rows[1].error.empty());
}
