// Acceptance run: one PASS/FAIL line per criterion on stdout, details on stderr.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "config.h"
#include "pipeline.h"
#include "renorm/classn.h"
#include "renorm/error.h"
#include "renorm/geometry.h"
#include "renorm/report.h"
#include "renorm/scope.h"
#include "renorm/seeds.h"

using namespace renorm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects named checks; a criterion passes when all of them hold.
class Checks {
public:
    void add(const std::string& what, bool ok, double value) {
        std::ostringstream os;
        os << what << '=' << format_double(value);
        if (!ok) os << "(!)";
        notes_.push_back(os.str());
        ok_ = ok_ && ok;
    }
    void fail(const std::string& why) {
        notes_.push_back(why);
        ok_ = false;
    }
    bool ok() const { return ok_; }
    std::string str() const {
        std::string s;
        for (const std::string& n : notes_) s += (s.empty() ? "" : " ") + n;
        return s;
    }

private:
    std::vector<std::string> notes_;
    bool ok_ = true;
};

const RenormalizationSequence& generic_tower() {
    static const RenormalizationSequence seq = build_tower(generic_seed(1), 5);
    return seq;
}

const ScopeAnalysis& generic_analysis() {
    static const ScopeAnalysis sa(generic_tower());
    return sa;
}

double sigma_star() { return reference_fixed_point().sigma; }

void c1_fixed_point(Checks& c) {
    auto t0 = Clock::now();
    RenormFixedPoint fp = fixed_point_1d(fixed_point_initial_guess(16));
    const double secs = since(t0);
    c.add("residual", fp.residual <= 1e-9, fp.residual);
    const double pointwise = renormalization_residual_1d(fp.f_star);
    c.add("pointwise", pointwise <= 1e-9, pointwise);
    c.add("seconds", secs < 30.0, secs);
    const double inv = 1.0 / fp.sigma;
    c.add("inv_sigma", inv >= 2.4 && inv <= 2.7, inv);
    RenormFixedPoint again = fixed_point_1d(fp.f_star);
    double drift = std::abs(again.sigma - fp.sigma);
    for (const Point& x : uniform_grid(fp.f_star.interval(), 201))
        drift = std::max(drift, std::abs(again.f_star(x[0]) - fp.f_star(x[0])));
    c.add("resolve_drift", drift <= 1e-8, drift);
}

void c2_conjugacy(Checks& c) {
    // eps = 0.05 y, delta = 0.05 x on the extended fixed point, not tuned
    SeedSpec s;
    s.m = 1;
    s.tune = false;
    s.eps = {{0.05, {0, 1, 0}}};
    s.delta = {{{0.05, {1, 0, 0}}}};
    HenonMap F = build_seed(s);
    auto t0 = Clock::now();
    RenormStep step = renormalize(F);
    const double secs = since(t0);
    ConjugacyResidual r = conjugacy_residual(step, 11);
    c.add("second_iterate", r.second_iterate <= 1e-7, r.second_iterate);
    c.add("via_psi_c", r.via_psi_c <= 1e-7, r.via_psi_c);
    c.add("level_seconds", secs < 120.0, secs);

    // every level of the tuned generic tower
    double worst = 0.0;
    for (const RenormStep& st : generic_tower().steps) {
        ConjugacyResidual g = conjugacy_residual(st, 11);
        worst = std::max({worst, g.second_iterate, g.via_psi_c});
    }
    c.add("generic_tower_worst", worst <= 1e-7, worst);
    t0 = Clock::now();
    renormalize(generic_tower().maps[0]);
    const double gsecs = since(t0);
    c.add("generic_level_seconds", gsecs < 120.0, gsecs);
}

void c3_decay(Checks& c) {
    const RenormalizationSequence& seq = generic_tower();
    bool eps_dec = true, delta_dec = true, superlinear = true;
    for (int k = 0; k < 5; ++k) {
        eps_dec = eps_dec && seq.eps_norms[k + 1] < seq.eps_norms[k];
        delta_dec = delta_dec && seq.delta_norms[k + 1] < seq.delta_norms[k];
    }
    // successive drops of log ||eps_k|| grow
    double min_growth = INFINITY;
    for (int k = 1; k + 1 <= 5; ++k) {
        double prev = std::log(seq.eps_norms[k - 1]) - std::log(seq.eps_norms[k]);
        double next = std::log(seq.eps_norms[k]) - std::log(seq.eps_norms[k + 1]);
        min_growth = std::min(min_growth, next / prev);
        superlinear = superlinear && next > prev;
    }
    c.add("eps_decreasing", eps_dec, seq.eps_norms.back());
    c.add("delta_decreasing", delta_dec, seq.delta_norms.back());
    c.add("min_drop_ratio", superlinear, min_growth);
}

void c4_invariance(Checks& c) {
    const double floor = 100.0 * kDefaultTol;
    const std::vector<std::pair<std::string, SeedSpec>> seeds = {
        {"example_m1", example_seed(1)},
        {"example_m1_b", example_seed(1, 0.1, 0.03)},
        {"example_m2", example_seed(2)},
    };
    for (const auto& [name, spec] : seeds) {
        RenormalizationSequence seq = build_tower(spec, 3);
        double worst = 0.0;
        for (const InvarianceRow& row : invariance_experiment(seq, 3)) worst = std::max(worst, row.defect);
        c.add(name + "_max_defect", worst <= floor, worst);
    }
    double off = n_defect(build_seed(generic_seed(1)), DefectRegion::Pieces).sup_defect;
    c.add("generic_level0_defect", off >= 10.0 * floor, off);
}

void c5_recursions(Checks& c) {
    auto t0 = Clock::now();
    const RenormalizationSequence& seq = generic_tower();
    double app = 0.0;
    for (const RenormStep& st : seq.steps) {
        GeneralRecursionReport r = verify_general_recursion(st);
        app = std::max({app, r.x, r.y, r.z});
    }
    c.add("dDelta_recursion", app <= 1e-7, app);

    // the block recursion holds on N
    RenormalizationSequence ex = build_tower(example_seed(1), 3);
    double blk = 0.0;
    for (const RenormStep& st : ex.steps) {
        BlockRecursionReport r = verify_block_recursion(st);
        blk = std::max({blk, r.x, r.y, r.z});
    }
    c.add("XYZ_recursion", blk <= 1e-7, blk);

    const ScopeAnalysis& sa = generic_analysis();
    DutRecursionReport d = verify_dut_recursions(sa, 5);
    c.add("d_additivity", d.d_additivity <= 1e-10, d.d_additivity);
    double R = 0.0;
    for (int k = 0; k < 4; ++k) R = std::max(R, verify_R_recursion(sa, k, 5).recursion);
    c.add("R_recursion", R <= 1e-9, R);
    double q = 0.0;
    for (int k = 0; k < 5; ++k)
        for (int n = k + 1; n <= 5; ++n) q = std::max(q, verify_q_sum_identity(sa, n, k));
    c.add("q_sum", q <= 1e-7, q);
    const double secs = since(t0);
    c.add("seconds", secs < 900.0, secs);
}

void c6_scaling(Checks& c) {
    ScalingReport s = scaling_rates(generic_analysis(), 0, 5);
    const double sg = sigma_star();
    c.add("sigma_rate", std::abs(s.sigma_rate - sg) <= 0.2 * sg, s.sigma_rate);
    c.add("alpha_rate", std::abs(s.alpha_rate - sg * sg) <= 0.2 * sg * sg, s.alpha_rate);
    c.add("R_rate", std::abs(s.R_rate - sg) <= 0.25 * sg, s.R_rate);
}

void c7_universal(Checks& c) {
    double det = std::max(block_determinant_residual(generic_tower().maps[0]),
                          block_determinant_residual(build_seed(example_seed(2))));
    c.add("block_det", det <= 1e-9, det);

    RenormalizationSequence ex = build_tower(example_seed(1), 5);
    ScopeAnalysis sa(ex);
    BzEstimate bz = b_z(sa, 5);
    c.add("b_z_gap", bz.gap <= 0.05, bz.gap);

    RenormalizationSequence cj_seq = build_tower(constant_jacobian_seed(0.05, 0.3), 4);
    ScopeAnalysis cj(cj_seq);
    UniversalNumbers u = universal_numbers(cj, 4);
    c.add("b_F_err", !u.degenerate && std::abs(u.b_F - 0.015) <= 1e-8, std::abs(u.b_F - 0.015));
    c.add("b_z_err", std::abs(u.b_z - 0.3) <= 1e-8, std::abs(u.b_z - 0.3));
    c.add("b1_err", std::abs(u.b1 - 0.05) <= 1e-8, std::abs(u.b1 - 0.05));
}

void c8_resonance(Checks& c) {
    auto check = [&](const std::string& name, const ScopeAnalysis& sa) {
        UniversalNumbers u = universal_numbers(sa, 5);
        if (u.degenerate || !(u.b1 > 0.0)) {
            c.fail(name + ": no b1");
            return;
        }
        double lo = INFINITY, hi = 0.0;
        for (int k = 0; k <= 2; ++k) {
            double r = std::abs(sa.at(k + 1, k).t) / std::pow(u.b1, std::ldexp(1.0, k));
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        c.add(name + "_min", lo >= 0.1, lo);
        c.add(name + "_max", hi <= 10.0, hi);
    };
    check("generic_0.05", generic_analysis());
    RenormalizationSequence other_seq = build_tower(generic_seed(1, 0.03), 5);
    ScopeAnalysis other(other_seq);
    check("generic_0.03", other);
}

void c9_geometry(Checks& c) {
    const double sg = sigma_star();
    cli::SweepGrid grid;  // 0.1 .. 1.6, 20 values
    std::vector<SweepRow> rows = cli::parallel_sweep(generic_seed(1), grid.values(), 5, 2, cli::thread_count());
    int ok_rows = 0, overlaps = 0;
    double worst_gap = 0.0, res_lo = INFINITY, res_hi = 0.0;
    for (const SweepRow& r : rows) {
        if (!r.error.empty()) {
            std::fprintf(stderr, "sweep %g: %s\n", r.parameter, r.error.c_str());
            continue;
        }
        ++ok_rows;
        for (const GeometryRow& g : r.rows) {
            worst_gap = std::max(worst_gap, g.ratio / (50.0 * std::pow(sg, g.k)));
            if (g.overlap) {
                ++overlaps;
                res_lo = std::min(res_lo, g.resonance_ratio);
                res_hi = std::max(res_hi, g.resonance_ratio);
            }
        }
    }
    c.add("sweep_values", ok_rows >= 20, ok_rows);
    c.add("gap_over_bound", worst_gap <= 1.0, worst_gap);
    c.add("overlaps", true, overlaps);
    if (overlaps > 0) {
        c.add("resonance_min", res_lo >= 1.0 / 20.0, res_lo);
        c.add("resonance_max", res_hi <= 20.0, res_hi);
    }

    // degenerate baseline over the same levels
    const Function& fs = extended_fixed_point(1.2, 32);
    RenormalizationSequence deg = renormalize_tower(degenerate_map(fs, 1, 1.2, 4), 5, {}, &fs);
    double lo = INFINITY, hi = 0.0;
    for (int k = 0; k <= 2; ++k)
        for (int n = k + 1; n + 1 <= 5; ++n) {
            double r = geometry_ratio_scan(deg, k, n).ratio;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    c.add("degenerate_min", lo >= 0.1, lo);
    c.add("degenerate_max", hi <= 1.0, hi);
}

void c10_holder(Checks& c) {
    c.add("exact", holder_bound(0.01, 0.0001) == 0.75, holder_bound(0.01, 0.0001));
    double diag = 0.0;
    for (int i = 1; i < 100; ++i) diag = std::max(diag, std::abs(holder_bound(i / 100.0, i / 100.0) - 1.0));
    c.add("diagonal", diag <= 1e-15, diag);
    int violations = 0;
    for (int i = 1; i <= 20; ++i)
        for (int j = 1; j <= 20; ++j) {
            double a = i / 21.0, b = j / 21.0;
            if (i < 20 && !(holder_bound((i + 1) / 21.0, b) < holder_bound(a, b))) ++violations;
            if (j < 20 && !(holder_bound(a, (j + 1) / 21.0) > holder_bound(a, b))) ++violations;
        }
    c.add("monotone_violations", violations == 0, violations);
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        files[fs::relative(e.path(), dir).string()] = read_file(e.path().string());
    }
    return files;
}

void c11_determinism(Checks& c) {
    const fs::path base = fs::temp_directory_path() / "renorm_acceptance";
    fs::remove_all(base);
    std::map<std::string, std::string> runs[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path out = base / ("run" + std::to_string(i));
        std::ostringstream cfg;
        cfg << "[seed]\nkind = \"generic\"\nm = 1\n[tower]\ndepth = 3\n[checks]\ngrid = 7\n"
            << "[sweep]\ngrid = \"0.6:1.0:2\"\ndepth = 3\nkmax = 1\n"
            << "[run]\nstages = [\"fixed_point\", \"tower\", \"classn\", \"scope\", \"geometry\", \"sweep\"]\n"
            << "output = \"" << out.string() << "\"\n";
        cli::run(cli::parse_config(cfg.str()));
        runs[i] = outputs(out);
    }
    int csvs = 0, differ = 0;
    for (const auto& [name, text] : runs[0]) {
        if (fs::path(name).extension() == ".csv") ++csvs;
        auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != text) ++differ;
    }
    if (runs[0].size() != runs[1].size()) ++differ;
    c.add("csv_files", csvs >= 10, csvs);
    c.add("differing_files", differ == 0, differ);
    fs::remove_all(base);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Checks&)>>> criteria = {
        {"1-D fixed point", c1_fixed_point},
        {"conjugacy oracle", c2_conjugacy},
        {"perturbation decay", c3_decay},
        {"N invariance", c4_invariance},
        {"recursion identities", c5_recursions},
        {"scaling asymptotics", c6_scaling},
        {"universal numbers", c7_universal},
        {"b1-t resonance", c8_resonance},
        {"geometry mechanism", c9_geometry},
        {"Holder bound", c10_holder},
        {"determinism", c11_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Checks c;
        auto t0 = Clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.fail(std::string("exception: ") + e.what());
        }
        if (!c.ok()) ++failed;
        std::printf("%s %2zu %s [%.1fs]: %s\n", c.ok() ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    since(t0), c.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
