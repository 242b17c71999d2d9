// renorm_cli: command-line front end for the experiment stages.
// Exit codes: 0 ok, 2 configuration or usage error, 3 stage failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "config.h"
#include "pipeline.h"
#include "renorm/error.h"

namespace fs = std::filesystem;
using namespace renorm;
using namespace renorm::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

// Write to <out>/<name>.csv, or print to stdout when out is empty.
void deliver(const CsvTable& t, const std::string& name, const std::string& out) {
    if (out.empty()) {
        std::cout << t.str();
        return;
    }
    std::string path = (fs::path(out) / (name + ".csv")).string();
    t.write(path);
    std::cerr << "wrote " << path << '\n';
}

RenormalizationSequence tower_for(const MapSpec& spec, int depth) { return build_map_tower(spec, depth); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Period-doubling renormalization of Henon-like maps in any dimension"};
    app.require_subcommand(1);

    int fp_degree = 16;
    std::string out;
    auto* fixed = app.add_subcommand("fixed-point", "solve the 1-D fixed point and report sigma");
    fixed->add_option("--degree", fp_degree, "polynomial degree")->check(CLI::Range(4, 64));
    fixed->add_option("--out", out, "output directory");

    std::string map_path;
    int depth = 3, grid = 9;
    auto* ren = app.add_subcommand("renormalize", "build a tower and save it");
    ren->add_option("--map", map_path, "seed map JSON")->required()->check(CLI::ExistingFile);
    ren->add_option("--depth", depth, "number of renormalizations")->check(CLI::PositiveNumber);
    ren->add_option("--grid", grid, "conjugacy grid points per axis")->check(CLI::Range(2, 41));
    ren->add_option("--out", out, "output directory")->required();

    std::string region = "pieces";
    auto* nd = app.add_subcommand("n-defect", "sup of the class-N defect of the seed map");
    nd->add_option("--map", map_path, "seed map JSON")->required()->check(CLI::ExistingFile);
    nd->add_option("--region", region, "pieces | full");
    nd->add_option("--grid", grid, "grid points per axis")->check(CLI::Range(2, 41));
    nd->add_option("--out", out, "output directory");

    auto* inv = app.add_subcommand("invariance", "class-N defect along a tower");
    inv->add_option("--map", map_path, "seed map JSON")->required()->check(CLI::ExistingFile);
    inv->add_option("--depth", depth, "last level")->check(CLI::PositiveNumber);
    inv->add_option("--grid", grid, "grid points per axis")->check(CLI::Range(2, 41));
    inv->add_option("--out", out, "output directory");

    std::string tower_dir;
    int kmax = 2, samples = 5;
    auto* sc = app.add_subcommand("scope-table", "alpha, sigma, t, u, d and R for a saved tower");
    sc->add_option("--tower", tower_dir, "directory written by renormalize")->required()->check(CLI::ExistingDirectory);
    sc->add_option("--kmax", kmax, "largest k")->check(CLI::NonNegativeNumber);
    sc->add_option("--out", out, "output directory");

    auto* geo = app.add_subcommand("geometry", "universal numbers, pieces and gap ratios for a saved tower");
    geo->add_option("--tower", tower_dir, "directory written by renormalize")->required()->check(CLI::ExistingDirectory);
    geo->add_option("--kmax", kmax, "largest k")->check(CLI::NonNegativeNumber);
    geo->add_option("--samples", samples, "boundary samples per axis")->check(CLI::Range(2, 21));
    geo->add_option("--out", out, "output directory");

    std::string grid_spec;
    int sweep_depth = 5;
    auto* sw = app.add_subcommand("sweep-b1", "scale eps of a seed family and record b1 and overlaps");
    sw->add_option("--family", map_path, "seed family JSON")->required()->check(CLI::ExistingFile);
    sw->add_option("--grid", grid_spec, "lo:hi:count multipliers of eps")->required();
    sw->add_option("--depth", sweep_depth, "tower depth")->check(CLI::Range(2, 12));
    sw->add_option("--kmax", kmax, "largest k")->check(CLI::NonNegativeNumber);
    sw->add_option("--out", out, "output directory");

    double b1 = 0.0, b1t = 0.0;
    auto* hold = app.add_subcommand("holder", "upper bound on the Hoelder exponent of a conjugacy");
    hold->add_option("--b1", b1, "b1 of the first map")->required();
    hold->add_option("--b1t", b1t, "b1 of the second map")->required();

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run the stages of an experiment config");
    run_cmd->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (fixed->parsed()) {
            const RenormFixedPoint& fp = reference_fixed_point(fp_degree);
            deliver(fixed_point_table(fp, fp_degree), "fixed_point", out);
        } else if (ren->parsed()) {
            RenormalizationSequence seq = tower_for(load_map_spec(map_path), depth);
            save_tower((fs::path(out) / "tower").string(), seq);
            deliver(tower_table(seq, grid), "tower", out);
        } else if (nd->parsed()) {
            DefectRegion r = parse_region(region);
            MapSpec spec = load_map_spec(map_path);
            NDefectReport rep;
            if (r == DefectRegion::Full) {
                HenonMap F = spec.seed.tune && spec.kind != "degenerate" ? tower_for(spec, 1).maps[0] : build_map(spec);
                rep = n_defect(F, r, grid);
            } else {
                rep = n_defect(tower_for(spec, 1).steps[0], r, grid);
            }
            CsvTable t({"region", "per_axis", "points", "skipped", "sup_defect"});
            t.row() << region_name(rep.region) << rep.per_axis << static_cast<unsigned long long>(rep.points)
                    << static_cast<unsigned long long>(rep.skipped) << rep.sup_defect;
            deliver(t, "n_defect", out);
        } else if (inv->parsed()) {
            RenormalizationSequence seq = tower_for(load_map_spec(map_path), depth);
            deliver(invariance_table(invariance_experiment(seq, depth, grid)), "invariance", out);
        } else if (sc->parsed()) {
            RenormalizationSequence seq = load_tower(tower_dir);
            ScopeAnalysis sa(seq);
            deliver(scope_table(sa, kmax), "scope", out);
            if (!out.empty()) deliver(scope_checks_table(sa, kmax), "scope_checks", out);
        } else if (geo->parsed()) {
            RenormalizationSequence seq = load_tower(tower_dir);
            ScopeAnalysis sa(seq);
            UniversalNumbers u = universal_numbers(sa, seq.depth());
            double b = u.degenerate ? NAN : u.b1;
            deliver(geometry_csv(geometry_table(sa, kmax, b, samples)), "geometry", out);
            if (!out.empty()) {
                deliver(universal_table(u, seq.depth()), "universal", out);
                deliver(pieces_table(seq, samples), "pieces", out);
            }
        } else if (sw->parsed()) {
            MapSpec spec = load_map_spec(map_path);
            if (spec.kind == "degenerate") throw Error(ErrorKind::ConfigError, "sweep needs a seed family");
            SweepGrid g = parse_grid(grid_spec);
            deliver(sweep_table(parallel_sweep(spec.seed, g.values(), sweep_depth, kmax, thread_count())), "sweep",
                    out);
            if (!out.empty()) write_file_atomic((fs::path(out) / "plots.gp").string(), plot_script({"sweep"}));
        } else if (hold->parsed()) {
            double h = 0.0;
            try {
                h = holder_bound(b1, b1t);
            } catch (const Error& e) {
                throw Error(ErrorKind::ConfigError, e.what());
            }
            std::printf("%.17g\n", h);
        } else if (run_cmd->parsed()) {
            RunManifest man = run(load_config(config_path));
            std::cerr << "run complete, " << man.outputs.size() << " outputs, config " << man.config_hash << '\n';
        }
    } catch (const StageFailed& e) {
        std::cerr << e.what() << '\n';
        return kExitStage;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    }
    return 0;
}
