#include "pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "json.hpp"
#include "renorm/error.h"

namespace renorm::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

bool RunManifest::ok() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageStatus& s) { return s.status != "failed"; });
}

std::string RunManifest::json_text() const {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["compiler"] = compiler;
    j["eigen"] = eigen;
    j["wall_clock_seconds"] = wall_clock_seconds;
    nlohmann::ordered_json st = nlohmann::ordered_json::array();
    for (const StageStatus& s : stages)
        st.push_back({{"name", s.name}, {"status", s.status}, {"message", s.message}, {"seconds", s.seconds}});
    j["stages"] = st;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

int thread_count() {
    if (const char* env = std::getenv("RENORM_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 256L));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

CsvTable fixed_point_table(const RenormFixedPoint& fp, int degree) {
    CsvTable t({"degree", "sigma", "inv_sigma", "residual", "iterations"});
    t.row() << degree << fp.sigma << 1.0 / fp.sigma << fp.residual << fp.iterations;
    return t;
}

CsvTable tower_table(const RenormalizationSequence& seq, int per_axis) {
    CsvTable t({"level", "sigma0", "shift", "eps_norm", "delta_norm", "distance_to_fixed", "conj_second_iterate",
                "conj_via_psi_c"});
    for (int k = 0; k <= seq.depth(); ++k) {
        auto r = t.row();
        r << k;
        if (k < seq.depth()) {
            r << seq.steps[k].sigma0() << seq.steps[k].shift();
        } else {
            r << NAN << NAN;
        }
        r << seq.eps_norms.at(k) << seq.delta_norms.at(k)
          << (k < static_cast<int>(seq.distance_to_fixed.size()) ? seq.distance_to_fixed[k] : NAN);
        if (k < seq.depth()) {
            ConjugacyResidual c = conjugacy_residual(seq.steps[k], per_axis);
            r << c.second_iterate << c.via_psi_c;
        } else {
            r << NAN << NAN;
        }
    }
    return t;
}

CsvTable classn_table(const RenormalizationSequence& seq, DefectRegion region, int per_axis) {
    CsvTable t({"level", "region", "n_defect", "points", "skipped", "block_x", "block_y", "block_z", "block_det_z",
                "recursion_x", "recursion_y", "recursion_z", "recursion_y_variant", "defect_term"});
    for (int k = 0; k < seq.depth(); ++k) {
        const RenormStep& step = seq.steps[k];
        NDefectReport nd = n_defect(step, region, per_axis);
        BlockRecursionReport b = verify_block_recursion(step, per_axis);
        GeneralRecursionReport a = verify_general_recursion(step, per_axis);
        t.row() << k << region_name(region) << nd.sup_defect << static_cast<unsigned long long>(nd.points)
                << static_cast<unsigned long long>(nd.skipped) << b.x << b.y << b.z << b.det_z << a.x << a.y << a.z
                << a.y_index_variant << a.defect_term;
    }
    return t;
}

CsvTable invariance_table(const std::vector<InvarianceRow>& rows) {
    CsvTable t({"level", "defect", "eps_norm", "delta_norm"});
    for (const InvarianceRow& r : rows) t.row() << r.level << r.defect << r.eps_norm << r.delta_norm;
    return t;
}

CsvTable scope_table(const ScopeAnalysis& sa, int kmax) {
    CsvTable t({"k", "n", "alpha", "sigma", "t", "u_norm", "d_norm", "R_norm", "R_prime_norm"});
    for (int k = 0; k <= kmax && k < sa.depth(); ++k)
        for (int n = k + 1; n <= sa.depth(); ++n) {
            const ScopeDecomposition& d = sa.at(n, k);
            t.row() << k << n << d.alpha << d.sigma << d.t << inf_norm(d.u) << inf_norm(d.d) << d.R_norm
                    << d.R_prime_norm;
        }
    return t;
}

CsvTable scope_checks_table(const ScopeAnalysis& sa, int kmax) {
    CsvTable t({"check", "k", "n", "value"});
    const int N = sa.depth();
    DutRecursionReport dut = verify_dut_recursions(sa, N);
    t.row() << "d_additivity" << 0 << N << dut.d_additivity;
    t.row() << "u_recursion" << 0 << N << dut.u_recursion;
    t.row() << "t_recursion" << 0 << N << dut.t_recursion;
    t.row() << "t_minus_ud" << 0 << N << dut.t_minus_ud;
    t.row() << "product_rule" << 0 << N << dut.product_rule;
    t.row() << "structure" << 0 << N << dut.structure;
    for (int k = 0; k <= kmax && k + 1 < N; ++k) {
        RRecursionReport r = verify_R_recursion(sa, k, N);
        t.row() << "R_recursion" << k << N << r.recursion;
        t.row() << "R_rate" << k << N << r.fitted_rate;
    }
    for (int k = 0; k <= kmax && k < N; ++k)
        for (int n = k + 1; n <= N; ++n) t.row() << "q_sum" << k << n << verify_q_sum_identity(sa, n, k);
    for (int k = 0; k <= kmax && k + 1 < N; ++k) {
        ScalingReport s = scaling_rates(sa, k, N);
        t.row() << "sigma_rate" << k << N << s.sigma_rate;
        t.row() << "alpha_rate" << k << N << s.alpha_rate;
    }
    return t;
}

CsvTable universal_table(const UniversalNumbers& u, int depth) {
    CsvTable t({"depth", "b_F", "b_z", "b1", "gap"});
    if (u.degenerate) {
        t.row() << depth << 0.0 << NAN << NAN << NAN;
        return t;
    }
    for (const UniversalRow& r : u.table) t.row() << r.depth << r.b_F << r.b_z_orbit << r.b1 << r.gap;
    return t;
}

CsvTable geometry_csv(const std::vector<GeometryRow>& rows) {
    CsvTable t({"k", "n", "word", "diam", "dist_min", "ratio", "overlap_flag", "resonance_ratio"});
    for (const GeometryRow& r : rows)
        t.row() << r.k << r.n << r.word << r.diam << r.dist_min << r.ratio << r.overlap << r.resonance_ratio;
    return t;
}

CsvTable pieces_table(const RenormalizationSequence& seq, int per_axis) {
    CsvTable t({"n", "word", "diam", "x_lo", "x_hi", "y_lo", "y_hi"});
    for (int n = 1; n <= seq.depth(); ++n) {
        const std::uint64_t count = std::uint64_t{1} << n;
        for (std::uint64_t i = 0; i < count; ++i) {
            PieceSample p = piece(seq, Word::from_index(i, n), 0, per_axis);
            t.row() << n << p.word.str() << diam(p) << p.bbox.lower[0] << p.bbox.upper[0] << p.bbox.lower[1]
                    << p.bbox.upper[1];
        }
    }
    return t;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows) {
    CsvTable t({"parameter", "b1", "b_F", "b_z", "k", "n", "word", "diam", "dist_min", "ratio", "overlap_flag",
                "resonance_ratio", "error"});
    for (const SweepRow& s : rows) {
        if (!s.error.empty()) {
            t.row() << s.parameter << NAN << NAN << NAN << -1 << -1 << "" << NAN << NAN << NAN << false << NAN
                    << s.error;
            continue;
        }
        for (const GeometryRow& r : s.rows)
            t.row() << s.parameter << s.b1 << s.b_F << s.b_z << r.k << r.n << r.word << r.diam << r.dist_min
                    << r.ratio << r.overlap << r.resonance_ratio << "";
    }
    return t;
}

std::vector<SweepRow> parallel_sweep(const SeedSpec& spec, const std::vector<double>& parameters, int depth,
                                     int kmax, int threads) {
    std::vector<SweepRow> out(parameters.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < parameters.size(); i = next++)
            out[i] = sweep_b1(spec, {parameters[i]}, depth, kmax).front();
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(parameters.size())));
    if (n == 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return out;
}

std::string plot_script(const std::vector<std::string>& tables) {
    auto has = [&](const char* name) { return std::find(tables.begin(), tables.end(), name) != tables.end(); };
    std::ostringstream os;
    os << "# gnuplot script; run from the output directory: gnuplot plots.gp\n"
       << "set datafile separator \",\"\n"
       << "set datafile missing \"nan\"\n"
       << "set terminal pngcairo size 900,600\n"
       << "set grid\n";
    if (has("tower")) {
        os << "\nset output \"tower.png\"\n"
           << "set title \"perturbation norms by level\"\n"
           << "set xlabel \"level\"\n"
           << "set ylabel \"sup norm\"\n"
           << "set logscale y\n"
           << "plot \"tower.csv\" using \"level\":\"eps_norm\" with linespoints title \"eps\", \\\n"
           << "     \"tower.csv\" using \"level\":\"delta_norm\" with linespoints title \"delta\"\n"
           << "unset logscale y\n";
    }
    if (has("invariance")) {
        os << "\nset output \"invariance.png\"\n"
           << "set title \"defect by level\"\n"
           << "set xlabel \"level\"\n"
           << "set ylabel \"defect\"\n"
           << "set logscale y\n"
           << "plot \"invariance.csv\" using \"level\":\"defect\" with linespoints notitle\n"
           << "unset logscale y\n";
    }
    if (has("scope")) {
        os << "\nset output \"scope.png\"\n"
           << "set title \"scaling of sigma, alpha and R for k = 0\"\n"
           << "set xlabel \"n\"\n"
           << "set ylabel \"absolute value\"\n"
           << "set logscale y\n"
           << "plot \"scope.csv\" using \"n\":($1 == 0 ? abs(column(\"sigma\")) : NaN) with linespoints title \"sigma\", \\\n"
           << "     \"scope.csv\" using \"n\":($1 == 0 ? abs(column(\"alpha\")) : NaN) with linespoints title \"alpha\", \\\n"
           << "     \"scope.csv\" using \"n\":($1 == 0 ? column(\"R_norm\") : NaN) with linespoints title \"R\"\n"
           << "unset logscale y\n";
    }
    if (has("geometry")) {
        os << "\nset output \"geometry.png\"\n"
           << "set title \"gap over diameter\"\n"
           << "set xlabel \"n\"\n"
           << "set ylabel \"dist_min / diam\"\n"
           << "set logscale y\n"
           << "plot \"geometry.csv\" using \"n\":\"ratio\":\"k\" with points palette notitle\n"
           << "unset logscale y\n";
    }
    if (has("sweep")) {
        os << "\nset output \"sweep.png\"\n"
           << "set title \"resonance ratio against b1\"\n"
           << "set xlabel \"b1\"\n"
           << "set ylabel \"resonance_ratio\"\n"
           << "set logscale xy\n"
           << "plot \"sweep.csv\" using \"b1\":\"resonance_ratio\" with points pt 7 title \"all pairs\", \\\n"
           << "     \"sweep.csv\" using \"b1\":(column(\"overlap_flag\") == 1 ? column(\"resonance_ratio\") : NaN) "
              "with points pt 6 ps 2 title \"overlap\"\n"
           << "unset logscale xy\n";
    }
    return os.str();
}

RunManifest run(const ExperimentConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    RunManifest man;
    man.config_hash = config_hash(config.text);
    man.version = kVersion;
#ifdef __VERSION__
    man.compiler = __VERSION__;
#endif
    man.eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                std::to_string(EIGEN_MINOR_VERSION);

    const fs::path out(config.output);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw Error(ErrorKind::IoError, "cannot create output directory " + config.output);

    std::vector<std::string> tables;
    auto emit = [&](const CsvTable& t, const std::string& name) {
        t.write((out / (name + ".csv")).string());
        man.outputs.push_back(name + ".csv");
        tables.push_back(name);
    };
    auto write_manifest = [&] {
        man.wall_clock_seconds = seconds_since(t_start);
        write_file_atomic((out / "manifest.json").string(), man.json_text());
    };

    std::optional<RenormalizationSequence> seq;
    std::optional<ScopeAnalysis> sa;
    double b1 = NAN;

    const std::vector<std::string> order = {"fixed_point", "tower", "classn", "scope", "geometry", "sweep"};
    auto wanted = [&](const std::string& s) {
        return std::find(config.stages.begin(), config.stages.end(), s) != config.stages.end();
    };
    auto need_tower = [&](const char* stage) {
        if (!seq) throw Error(ErrorKind::ConfigError, std::string(stage) + " needs the tower stage");
    };

    const std::map<std::string, std::function<void()>> body = {
        {"fixed_point",
         [&] {
             const int deg = config.map.seed.fixed_point_degree;
             emit(fixed_point_table(reference_fixed_point(deg), deg), "fixed_point");
         }},
        {"tower",
         [&] {
             if (config.depth > config.max_depth) {
                 std::ostringstream os;
                 os << "depth " << config.depth << " exceeds max_depth " << config.max_depth;
                 throw Error(ErrorKind::DepthExceeded, os.str());
             }
             seq = build_map_tower(config.map, config.depth);
             save_tower((out / "tower").string(), *seq);
             man.outputs.push_back("tower/tower.txt");
             for (int k = 0; k <= seq->depth(); ++k) man.outputs.push_back("tower/map_" + std::to_string(k) + ".txt");
             emit(tower_table(*seq, config.grid), "tower");
         }},
        {"classn",
         [&] {
             need_tower("classn");
             emit(classn_table(*seq, parse_region(config.region), config.grid), "classn");
             emit(invariance_table(invariance_experiment(*seq, seq->depth() - 1, config.grid)), "invariance");
         }},
        {"scope",
         [&] {
             need_tower("scope");
             if (!sa) sa.emplace(*seq);
             emit(scope_table(*sa, config.scope_kmax), "scope");
             emit(scope_checks_table(*sa, config.scope_kmax), "scope_checks");
         }},
        {"geometry",
         [&] {
             need_tower("geometry");
             if (!sa) sa.emplace(*seq);
             UniversalNumbers u = universal_numbers(*sa, seq->depth());
             if (!u.degenerate) b1 = u.b1;
             emit(universal_table(u, seq->depth()), "universal");
             emit(pieces_table(*seq, config.piece_samples), "pieces");
             emit(geometry_csv(geometry_table(*sa, config.geometry_kmax, b1, config.piece_samples)), "geometry");
         }},
        {"sweep",
         [&] {
             if (config.map.kind == "degenerate")
                 throw Error(ErrorKind::ConfigError, "the b1 sweep needs a seed family, not the degenerate map");
             emit(sweep_table(parallel_sweep(config.map.seed, config.sweep.values(), config.sweep_depth,
                                             config.sweep_kmax, thread_count())),
                  "sweep");
         }},
    };

    bool failed = false;
    for (const std::string& name : order) {
        StageStatus st;
        st.name = name;
        if (!wanted(name)) {
            st.status = "skipped";
        } else if (failed) {
            st.status = "skipped";
            st.message = "an earlier stage failed";
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                body.at(name)();
                st.status = "ok";
            } catch (const std::exception& e) {
                st.status = "failed";
                st.message = e.what();
                failed = true;
            }
            st.seconds = seconds_since(t0);
        }
        man.stages.push_back(st);
        if (failed && st.status == "failed") {
            // keep what was written so far and record it
            if (!tables.empty()) {
                write_file_atomic((out / "plots.gp").string(), plot_script(tables));
                man.outputs.push_back("plots.gp");
            }
            for (std::size_t i = man.stages.size(); i < order.size(); ++i)
                man.stages.push_back({order[i], "skipped", wanted(order[i]) ? "an earlier stage failed" : "", 0.0});
            write_manifest();
            throw StageFailed(name, st.message);
        }
    }
    write_file_atomic((out / "plots.gp").string(), plot_script(tables));
    man.outputs.push_back("plots.gp");
    man.outputs.push_back("manifest.json");
    write_manifest();
    return man;
}

}  // namespace renorm::cli
