#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "config.h"
#include "doctest.h"
#include "pipeline.h"
#include "renorm/error.h"
#include "renorm/report.h"

using namespace renorm;
using namespace renorm::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("renorm_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string minimal_config(const fs::path& out, int depth = 2) {
    std::ostringstream os;
    os << "# degenerate map, smallest pipeline\n"
       << "[seed]\n"
       << "kind = \"degenerate\"\n"
       << "m = 1\n"
       << "[tower]\n"
       << "depth = " << depth << "\n"
       << "[run]\n"
       << "stages = [\"fixed_point\", \"tower\", \"classn\", \"scope\", \"geometry\"]\n"
       << "output = \"" << out.string() << "\"\n";
    return os.str();
}

// Exit status of a shell command, or -1 when it did not exit normally.
int shell(const std::string& cmd) {
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string cli_path() {
    const char* p = std::getenv("RENORM_CLI");
    return p ? p : "";
}

}  // namespace

TEST_CASE("config: sections, JSON values and defaults") {
    ExperimentConfig c = parse_config(
        "[seed]\nkind = \"example\"\nm = 2\ns = 0.04\n[tower]\ndepth = 4\n[checks]\nregion = \"full\"\ngrid = 7\n"
        "[sweep]\ngrid = \"0.2:1.0:5\"\n[run]\nstages = [\"fixed_point\"]\noutput = \"x\"\n");
    CHECK(c.map.kind == "example");
    CHECK(c.map.seed.m == 2);
    CHECK(c.map.seed.example);
    CHECK(c.depth == 4);
    CHECK(c.region == "full");
    CHECK(c.grid == 7);
    CHECK(c.sweep.count == 5);
    CHECK(c.sweep.values().front() == 0.2);
    CHECK(c.sweep.values().back() == 1.0);
    CHECK(c.stages == std::vector<std::string>{"fixed_point"});
    CHECK(c.output == "x");

    ExperimentConfig d = parse_config("");
    CHECK(d.map.kind == "generic");
    CHECK(d.depth == 3);
}

TEST_CASE("config: errors are ConfigError") {
    auto kind_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::DomainError;
    };
    CHECK(kind_of("[tower]\ndepth = 0\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[tower]\nwidth = 3\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[tower]\ndepth = three\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[tower\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[tower]\ndepth = 2\ndepth = 3\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[seed]\nkind = \"cubic\"\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[seed]\neps = [{\"coef\": 0.1, \"powers\": [0, 1]}]\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[checks]\nregion = \"everywhere\"\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[run]\nstages = [\"scope\"]\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[run]\nstages = [\"plot\"]\n") == ErrorKind::ConfigError);
    CHECK(kind_of("[sweep]\ngrid = \"1:0.5:3\"\n") == ErrorKind::ConfigError);
}

TEST_CASE("config: seed file relative to the config") {
    fs::path dir = scratch("seedfile");
    std::ofstream(dir / "seed.json") << R"({"kind": "constant_jacobian", "b": 0.02, "c": 0.4})";
    std::ofstream(dir / "run.cfg") << "[seed]\nfile = \"seed.json\"\n";
    ExperimentConfig c = load_config((dir / "run.cfg").string());
    CHECK(c.map.kind == "constant_jacobian");
    REQUIRE(c.map.seed.eps.size() == 1);
    CHECK(c.map.seed.eps[0].coef == 0.02);
    MapSpec back = map_spec_from_json(map_spec_to_json(c.map));
    CHECK(back.seed.eps[0].coef == 0.02);
    CHECK(back.seed.delta[0][0].coef == 0.4);
}

TEST_CASE("grid strings and the config hash") {
    SweepGrid g = parse_grid("0.1:1.6:20");
    CHECK(g.values().size() == 20);
    CHECK(g.values()[19] == doctest::Approx(1.6).epsilon(1e-15));
    CHECK_THROWS_AS(parse_grid("0.1:1.6"), Error);
    CHECK_THROWS_AS(parse_grid("0.1:1.6:20x"), Error);
    CHECK(config_hash("abc") == config_hash("abc"));
    CHECK(config_hash("abc") != config_hash("abd"));
    CHECK(config_hash("").size() == 16);
}

TEST_CASE("csv: header-only, quoting, widths and exact doubles") {
    CsvTable empty({"a", "b"});
    CHECK(empty.str() == "a,b\n");

    CsvTable t({"name", "value"});
    t.row() << "x,y" << 0.1;
    t.row() << "say \"hi\"" << -2;
    CHECK(t.str() == "name,value\n\"x,y\",0.10000000000000001\n\"say \"\"hi\"\"\",-2\n");
    auto rows = parse_csv(t.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "x,y");
    CHECK(rows[2][0] == "say \"hi\"");

    CsvTable bad({"a", "b"});
    bad.row() << 1;
    CHECK_THROWS_AS(bad.str(), Error);

    for (double v : {1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.39953528051981102})
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    CHECK(format_double(NAN) == "nan");
    CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("geometry table round-trips through the CSV reader") {
    std::vector<GeometryRow> rows = {{0, 1, "c", 0.5, 0.125, 0.25, false, 1.5}, {1, 3, "vcv", 0.01, 0.002, 0.2, true, 0.9}};
    CsvTable t = geometry_csv(rows);
    auto back = parse_csv(t.str());
    REQUIRE(back.size() == 3);
    CHECK(back[0] == std::vector<std::string>{"k", "n", "word", "diam", "dist_min", "ratio", "overlap_flag",
                                              "resonance_ratio"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(std::stoi(back[i + 1][0]) == rows[i].k);
        CHECK(std::stoi(back[i + 1][1]) == rows[i].n);
        CHECK(back[i + 1][2] == rows[i].word);
        CHECK(std::stod(back[i + 1][3]) == rows[i].diam);
        CHECK(std::stod(back[i + 1][5]) == rows[i].ratio);
        CHECK((back[i + 1][6] == "1") == rows[i].overlap);
        CHECK(std::stod(back[i + 1][7]) == rows[i].resonance_ratio);
    }
}

TEST_CASE("sweep plot script matches the golden file") {
    std::string golden = read_file(std::string(RENORM_SOURCE_DIR) + "/tests/golden/sweep_plot.gp");
    CHECK(plot_script({"sweep"}) == golden);
    // tables that were not written are not plotted
    CHECK(plot_script({"sweep"}).find("geometry.csv") == std::string::npos);
    CHECK(plot_script({"geometry", "sweep"}).find("\"geometry.csv\"") != std::string::npos);
}

TEST_CASE("minimal run: all stages ok, tables written, reruns byte-identical") {
    fs::path out = scratch("minimal");
    ExperimentConfig c = parse_config(minimal_config(out));
    RunManifest m = run(c);
    CHECK(m.ok());
    for (const StageStatus& s : m.stages) {
        if (s.name == "sweep")
            CHECK(s.status == "skipped");
        else
            CHECK(s.status == "ok");
    }
    // pieces of levels 1 and 2
    auto pieces = parse_csv(read_file((out / "pieces.csv").string()));
    CHECK(pieces.size() == 1 + 2 + 4);
    auto geo = parse_csv(read_file((out / "geometry.csv").string()));
    CHECK(geo.size() == 2);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "plots.gp"));
    CHECK(fs::exists(out / "tower" / "tower.txt"));

    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".csv") first[e.path().filename().string()] = read_file(e.path().string());
    CHECK(first.size() >= 8);
    run(c);
    for (const auto& [name, text] : first) CHECK(read_file((out / name).string()) == text);
}

TEST_CASE("depth above the feasibility knob fails the tower stage and keeps earlier outputs") {
    fs::path out = scratch("deep");
    ExperimentConfig c = parse_config(minimal_config(out, 12));
    try {
        run(c);
        FAIL("expected StageFailed");
    } catch (const StageFailed& e) {
        CHECK(e.stage() == "tower");
        CHECK(e.cause().find("DepthExceeded") != std::string::npos);
    }
    CHECK(fs::exists(out / "fixed_point.csv"));
    std::string manifest = read_file((out / "manifest.json").string());
    CHECK(manifest.find("\"failed\"") != std::string::npos);
}

TEST_CASE("parallel sweep merges in parameter order") {
    SeedSpec s = generic_seed(1);
    std::vector<double> p = {0.5, 1.0, 9.0};
    std::vector<SweepRow> one = parallel_sweep(s, p, 3, 1, 1);
    std::vector<SweepRow> two = parallel_sweep(s, p, 3, 1, 2);
    CHECK(sweep_table(one).str() == sweep_table(two).str());
    REQUIRE(one.size() == 3);
    CHECK(one[0].parameter == 0.5);
    CHECK(!one[2].error.empty());
}

TEST_CASE("RENORM_THREADS caps the worker count") {
    setenv("RENORM_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    setenv("RENORM_THREADS", "zero", 1);
    CHECK(thread_count() >= 1);
    unsetenv("RENORM_THREADS");
    CHECK(thread_count() >= 1);
}

TEST_CASE("command line: exit codes and output") {
    const std::string exe = cli_path();
    if (exe.empty()) {
        MESSAGE("RENORM_CLI not set; skipping subprocess checks");
        return;
    }
    fs::path dir = scratch("subprocess");
    const std::string q = "\"" + exe + "\"";
    CHECK(shell(q + " holder --b1 0.01 --b1t 0.0001 > " + (dir / "h.txt").string()) == 0);
    CHECK(read_file((dir / "h.txt").string()) == "0.75\n");
    CHECK(shell(q + " holder --b1 2 --b1t 0.1 2> /dev/null") == 2);
    CHECK(shell(q + " 2> /dev/null > /dev/null") == 2);
    CHECK(shell(q + " frobnicate 2> /dev/null > /dev/null") == 2);

    CHECK(shell(q + " fixed-point --out " + (dir / "fp").string() + " 2> /dev/null") == 0);
    auto fp = parse_csv(read_file((dir / "fp" / "fixed_point.csv").string()));
    REQUIRE(fp.size() == 2);
    CHECK(std::stod(fp[1][2]) > 2.4);

    std::ofstream(dir / "bad.cfg") << "[tower]\ndepth = -1\n";
    CHECK(shell(q + " run --config " + (dir / "bad.cfg").string() + " 2> /dev/null") == 2);
    std::ofstream(dir / "deep.cfg") << minimal_config(dir / "deep", 12);
    CHECK(shell(q + " run --config " + (dir / "deep.cfg").string() + " 2> /dev/null") == 3);

    std::ofstream(dir / "deg.json") << R"({"kind": "degenerate", "m": 1})";
    CHECK(shell(q + " renormalize --map " + (dir / "deg.json").string() + " --depth 2 --out " +
                (dir / "t").string() + " 2> /dev/null") == 0);
    CHECK(shell(q + " scope-table --tower " + (dir / "t" / "tower").string() + " --kmax 1 --out " +
                (dir / "s").string() + " 2> /dev/null") == 0);
    auto sc = parse_csv(read_file((dir / "s" / "scope.csv").string()));
    CHECK(sc.size() == 1 + 3);
    CHECK(shell(q + " n-defect --map " + (dir / "deg.json").string() + " --region full > " +
                (dir / "nd.csv").string()) == 0);
    auto nd = parse_csv(read_file((dir / "nd.csv").string()));
    REQUIRE(nd.size() == 2);
    CHECK(std::stod(nd[1][4]) == 0.0);
}
