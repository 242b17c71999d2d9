#include "config.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "renorm/classn.h"
#include "renorm/error.h"
#include "renorm/report.h"

namespace renorm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

template <class T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        config_error("bad value for " + key + ": " + e.what());
    }
}

std::vector<PolyTerm> terms_from_json(const json& j, const std::string& key) {
    if (!j.is_array()) config_error(key + " must be a list of {coef, powers}");
    std::vector<PolyTerm> out;
    for (const json& t : j) {
        if (!t.is_object() || !t.contains("coef") || !t.contains("powers")) config_error(key + ": term needs coef and powers");
        PolyTerm p;
        p.coef = get_as<double>(t.at("coef"), key + ".coef");
        p.powers = get_as<std::vector<int>>(t.at("powers"), key + ".powers");
        for (int q : p.powers)
            if (q < 0) config_error(key + ": negative power");
        out.push_back(std::move(p));
    }
    return out;
}

json terms_to_json(const std::vector<PolyTerm>& terms) {
    json a = json::array();
    for (const PolyTerm& t : terms) a.push_back({{"coef", t.coef}, {"powers", t.powers}});
    return a;
}

void check_terms(const std::vector<PolyTerm>& terms, int dim, const std::string& key) {
    for (const PolyTerm& t : terms)
        if (static_cast<int>(t.powers.size()) != dim)
            config_error(key + ": term has " + std::to_string(t.powers.size()) + " powers, dimension is " +
                         std::to_string(dim));
}

}  // namespace

MapSpec map_spec_from_json(const json& j) {
    if (!j.is_object()) config_error("a seed map must be a JSON object");
    static const std::set<std::string> known = {
        "kind", "m", "scale", "s", "eps_scale", "b", "c", "radius", "degrees", "degree", "f_degree",
        "fixed_point_degree", "eps_bar", "f_kind", "f_param", "eps", "delta", "example", "eta", "C",
        "tune", "tune_degree"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) config_error("unknown map key: " + it.key());

    MapSpec s;
    s.kind = j.value("kind", std::string("generic"));
    int m = j.contains("m") ? get_as<int>(j.at("m"), "m") : 1;
    if (m < 0) config_error("m must be >= 0");

    if (s.kind == "generic") {
        s.seed = generic_seed(m, j.contains("scale") ? get_as<double>(j.at("scale"), "scale") : 0.05);
    } else if (s.kind == "example") {
        double sc = j.contains("s") ? get_as<double>(j.at("s"), "s") : 0.05;
        double es = j.contains("eps_scale") ? get_as<double>(j.at("eps_scale"), "eps_scale") : 0.05;
        s.seed = example_seed(m, sc, es);
    } else if (s.kind == "constant_jacobian") {
        double b = j.contains("b") ? get_as<double>(j.at("b"), "b") : 0.05;
        double c = j.contains("c") ? get_as<double>(j.at("c"), "c") : 0.3;
        s.seed = constant_jacobian_seed(b, c, m);
    } else if (s.kind == "custom" || s.kind == "degenerate") {
        s.seed = SeedSpec{};
        s.seed.m = m;
        if (s.kind == "degenerate") s.seed.tune = false;
    } else {
        config_error("unknown map kind: " + s.kind);
    }

    SeedSpec& sp = s.seed;
    if (j.contains("radius")) sp.radius = get_as<double>(j.at("radius"), "radius");
    if (j.contains("degrees")) sp.degrees = get_as<std::vector<int>>(j.at("degrees"), "degrees");
    if (j.contains("degree")) s.degree = get_as<int>(j.at("degree"), "degree");
    if (j.contains("f_degree")) sp.f_degree = get_as<int>(j.at("f_degree"), "f_degree");
    if (j.contains("fixed_point_degree")) sp.fixed_point_degree = get_as<int>(j.at("fixed_point_degree"), "fixed_point_degree");
    if (j.contains("eps_bar")) sp.eps_bar = get_as<double>(j.at("eps_bar"), "eps_bar");
    if (j.contains("f_kind")) sp.f_kind = get_as<std::string>(j.at("f_kind"), "f_kind");
    if (j.contains("f_param")) sp.f_param = get_as<double>(j.at("f_param"), "f_param");
    if (j.contains("eps")) sp.eps = terms_from_json(j.at("eps"), "eps");
    if (j.contains("delta")) {
        const json& d = j.at("delta");
        if (!d.is_array()) config_error("delta must be a list of term lists");
        sp.delta.clear();
        for (const json& comp : d) sp.delta.push_back(terms_from_json(comp, "delta"));
    }
    if (j.contains("example")) sp.example = get_as<bool>(j.at("example"), "example");
    if (j.contains("eta")) sp.eta = get_as<std::vector<std::vector<double>>>(j.at("eta"), "eta");
    if (j.contains("C")) sp.C = get_as<std::vector<std::vector<double>>>(j.at("C"), "C");
    if (j.contains("tune")) sp.tune = get_as<bool>(j.at("tune"), "tune");
    if (j.contains("tune_degree")) sp.tune_degree = get_as<int>(j.at("tune_degree"), "tune_degree");

    if (!(sp.radius > 1.0)) config_error("radius must exceed 1");
    if (!(sp.eps_bar > 0.0)) config_error("eps_bar must be > 0");
    if (sp.f_kind != "fixed_point" && sp.f_kind != "quadratic") config_error("f_kind must be fixed_point or quadratic");
    if (sp.f_degree < 2 || sp.fixed_point_degree < 2) config_error("degrees must be >= 2");
    for (int d : sp.degrees)
        if (d < 0) config_error("degrees must be >= 0");
    if (!sp.degrees.empty() && static_cast<int>(sp.degrees.size()) != m + 2)
        config_error("degrees needs m + 2 entries");
    if (sp.tune_degree < 0) config_error("tune_degree must be >= 0");
    check_terms(sp.eps, m + 2, "eps");
    if (!sp.example && !sp.delta.empty() && static_cast<int>(sp.delta.size()) != m)
        config_error("delta needs m components");
    for (const auto& comp : sp.delta) check_terms(comp, m + 2, "delta");
    if (sp.example) {
        if (static_cast<int>(sp.eta.size()) != m || static_cast<int>(sp.C.size()) != m)
            config_error("example maps need m eta series and m rows of C");
        for (const auto& row : sp.C)
            if (static_cast<int>(row.size()) != m + 1) config_error("each C row needs m + 1 entries");
    }
    if (s.kind == "degenerate" && s.degree < 0) config_error("degree must be >= 0");
    return s;
}

json map_spec_to_json(const MapSpec& s) {
    const SeedSpec& sp = s.seed;
    json j;
    j["kind"] = s.kind;
    j["m"] = sp.m;
    j["radius"] = sp.radius;
    j["degrees"] = sp.degrees;
    j["degree"] = s.degree;
    j["f_degree"] = sp.f_degree;
    j["fixed_point_degree"] = sp.fixed_point_degree;
    j["eps_bar"] = sp.eps_bar;
    j["f_kind"] = sp.f_kind;
    j["f_param"] = sp.f_param;
    j["eps"] = terms_to_json(sp.eps);
    json d = json::array();
    for (const auto& comp : sp.delta) d.push_back(terms_to_json(comp));
    j["delta"] = d;
    j["example"] = sp.example;
    j["eta"] = sp.eta;
    j["C"] = sp.C;
    j["tune"] = sp.tune;
    j["tune_degree"] = sp.tune_degree;
    return j;
}

MapSpec load_map_spec(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        config_error(e.what());
    }
    json j = json::parse(text, nullptr, false, true);
    if (j.is_discarded()) config_error("cannot parse JSON in " + path);
    return map_spec_from_json(j);
}

HenonMap build_map(const MapSpec& s) {
    if (s.kind == "degenerate") {
        int deg = s.degree > 0 ? s.degree : default_degree(s.seed.m);
        const Function& f = extended_fixed_point(s.seed.radius, s.seed.f_degree, s.seed.fixed_point_degree);
        return degenerate_map(f, s.seed.m, s.seed.radius, deg);
    }
    return build_seed(s.seed);
}

RenormalizationSequence build_map_tower(const MapSpec& s, int depth, const RenormOptions& opt) {
    if (s.kind == "degenerate") {
        const Function& fs = extended_fixed_point(s.seed.radius, s.seed.f_degree, s.seed.fixed_point_degree);
        return renormalize_tower(build_map(s), depth, opt, &fs);
    }
    return build_tower(s.seed, depth, opt);
}

std::vector<double> SweepGrid::values() const {
    std::vector<double> v;
    if (count == 1) return {lo};
    for (int i = 0; i < count; ++i) v.push_back(lo + (hi - lo) * i / (count - 1));
    return v;
}

SweepGrid parse_grid(const std::string& s) {
    SweepGrid g;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &g.lo, &g.hi, &g.count, &tail) != 3)
        config_error("grid must be lo:hi:count, got '" + s + "'");
    if (!(g.lo > 0.0) || !(g.hi >= g.lo) || g.count < 1 || !std::isfinite(g.hi))
        config_error("grid needs 0 < lo <= hi and count >= 1");
    return g;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int positive_int(const json& v, const std::string& key, int min = 1) {
    int x = get_as<int>(v, key);
    if (x < min) config_error(key + " must be >= " + std::to_string(min));
    return x;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    ExperimentConfig c;
    c.text = text;
    json seed = json::object();
    std::string seed_file;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::string where = "line " + std::to_string(lineno);
        if (t.front() == '[') {
            if (t.back() != ']') config_error(where + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) config_error(where + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string full = section.empty() ? key : section + "." + key;
        if (!seen.insert(full).second) config_error(where + ": duplicate key " + full);
        json v = json::parse(trim(t.substr(eq + 1)), nullptr, false);
        if (v.is_discarded()) config_error(where + ": value of " + full + " is not valid JSON");

        if (section == "seed") {
            if (key == "file")
                seed_file = get_as<std::string>(v, full);
            else
                seed[key] = v;
        } else if (full == "tower.depth") {
            c.depth = positive_int(v, full);
        } else if (full == "tower.max_depth") {
            c.max_depth = positive_int(v, full);
        } else if (full == "checks.grid") {
            c.grid = positive_int(v, full, 2);
        } else if (full == "checks.region") {
            c.region = get_as<std::string>(v, full);
        } else if (full == "scope.kmax") {
            c.scope_kmax = positive_int(v, full, 0);
        } else if (full == "geometry.kmax") {
            c.geometry_kmax = positive_int(v, full, 0);
        } else if (full == "geometry.samples") {
            c.piece_samples = positive_int(v, full, 2);
        } else if (full == "sweep.grid") {
            c.sweep = parse_grid(get_as<std::string>(v, full));
        } else if (full == "sweep.depth") {
            c.sweep_depth = positive_int(v, full, 2);
        } else if (full == "sweep.kmax") {
            c.sweep_kmax = positive_int(v, full, 0);
        } else if (full == "run.stages") {
            c.stages = get_as<std::vector<std::string>>(v, full);
        } else if (full == "run.output") {
            c.output = get_as<std::string>(v, full);
        } else {
            config_error(where + ": unknown key " + full);
        }
    }

    if (!seed_file.empty()) {
        if (!seed.empty()) config_error("seed.file cannot be combined with inline seed keys");
        fs::path p(seed_file);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        c.map = load_map_spec(p.string());
    } else {
        c.map = map_spec_from_json(seed);
    }

    static const std::set<std::string> stage_names = {"fixed_point", "tower", "classn", "scope", "geometry", "sweep"};
    for (const std::string& s : c.stages)
        if (!stage_names.count(s)) config_error("unknown stage: " + s);
    bool tower = std::find(c.stages.begin(), c.stages.end(), "tower") != c.stages.end();
    for (const char* s : {"classn", "scope", "geometry"})
        if (!tower && std::find(c.stages.begin(), c.stages.end(), s) != c.stages.end())
            config_error(std::string("stage ") + s + " needs the tower stage");
    try {
        (void)parse_region(c.region);
    } catch (const Error& e) {
        config_error(e.what());
    }
    if (c.output.empty()) config_error("run.output must not be empty");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        config_error(e.what());
    }
    return parse_config(text, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace renorm::cli
