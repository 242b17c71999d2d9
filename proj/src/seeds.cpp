#include "renorm/seeds.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include "renorm/error.h"

namespace renorm {

int default_degree(int m) { return m <= 1 ? 16 : (m == 2 ? 10 : 8); }

int default_tune_degree(int m) { return m <= 1 ? 10 : 6; }

const RenormFixedPoint& reference_fixed_point(int degree) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<RenormFixedPoint>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[degree];
    if (!slot) slot = std::make_unique<RenormFixedPoint>(fixed_point_1d(fixed_point_initial_guess(degree)));
    return *slot;
}

const Function& extended_fixed_point(double r, int degree, int fp_degree) {
    const RenormFixedPoint& fp = reference_fixed_point(fp_degree);
    static std::mutex mu;
    static std::map<std::tuple<double, int, int>, std::unique_ptr<Function>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{r, degree, fp_degree}];
    if (!slot) slot = std::make_unique<Function>(extend_fixed_point(fp, r, degree));
    return *slot;
}

double eval_terms(const std::vector<PolyTerm>& terms, const double* w) {
    double s = 0.0;
    for (const PolyTerm& t : terms) {
        double v = t.coef;
        for (std::size_t i = 0; i < t.powers.size(); ++i)
            for (int p = 0; p < t.powers[i]; ++p) v *= w[i];
        s += v;
    }
    return s;
}

namespace {

void check_terms(const std::vector<PolyTerm>& terms, int dim, const char* what) {
    for (const PolyTerm& t : terms) {
        if (static_cast<int>(t.powers.size()) != dim) {
            std::ostringstream os;
            os << what << " term needs " << dim << " powers, got " << t.powers.size();
            throw Error(ErrorKind::ConfigError, os.str());
        }
        for (int p : t.powers)
            if (p < 0) throw Error(ErrorKind::ConfigError, std::string(what) + " term has a negative power");
    }
}

Function power_series(const std::vector<double>& c, double L) {
    int deg = std::max<int>(1, static_cast<int>(c.size()) - 1);
    return Function::project(Box::interval(-L, L), {deg}, [&](const double* t) {
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) v = v * t[0] + c[i];
        return v;
    });
}

}  // namespace

VectorFunction example_delta(int m, double r, const std::vector<int>& degrees, const std::vector<Function>& eta,
                             const std::vector<std::vector<double>>& C) {
    if (static_cast<int>(eta.size()) != m || static_cast<int>(C.size()) != m)
        throw Error(ErrorKind::ConfigError, "example family needs m eta functions and m rows of C");
    for (int j = 0; j < m; ++j) {
        if (static_cast<int>(C[j].size()) != m + 1)
            throw Error(ErrorKind::ConfigError, "each row of C needs m + 1 entries");
        double s = 0.0;
        for (int i = 1; i <= m; ++i) s += C[j][i];
        if (std::abs(C[j][0] - s) > 1e-12) {
            std::ostringstream os;
            os << "row " << j << ": C_j0 = " << C[j][0] << " but sum_i C_ji = " << s;
            throw Error(ErrorKind::ConstraintViolated, os.str());
        }
    }
    Box B = Box::cube(m + 2, r);
    VectorFunction delta;
    for (int j = 0; j < m; ++j) {
        delta.push_back(Function::project(B, degrees, [&](const double* w) {
            double t = C[j][0] * w[1];
            for (int i = 1; i <= m; ++i) t -= C[j][i] * w[1 + i];
            return eta[j](t) + w[0];
        }));
    }
    return delta;
}

HenonMap build_seed(const SeedSpec& spec, double a) {
    const int m = spec.m;
    if (m < 0) throw Error(ErrorKind::ConfigError, "m must be nonnegative");
    if (!(spec.radius > 1.0)) throw Error(ErrorKind::ConfigError, "box radius must exceed 1");
    const int dim = m + 2;
    std::vector<int> deg = spec.degrees.empty() ? std::vector<int>(dim, default_degree(m)) : spec.degrees;
    if (static_cast<int>(deg.size()) != dim) throw Error(ErrorKind::ConfigError, "degrees need m + 2 entries");
    Box B = Box::cube(dim, spec.radius);
    Box Ix = B.project_axis(0);

    Function f;
    if (spec.f_kind == "fixed_point") {
        const Function& fs = extended_fixed_point(spec.radius, spec.f_degree, spec.fixed_point_degree);
        f = fs - Function::project(Ix, {2}, [&](const double* x) { return a * x[0] * x[0]; });
    } else if (spec.f_kind == "quadratic") {
        f = Function::project(Ix, {2}, [&](const double* x) { return 1.0 - a * x[0] * x[0]; });
    } else {
        throw Error(ErrorKind::ConfigError, "unknown f kind '" + spec.f_kind + "'");
    }

    check_terms(spec.eps, dim, "eps");
    Function eps = Function::project(B, deg, [&](const double* w) { return eval_terms(spec.eps, w); });

    VectorFunction delta;
    if (spec.example) {
        std::vector<Function> eta;
        for (int j = 0; j < m && j < static_cast<int>(spec.C.size()); ++j) {
            double L = 0.0;
            for (double c : spec.C[j]) L += std::abs(c) * spec.radius;
            eta.push_back(power_series(j < static_cast<int>(spec.eta.size()) ? spec.eta[j] : std::vector<double>{},
                                       std::max(L, 1e-3)));
        }
        delta = example_delta(m, spec.radius, deg, eta, spec.C);
    } else {
        if (static_cast<int>(spec.delta.size()) != m) throw Error(ErrorKind::ConfigError, "delta needs m components");
        for (int j = 0; j < m; ++j) {
            check_terms(spec.delta[j], dim, "delta");
            delta.push_back(Function::project(B, deg, [&](const double* w) { return eval_terms(spec.delta[j], w); }));
        }
    }
    std::ostringstream prov;
    prov.precision(17);
    prov << "seed(m=" << m << ", a=" << a << ")";
    return make_henon(m, B, f, eps, delta, spec.eps_bar, prov.str());
}

RenormalizationSequence build_tower(const SeedSpec& spec, int depth, const RenormOptions& opt) {
    const Function& fs = extended_fixed_point(spec.radius, spec.f_degree, spec.fixed_point_degree);
    if (!spec.tune) return renormalize_tower(build_seed(spec), depth, opt, &fs);
    const RenormFixedPoint& fp = reference_fixed_point(spec.fixed_point_degree);
    const double sigma_star = fp.f_star(fp.f_star(0.0));
    const int tune_degree = spec.tune_degree > 0 ? spec.tune_degree : default_tune_degree(spec.m);
    int full_degree = 0;
    for (int d : spec.degrees.empty() ? std::vector<int>{default_degree(spec.m)} : spec.degrees)
        full_degree = std::max(full_degree, d);
    if (tune_degree >= full_degree) {
        auto family = [&](double a) { return build_seed(spec, a); };
        return tune_and_build(family, depth, sigma_star, opt, &fs, spec.f_param);
    }
    // search at low degree, then build the reported tower once at full degree
    SeedSpec coarse = spec;
    coarse.degrees.assign(spec.m + 2, tune_degree);
    RenormOptions coarse_opt = opt;
    coarse_opt.degrees.clear();
    auto family = [&](double a) { return build_seed(coarse, a); };
    double a = tune_and_build(family, depth, sigma_star, coarse_opt, &fs, spec.f_param).tuning_parameter;
    RenormalizationSequence seq = renormalize_tower(build_seed(spec, a), depth, opt, &fs);
    seq.tuning_parameter = a;
    return seq;
}

SeedSpec generic_seed(int m, double scale) {
    SeedSpec s;
    s.m = m;
    s.eps_bar = scale;
    const int dim = m + 2;
    auto term = [&](double c, std::vector<int> p) {
        p.resize(dim, 0);
        return PolyTerm{c, p};
    };
    s.eps = {term(scale, {0, 1}), term(0.3 * scale, {1, 1})};
    if (m >= 1) s.eps.push_back(term(0.2 * scale, {0, 0, 1}));
    for (int j = 0; j < m; ++j) {
        std::vector<PolyTerm> d = {term(scale, {1}), term(0.5 * scale, {0, 1}), term(0.2 * scale, {1, 1})};
        for (int i = 0; i < m; ++i) {
            std::vector<int> p(dim, 0);
            p[2 + i] = 1;
            d.push_back(PolyTerm{(i == j ? 0.5 : 0.1) * scale, p});
        }
        s.delta.push_back(d);
    }
    return s;
}

SeedSpec constant_jacobian_seed(double b, double c, int m) {
    SeedSpec s;
    s.m = m;
    s.eps_bar = std::max(std::abs(b), std::abs(c));
    const int dim = m + 2;
    std::vector<int> py(dim, 0);
    py[1] = 1;
    s.eps = {PolyTerm{b, py}};
    for (int j = 0; j < m; ++j) {
        std::vector<int> pz(dim, 0);
        pz[2 + j] = 1;
        s.delta.push_back({PolyTerm{c, pz}});
    }
    return s;
}

SeedSpec example_seed(int m, double s, double eps_scale) {
    SeedSpec spec;
    spec.m = m;
    spec.eps_bar = std::max(s, eps_scale);
    spec.example = true;
    const int dim = m + 2;
    std::vector<int> py(dim, 0), pxy(dim, 0);
    py[1] = 1;
    pxy[0] = pxy[1] = 1;
    spec.eps = {PolyTerm{eps_scale, py}, PolyTerm{0.3 * eps_scale, pxy}};
    for (int j = 0; j < m; ++j) {
        spec.eta.push_back({0.0, s * (1.0 + 0.2 * j), 0.15 * s});
        std::vector<double> row(m + 1, 0.0);
        for (int i = 1; i <= m; ++i) row[i] = (i == j + 1 ? 0.6 : 0.4 / std::max(1, m - 1));
        if (m == 1) row[1] = 1.0;
        double sum = 0.0;
        for (int i = 1; i <= m; ++i) sum += row[i];
        row[0] = sum;
        spec.C.push_back(row);
    }
    return spec;
}

}  // namespace renorm
