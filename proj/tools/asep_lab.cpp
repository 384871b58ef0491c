// asep_lab: batch front end. Every subcommand resolves defaults < config file < flags,
// writes a CSV plus a manifest next to it, and maps each error class to its own exit code.

#include <CLI11.hpp>

#include <asep/error.hpp>
#include <asep/hierarchy.hpp>
#include <asep/io.hpp>
#include <asep/kintegral.hpp>
#include <asep/observables.hpp>
#include <asep/oracle.hpp>
#include <asep/scaling.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace asep;

namespace {

struct ParamDef {
    std::string name, def, help;
};

class Params {
public:
    explicit Params(Config c) : c_(std::move(c)) {}
    const Config& all() const { return c_; }
    std::string str(const std::string& k) const {
        auto it = c_.find(k);
        if (it == c_.end()) throw ParameterError("missing parameter " + k);
        return it->second;
    }
    double num(const std::string& k) const {
        const auto s = str(k);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ParameterError("parameter " + k + " is not a number: " + s);
        }
    }
    long long integer(const std::string& k) const {
        const double v = num(k);
        if (v != std::floor(v)) throw ParameterError("parameter " + k + " must be an integer");
        return (long long)v;
    }
    bool flag(const std::string& k) const { return integer(k) != 0; }

private:
    Config c_;
};

struct Command {
    std::string name, help;
    std::vector<ParamDef> params;
    std::function<int(const Params&)> run;
    std::function<bool()> selftest;
};

bool report(const std::string& module, const std::string& what, bool ok) {
    std::printf("selftest %-10s %-58s %s\n", module.c_str(), what.c_str(), ok ? "PASS" : "FAIL");
    return ok;
}

void emit(const std::string& sub, const Params& p, const CsvTable& t) {
    const auto out = p.str("out");
    t.write(out);
    write_text(out + ".manifest", manifest_text(sub, p.all()));
    std::printf("wrote %s (%zu rows) and %s.manifest\n", out.c_str(), t.rows().size(), out.c_str());
}

// ---------------------------------------------------------------- simulate

SimulationSpec simulation_spec(const Params& p) {
    SimulationSpec s;
    std::tie(s.lx, s.ly) = parse_dims(p.str("L"));
    s.rho = p.num("rho");
    s.canonical_k = int(p.integer("k"));
    if (s.canonical_k >= 0) {
        // fixed k: pair covariance is -chi/(V-1), so W has mean -V chi/(V-1)
        const double v = double(s.lx) * s.ly;
        s.rho = double(s.canonical_k) / v;
        s.w_mean = -v * compressibility(s.rho) / (v - 1);
    }
    const double tmax = p.num("t-max");
    const int npts = int(p.integer("t-points"));
    if (!(tmax > 0) || npts < 2) throw ParameterError("need t-max > 0 and t-points >= 2");
    for (int i = 0; i < npts; ++i) s.t_grid.push_back(tmax * i / (npts - 1));
    s.replicas = int(p.integer("replicas"));
    s.blocks = int(std::min<long long>(p.integer("blocks"), s.replicas));
    s.seed = std::uint64_t(p.integer("seed"));
    if (p.flag("symmetric-only")) s.rates = JumpRates::symmetric_y_only();
    return s;
}

int run_simulate(const Params& p) {
    const auto spec = simulation_spec(p);
    const auto res = run_replicas(spec);
    const auto field = measure_structure_function(res);
    const auto d = diffusivity_curves(res);
    CsvTable t({"t", "sum_S", "sum_S_err", "x1_moment", "x1_moment_err", "D11_moments", "D11_moments_err",
                "D22_moments", "D22_moments_err", "v1", "v1_err", "D11_gk", "D11_gk_err"});
    const double chi = res.chi();
    int bad = 0;
    for (std::size_t k = 0; k < spec.t_grid.size(); ++k) {
        t.add(spec.t_grid[k]).add(field.sum_rule.value[k]).add(field.sum_rule.error[k]);
        t.add(field.first_x1.value[k]).add(field.first_x1.error[k]);
        t.add(d.d11_moments.value[k]).add(d.d11_moments.error[k]);
        t.add(d.d22_moments.value[k]).add(d.d22_moments.error[k]);
        t.add(d.velocity1.value[k]).add(d.velocity1.error[k]);
        t.add(d.d11_gk.value[k]).add(d.d11_gk.error[k]);
        t.end_row();
        if (spec.canonical_k < 0 && std::abs(field.sum_rule.value[k] - chi) > 5 * field.sum_rule.error[k]) ++bad;
    }
    emit("simulate", p, t);
    if (bad) {
        std::fprintf(stderr, "invariant: sum rule sum_x S = chi violated beyond 5 sigma at %d times\n", bad);
        return int(ExitCode::invariant_failure);
    }
    return 0;
}

bool selftest_simulate() {
    bool ok = true;
    SimulationSpec s;
    s.lx = s.ly = 8;
    s.t_grid = {0.0, 1.0, 2.0};
    s.replicas = 200;
    s.blocks = 10;
    s.seed = 11;
    const auto a = run_replicas(s);
    const auto f = measure_structure_function(a);
    ok &= report("simulate", "sum rule at t=0 equals chi", std::abs(f.sum_rule.value[0] - 0.25) < 5 * f.sum_rule.error[0] + 1e-12);
    const auto b = run_replicas(s);
    ok &= report("simulate", "equal seeds give identical accumulators", a.scalars.mean() == b.scalars.mean());
    const auto d = diffusivity_curves(a);
    ok &= report("simulate", "velocity vanishes at rho=1/2", std::abs(d.velocity1.value[2]) < 5 * d.velocity1.error[2]);
    s.blocks = 1;
    bool threw = false;
    try {
        validate(s);
    } catch (const ParameterError&) {
        threw = true;
    }
    ok &= report("simulate", "invalid block count is a parameter error", threw);
    return ok;
}

// ---------------------------------------------------------------- oracle

int run_oracle(const Params& p) {
    const auto [lx, ly] = parse_dims(p.str("L"));
    const int k = int(p.integer("k"));
    const auto lambdas = parse_grid(p.str("lambda"));
    CanonicalEnsemble ens(lx, ly, k);
    ResolventSolver solver(ens);
    const auto sums = generator_sums(solver.generator());
    const double chi = double(k) / (double(lx) * ly) * (1 - double(k) / (double(lx) * ly));
    CsvTable t({"lambda", "value", "residual", "states", "static_norm", "raw_mean", "laplace_rhs",
                "laplace_rhs_unfactored"});
    for (double l : lambdas) {
        const auto r = solver.solve(l, p.num("tol"));
        t.add(l).add(r.value).add(r.residual).add(r.states).add(solver.static_norm()).add(solver.current().raw_mean);
        t.add(laplace_identity_rhs(l, chi, r.value, 2.0)).add(laplace_identity_rhs(l, chi, r.value, 1.0));
        t.end_row();
        std::printf("lambda=%.6g value=%.12g residual=%.3g\n", l, r.value, r.residual);
    }
    emit("oracle", p, t);
    if (std::max(sums.max_row, sums.max_col) > 1e-12) {
        std::fprintf(stderr, "invariant: generator row/column sums %.3g\n", std::max(sums.max_row, sums.max_col));
        return int(ExitCode::invariant_failure);
    }
    return 0;
}

bool selftest_oracle() {
    bool ok = true;
    auto g = build_generator(2, 2, 1);
    const auto s = generator_sums(g);
    ok &= report("oracle", "2x2 single particle: row and column sums vanish", std::max(s.max_row, s.max_col) < 1e-15);
    CanonicalEnsemble e(3, 3, 4);
    ResolventSolver solver(e);
    const double a = solver.solve(0.1).value, b = solver.solve(1.0).value;
    ok &= report("oracle", "resolvent positive and decreasing in lambda", a > b && b > 0);
    ok &= report("oracle", "lambda * value approaches the static norm", std::abs(solver.solve(1e4).value * 1e4 / solver.static_norm() - 1) < 1e-3);
    bool threw = false;
    try {
        solver.solve(-1);
    } catch (const ParameterError&) {
        threw = true;
    }
    ok &= report("oracle", "negative lambda is a parameter error", threw);
    return ok;
}

// ---------------------------------------------------------------- resolvent

NestedMode parse_mode(const std::string& s) {
    if (s == "exact-nested") return NestedMode::exact_nested;
    if (s == "diagonal-U") return NestedMode::diagonal_U;
    if (s == "diagonal-V") return NestedMode::diagonal_V;
    throw ParameterError("mode must be exact-nested, diagonal-U or diagonal-V");
}

int run_resolvent(const Params& p) {
    const int n = int(p.integer("n"));
    const int M = int(p.integer("M"));
    const auto mode = parse_mode(p.str("mode"));
    auto lambdas = parse_grid(p.str("lambda-grid"));
    std::string grid = p.str("grid");
    if (grid == "auto") grid = (n == 3 && mode == NestedMode::exact_nested) ? "graded" : "uniform";
    if (grid != "graded" && grid != "uniform") throw ParameterError("grid must be auto, graded or uniform");
    if (grid == "graded" && (n != 3 || mode != NestedMode::exact_nested))
        throw ParameterError("graded quadrature covers the exact degree-3 truncation only");
    const bool refine = p.flag("refine");

    auto value_at = [&](double l, int m, double& residual) {
        if (grid == "graded") {
            const auto r = degree_three_graded(l, m, p.num("tol"), int(p.integer("max-iter")));
            residual = r.residual;
            return r.value;
        }
        NestedResolventSpec s;
        s.n = n;
        s.lambda = l;
        s.M = m;
        s.mode = mode;
        s.tol = p.num("tol");
        s.max_iter = int(p.integer("max-iter"));
        s.kappa = p.num("kappa");
        s.tau = p.num("tau");
        s.gamma = p.num("gamma");
        s.c = p.num("c");
        const auto r = resolvent_truncated(s);
        residual = r.residual;
        return r.value;
    };

    CsvTable t({"n", "lambda", "M", "mode", "value", "residual", "refinement_delta"});
    std::vector<std::pair<double, double>> lv;
    for (double l : lambdas) {
        double res = 0, res2 = 0;
        const double v = value_at(l, M, res);
        double delta = NAN;
        if (refine) delta = std::abs(value_at(l, 2 * M, res2) - v) / std::abs(v);
        t.add(n).add(l).add(M).add(to_string(mode) + (grid == "graded" ? "/graded" : "")).add(v).add(res).add(delta);
        t.end_row();
        lv.push_back({l, v});
        std::printf("n=%d lambda=%.6g value=%.12g residual=%.3g delta=%.3g\n", n, l, v, res, delta);
    }
    emit("resolvent", p, t);
    std::sort(lv.begin(), lv.end());
    for (std::size_t i = 1; i < lv.size(); ++i)
        if (!(lv[i - 1].second > lv[i].second)) {
            std::fprintf(stderr, "invariant: value not decreasing in lambda\n");
            return int(ExitCode::invariant_failure);
        }
    return 0;
}

bool selftest_resolvent() {
    bool ok = true;
    ok &= report("resolvent", "degree 3 value increases as lambda decreases",
                 degree_three_graded(1e-4, 32).value > degree_three_graded(1e-2, 32).value);
    double v[6];
    for (int n = 2; n <= 5; ++n) {
        NestedResolventSpec s;
        s.n = n;
        s.lambda = 1e-3;
        s.M = 4;
        s.tol = 1e-12;
        const auto r = resolvent_truncated(s);
        v[n] = r.value - r.zero_mode;
    }
    ok &= report("resolvent", "interlacing v3 <= v5 <= v4 <= v2 on a 4x4 grid", v[3] <= v[5] && v[5] <= v[4] && v[4] <= v[2]);
    UVParams up{1.0, 1.5, 1e-6};
    MomentumGrid g(4);
    DegreeN zero(g, 3);
    const auto uz = apply_U(up, zero);
    bool allzero = true;
    for (std::size_t i = 0; i < uz.size(); ++i) allzero &= uz[i] == cplx(0);
    ok &= report("resolvent", "U applied to zero is zero", allzero);
    const double thr = up.good_threshold();
    ok &= report("resolvent", "kappa=1: U continuous at the good-set boundary",
                 std::abs(u_multiplier(up, thr, thr) - u_multiplier(up, thr * (1 + 1e-13), thr)) < 1e-9 * u_multiplier(up, thr, thr));
    UVParams c0{0.0, 1.5, 1e-4};
    const double a = resolvent_diagonal_closed_form(c0, 0, 0);
    c0.lambda = 1e-8;
    const double b = resolvent_diagonal_closed_form(c0, 0, 0);
    ok &= report("resolvent", "closed form with c=0 grows like log(1/lambda)/(16 pi)",
                 std::abs((b - a) / (std::log(1e4) / (16 * kPi)) - 1) < 0.01);
    return ok;
}

// ---------------------------------------------------------------- kintegral

int run_kintegral(const Params& p) {
    const auto lambdas = parse_grid(p.str("lambda-grid"));
    const std::string regime = p.str("regime");
    CsvTable t({"kappa", "tau", "a2", "b2", "lambda", "K_value", "ratio"});
    for (double l : lambdas) {
        KIntegralSpec s;
        s.kappa = p.num("kappa");
        s.tau = p.num("tau");
        s.lambda = l;
        s.radial_cells = int(p.integer("cells"));
        s.gauss_points = int(p.integer("gauss"));
        if (regime == "edge") {
            s.a2 = s.b2 = 0.5 * std::pow(std::abs(std::log(l)), -4 * s.tau);
        } else if (regime == "origin") {
            s.a2 = s.b2 = 0;
        } else if (regime == "custom") {
            s.a2 = p.num("a2");
            s.b2 = p.num("b2");
        } else {
            throw ParameterError("regime must be origin, edge or custom");
        }
        const double k = K_integral(s);
        t.add(s.kappa).add(s.tau).add(s.a2).add(s.b2).add(l).add(k).add(K_ratio(s));
        t.end_row();
        std::printf("lambda=%.6g K=%.12g\n", l, k);
    }
    emit("kintegral", p, t);
    return 0;
}

bool selftest_kintegral() {
    bool ok = true;
    KIntegralSpec s;
    s.lambda = 1e-8;
    const double r2 = std::pow(std::abs(std::log(s.lambda)), -2 * s.tau);
    double exact = 0;
    for (int k = 0; k < 2000; ++k) {
        const double c = std::cos(2 * kPi * k / 2000), g = 1 + c * c;
        exact += 2 * kPi / 2000 * std::log(1 + r2 * g / s.lambda) / (2 * g);
    }
    ok &= report("kintegral", "kappa=0 at the origin matches the angular closed form", std::abs(K_integral(s) / exact - 1) < 1e-9);
    s.radial_cells = 16;
    bool threw = false;
    try {
        K_integral(s);
    } catch (const RefinementError&) {
        threw = true;
    }
    ok &= report("kintegral", "fewer than 32 radial cells is a refinement error", threw);
    return ok;
}

// ---------------------------------------------------------------- kappa

int run_kappa(const Params& p) {
    const int N = int(p.integer("N"));
    const auto s = kappa_schedule(N, p.flag("alternate"));
    CsvTable t({"n", "kappa", "kappa_decimal"});
    for (int n = 1; n <= s.size(); ++n) {
        t.add(n).add(s(n).str()).add(to_double(s(n)));
        t.end_row();
    }
    emit("kappa", p, t);
    const auto it = iterate_kappa(Rational(0), int(p.integer("iterate")));
    std::printf("recursion kappa_{n-1} = 1 - kappa_n/2 holds exactly: %s\n", s.recursion_holds() ? "yes" : "no");
    std::printf("after %lld iterations from 0: |kappa - 2/3| = %.3g\n", p.integer("iterate"),
                to_double(abs(it.back() - Rational(2, 3))));
    return s.recursion_holds() ? 0 : int(ExitCode::invariant_failure);
}

bool selftest_kappa() {
    bool ok = true;
    const auto s = kappa_schedule(3);
    ok &= report("kappa", "endpoints 0, 1, 1/2", s(7) == 0 && s(6) == 1 && s(5) == Rational(1, 2));
    ok &= report("kappa", "recursion 1 - kappa_2N/2 = kappa_2N-1", Rational(1) - s(6) / 2 == s(5) && s.recursion_holds());
    const auto it = iterate_kappa(Rational(1), 20);
    bool halving = true;
    for (std::size_t i = 1; i < it.size(); ++i) halving &= abs(it[i] - Rational(2, 3)) * 2 == abs(it[i - 1] - Rational(2, 3));
    ok &= report("kappa", "iteration error halves each step", halving);
    return ok;
}

// ---------------------------------------------------------------- fit

int run_fit(const Params& p) {
    const auto input = p.str("input");
    if (input.empty()) throw ParameterError("fit needs --input");
    const auto d = read_csv(input);
    const auto x = d.numbers(p.str("x"));
    const auto y = d.numbers(p.str("y"));
    const std::string kind = p.str("x-kind");
    ScalingFit f;
    if (kind == "lambda")
        f = fit_log_power(x, y, p.flag("envelope"));
    else if (kind == "abslog")
        f = fit_log_power_abslog(x, y, p.flag("envelope"));
    else if (kind == "time")
        f = fit_log_power_time(x, y);
    else
        throw ParameterError("x-kind must be lambda, abslog or time");
    CsvTable t({"points", "kappa_hat", "intercept", "loglog_exponent", "rms_residual", "kappa_first_half",
                "kappa_second_half", "non_asymptotic"});
    t.add(f.points).add(f.kappa_hat).add(f.intercept).add(f.loglog_exponent).add(f.rms_residual);
    t.add(f.kappa_first_half).add(f.kappa_second_half).add(f.non_asymptotic ? 1 : 0);
    t.end_row();
    std::printf("points   kappa_hat   first_half  second_half  non_asymptotic\n");
    std::printf("%6d   %9.5f   %9.5f   %9.5f    %s\n", f.points, f.kappa_hat, f.kappa_first_half, f.kappa_second_half,
                f.non_asymptotic ? "yes" : "no");
    emit("fit", p, t);
    const double gamma = p.num("gamma");
    if (gamma > 0 && kind == "lambda") {
        const auto e = bound_envelope(x, gamma);
        CsvTable et({"lambda", "center", "lower", "upper"});
        for (std::size_t i = 0; i < e.lambda.size(); ++i) {
            et.add(e.lambda[i]).add(e.center[i]).add(e.lower[i]).add(e.upper[i]);
            et.end_row();
        }
        et.write(p.str("out") + ".envelope.csv");
        std::printf("wrote %s.envelope.csv\n", p.str("out").c_str());
    }
    return 0;
}

bool selftest_fit() {
    bool ok = true;
    std::vector<double> lam, val, scaled;
    for (int k = 3; k <= 12; ++k) {
        lam.push_back(std::pow(10.0, -k));
        val.push_back(std::pow(k * std::log(10.0), 2.0 / 3.0));
        scaled.push_back(3 * val.back());
    }
    const auto f = fit_log_power(lam, val);
    ok &= report("fit", "synthetic |log lambda|^{2/3} gives 2/3", std::abs(f.kappa_hat - 2.0 / 3) < 0.01);
    ok &= report("fit", "scale equivariance", std::abs(fit_log_power(lam, scaled).kappa_hat - f.kappa_hat) < 1e-12);
    bool threw = false;
    try {
        fit_log_power({1e-3, 1e-4}, {1, 2});
    } catch (const RangeError&) {
        threw = true;
    }
    ok &= report("fit", "fewer than 6 decades is a range error", threw);
    const auto e = bound_envelope({1e-6}, 0.5);
    ok &= report("fit", "envelopes bracket the center curve", e.lower[0] < e.center[0] && e.center[0] < e.upper[0]);
    return ok;
}

std::vector<Command> commands() {
    const ParamDef tol{"tol", "1e-10", "solver tolerance"};
    return {
        {"simulate",
         "equilibrium replicas on a torus: S(x,t), D(t) by moments and by Green-Kubo",
         {{"L", "64", "lattice size, 64 or 64x32"},
          {"rho", "0.5", "density"},
          {"k", "-1", "fixed particle number (>= 0) instead of Bernoulli"},
          {"t-max", "10", "largest time"},
          {"t-points", "11", "number of equally spaced times from 0"},
          {"replicas", "100", "independent replicas"},
          {"blocks", "20", "jackknife blocks"},
          {"seed", "1", "master seed"},
          {"symmetric-only", "0", "1: switch off the drift (y exchange only)"}},
         run_simulate,
         selftest_simulate},
        {"oracle",
         "exact resolvent of the current on a small canonical ensemble",
         {{"L", "4x4", "lattice size"}, {"k", "8", "particle number"}, {"lambda", "0.01", "lambda or grid"}, tol},
         run_oracle,
         selftest_oracle},
        {"resolvent",
         "truncated resolvent <<w,(lambda-L_n)^-1 w>> in momentum space",
         {{"n", "3", "truncation degree (2..5)"},
          {"lambda-grid", "1e-3:1e-8:log", "lambda grid"},
          {"M", "64", "grid resolution"},
          {"mode", "exact-nested", "exact-nested | diagonal-U | diagonal-V"},
          {"grid", "auto", "auto | graded | uniform"},
          {"refine", "1", "1: also evaluate at 2M and report the relative change"},
          {"max-iter", "5000", "iteration cap"},
          {"kappa", "0.5", "U/V exponent for the diagonal modes"},
          {"tau", "1.5", "U/V good-set exponent"},
          {"gamma", "0", "U/V coupling, 0 selects |log log lambda|^-3"},
          {"c", "1", "diagonal-mode prefactor"},
          {"tol", "1e-10", "solver tolerance"}},
         run_resolvent,
         selftest_resolvent},
        {"kintegral",
         "the K integral over the |log lambda|^-tau disc",
         {{"kappa", "0", "kappa"},
          {"tau", "1.5", "tau"},
          {"regime", "origin", "origin | edge | custom"},
          {"a2", "0", "a^2 (custom regime)"},
          {"b2", "0", "b^2 (custom regime)"},
          {"lambda-grid", "1e-6,1e-9,1e-12", "lambda grid"},
          {"cells", "64", "radial cells"},
          {"gauss", "8", "Gauss points per panel"}},
         run_kintegral,
         selftest_kintegral},
        {"kappa",
         "exact kappa schedule",
         {{"N", "2", "depth"}, {"alternate", "0", "1: alternate schedule"}, {"iterate", "20", "fixed-point iterations"}},
         run_kappa,
         selftest_kappa},
        {"fit",
         "fit log(value) against log|log lambda|",
         {{"input", "", "input CSV"},
          {"x", "lambda", "abscissa column"},
          {"y", "value", "value column"},
          {"x-kind", "lambda", "lambda | abslog | time"},
          {"envelope", "0", "1: also fit a |log log log|^2 term"},
          {"gamma", "0", "> 0: write bound envelopes"}},
         run_fit,
         selftest_fit},
    };
}

int run_all_selftests(const std::vector<Command>& cmds) {
    bool ok = true;
    for (const auto& c : cmds) ok &= c.selftest();
    std::printf("selftest overall %s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : int(ExitCode::invariant_failure);
}

}  // namespace

int main(int argc, char** argv) {
    const auto cmds = commands();
    if (argc > 1 && argv[1][0] != '-') {
        const std::string first = argv[1];
        const bool known = first == "selftest" ||
                           std::any_of(cmds.begin(), cmds.end(), [&](const Command& c) { return c.name == first; });
        if (!known) {
            std::fprintf(stderr, "unknown subcommand: %s\n", first.c_str());
            return int(ExitCode::unknown_command);
        }
    }

    CLI::App app{"2D asymmetric exclusion lab"};
    app.require_subcommand(1);
    auto* st = app.add_subcommand("selftest", "run every module self-test");
    std::map<std::string, std::map<std::string, std::string>> flagvals;
    std::map<std::string, std::string> config_path, out_path;
    std::map<std::string, bool> selftest_flag;
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : cmds) {
        auto* s = app.add_subcommand(c.name, c.help);
        subs[c.name] = s;
        s->add_option("--config", config_path[c.name], "key=value file; flags override it");
        s->add_option("--out", out_path[c.name], "output CSV (manifest goes to <out>.manifest)");
        s->add_flag("--selftest", selftest_flag[c.name], "run this module's self-test");
        for (const auto& p : c.params) s->add_option("--" + p.name, flagvals[c.name][p.name], p.help + " [" + p.def + "]");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : int(ExitCode::parameter);
    }

    try {
        if (st->parsed()) return run_all_selftests(cmds);
        for (const auto& c : cmds) {
            auto* s = subs[c.name];
            if (!s->parsed()) continue;
            if (selftest_flag[c.name]) return c.selftest() ? 0 : int(ExitCode::invariant_failure);
            Config resolved;
            for (const auto& p : c.params) resolved[p.name] = p.def;
            resolved["out"] = c.name + ".csv";
            if (!config_path[c.name].empty()) {
                for (const auto& [k, v] : read_config(config_path[c.name])) {
                    if (k != "out" && !resolved.count(k)) throw ParameterError("unknown config key " + k);
                    resolved[k] = v;
                }
            }
            for (const auto& p : c.params)
                if (s->count("--" + p.name)) resolved[p.name] = flagvals[c.name][p.name];
            if (s->count("--out")) resolved["out"] = out_path[c.name];
            return c.run(Params(resolved));
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return int(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return int(ExitCode::numerical);
    }
    return 0;
}
