// Acceptance runner: one PASS/FAIL line per criterion, followed by indented detail.
// Exit status is the number of failing criteria (capped at 10).

#include <asep/hierarchy.hpp>
#include <asep/kintegral.hpp>
#include <asep/observables.hpp>
#include <asep/oracle.hpp>
#include <asep/scaling.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace asep;

namespace {

int failures = 0;

void note(const char* fmt, ...) {
    std::va_list ap;
    va_start(ap, fmt);
    std::printf("    ");
    std::vprintf(fmt, ap);
    std::printf("\n");
    va_end(ap);
}

void criterion(int id, const std::string& name, const std::function<bool()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string what;
    try {
        ok = body();
    } catch (const std::exception& e) {
        what = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!what.empty()) note("exception: %s", what.c_str());
    std::printf("criterion %2d %-44s %s (%.1f s)\n", id, name.c_str(), ok ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

}  // namespace

int main() {
    // 1. generator sums and the local conservation identity on 4x4, k=8
    criterion(1, "stationarity and conservation on 4x4 k=8", [] {
        CanonicalEnsemble e(4, 4, 8);
        const auto g = build_generator(e);
        const auto s = generator_sums(g);
        const auto c = conservation_check(e, g);
        note("states %zu, max |row sum| %.2e, max |column sum| %.2e", c.states, s.max_row, s.max_col);
        note("identity as written: max defect %.3g over all states", c.max_stated);
        note("y part of it alone: %.2e; physically signed flux identity: %.2e", c.max_stated_y_only, c.max_physical);
        return c.states == 12870 && s.max_row <= 1e-12 && s.max_col <= 1e-12 && c.max_stated <= 1e-12;
    });

    // 2. Laplace transform of t D11(t) against the exact resolvent
    criterion(2, "Laplace identity closure on 4x4 k=8", [] {
        CanonicalEnsemble e(4, 4, 8);
        ResolventSolver oracle(e);
        SimulationSpec s;
        s.lx = s.ly = 4;
        s.canonical_k = 8;
        s.rho = 0.5;
        s.structure = false;
        s.replicas = 40000;
        s.blocks = 40;
        s.seed = 7;
        s.w_mean = oracle.current().raw_mean;
        for (int i = 1; i <= 1200; ++i) s.t_grid.push_back(0.25 * i);
        const auto d = diffusivity_green_kubo(run_replicas(s));
        const double chi = compressibility(s.rho);
        bool ok = true;
        for (double lam : {0.05, 0.2, 1.0}) {
            const auto lt = laplace_transform_D(s.t_grid, d.d11_gk, lam);
            const double r = oracle.solve(lam).value;
            const double rhs = laplace_identity_rhs(lam, chi, r, 2.0);
            const double rhs1 = laplace_identity_rhs(lam, chi, r, 1.0);
            const bool pass = std::abs(lt.value - rhs) < 3 * lt.error + 0.01 * rhs;
            note("lambda %.2f: mc %.6g +- %.2g (tail %.2g), oracle %.6g [%s]; with the factor-1 form %.6g", lam, lt.value,
                 lt.error, lt.tail, rhs, pass ? "ok" : "off", rhs1);
            ok &= pass;
        }
        return ok;
    });

    // 3. Var[t^-1/2 J(t)]/(chi V) <= <<w,(1/t - L)^-1 w>>/chi
    criterion(3, "variance bounded by resolvent at 1/t", [] {
        CanonicalEnsemble e(4, 4, 8);
        ResolventSolver oracle(e);
        SimulationSpec s;
        s.lx = s.ly = 4;
        s.canonical_k = 8;
        s.rho = 0.5;
        s.structure = false;
        s.replicas = 20000;
        s.blocks = 40;
        s.seed = 8;
        s.w_mean = oracle.current().raw_mean;
        s.t_grid = {1.0, 5.0, 20.0};
        const auto d = diffusivity_green_kubo(run_replicas(s));
        const auto exact = oracle.current_variance(s.t_grid, 0.005);
        const double chi = compressibility(s.rho);
        bool ok = true;
        for (std::size_t k = 0; k < s.t_grid.size(); ++k) {
            const double t = s.t_grid[k];
            const double lhs = d.d11_gk.value[k] - 0.5, err = d.d11_gk.error[k];
            const double lhs_exact = exact[k] / t / chi;
            const double rhs = oracle.solve(1.0 / t).value / chi;
            const bool pass = lhs <= rhs + 3 * err;
            note("t %4.0f: simulated %.6f +- %.1e, exact %.6f, bound %.6f, exact/bound %.4f [%s]", t, lhs, err, lhs_exact, rhs,
                 lhs_exact / rhs, pass ? "ok" : "violated");
            ok &= pass;
        }
        return ok;
    });

    // 4. sum rules at rho=1/2 and the velocity at rho=1/4 on 64^2
    criterion(4, "sum rules and velocity on 64x64", [] {
        SimulationSpec s;
        s.lx = s.ly = 64;
        s.rho = 0.5;
        s.replicas = 1000;
        s.blocks = 20;
        s.seed = 2024;
        s.t_grid = {0.0, 1.0, 2.0, 4.0, 8.0};
        s.current = false;
        const auto f = measure_structure_function(run_replicas(s));
        bool sums = true;
        for (std::size_t k = 0; k < s.t_grid.size(); ++k) {
            const bool a = std::abs(f.sum_rule.value[k] - 0.25) <= 3 * f.sum_rule.error[k] + 1e-12;
            const bool b = std::abs(f.first_x1.value[k]) <= 3 * f.first_x1.error[k] + 1e-12;
            note("rho 1/2, t %.0f: sum S %.5f +- %.1e, sum x1 S %.4f +- %.1e [%s]", s.t_grid[k], f.sum_rule.value[k],
                 f.sum_rule.error[k], f.first_x1.value[k], f.first_x1.error[k], a && b ? "ok" : "off");
            sums &= a && b;
        }
        s.rho = 0.25;
        s.t_grid = {2.0, 6.0};
        s.seed = 2025;
        const auto d = diffusivity_from_moments(run_replicas(s));
        bool vel = true;
        for (std::size_t k = 0; k < s.t_grid.size(); ++k) {
            const double v = d.velocity1.value[k], ev = d.velocity1.error[k];
            const bool pass = std::abs(v - velocity_formula(0.25)) <= 3 * ev;
            note("rho 1/4, t %.0f: v1 %.4f +- %.1e vs %.2f [%s]; flux derivative %.2f", s.t_grid[k], v, ev, velocity_formula(0.25),
                 pass ? "ok" : "off", flux_velocity(0.25));
            vel &= pass;
        }
        return sums && vel;
    });

    // 5. degree-3 exponent over 1e-3..1e-8 with refinement control
    criterion(5, "degree-3 scaling exponent in [0.4, 0.6]", [] {
        std::vector<double> lam, val;
        bool refined = true;
        for (int i = 0; i <= 10; ++i) {
            const double l = std::pow(10.0, -3.0 - 0.5 * i);
            const auto r = degree_three_refined(l, 64);
            note("lambda %.1e: value %.8f, refined %.8f, delta %.1e", l, r.value, r.refined, r.delta);
            refined &= r.delta < 0.02;
            lam.push_back(l);
            val.push_back(r.refined);
        }
        const auto f = fit_log_power(lam, val);
        note("fitted exponent %.4f (halves %.4f, %.4f), rms residual %.1e", f.kappa_hat, f.kappa_first_half, f.kappa_second_half,
             f.rms_residual);
        return refined && f.kappa_hat >= 0.4 && f.kappa_hat <= 0.6;
    });

    // 6. K-integral ratio band
    criterion(6, "K-integral ratio band", [] {
        bool ok = true;
        const double tau = 1.5;
        for (double kappa : {0.0, 0.5, 2.0 / 3.0, 1.0}) {
            for (int regime = 0; regime < 2; ++regime) {
                std::vector<double> ratios;
                for (double l : {1e-6, 1e-9, 1e-12}) {
                    KIntegralSpec s;
                    s.kappa = kappa;
                    s.tau = tau;
                    s.lambda = l;
                    if (regime == 1) s.a2 = s.b2 = 0.5 * std::pow(abs_log(l), -4 * tau);
                    ratios.push_back(K_ratio(s));
                }
                const double r0 = ratios[0];
                const double C = 2 * std::max(r0, 1 / r0);
                double lo = r0, hi = r0;
                bool in_band = true;
                for (double r : ratios) {
                    lo = std::min(lo, r);
                    hi = std::max(hi, r);
                    in_band &= r >= 1 / C && r <= C;
                }
                const bool pass = in_band && hi / lo < 2;
                note("kappa %.3f %s: ratios %.4f %.4f %.4f, C %.3f, drift %.3f [%s]", kappa, regime ? "edge  " : "origin",
                     ratios[0], ratios[1], ratios[2], C, hi / lo, pass ? "ok" : "off");
                ok &= pass;
            }
        }
        return ok;
    });

    // 7. exact kappa schedule
    criterion(7, "kappa schedule in exact rationals", [] {
        bool ok = true;
        for (int N : {2, 5, 20}) {
            const auto s = kappa_schedule(N);
            const int top = 2 * N + 1;
            const bool head = s(top) == 0 && s(top - 1) == 1 && s(top - 2) == Rational(1, 2) &&
                              s(top - 3) == Rational(2, 3) + Rational(1, 12);
            bool rec = true;
            for (int n = 2; n <= top - 1; ++n) rec &= s(n - 1) == Rational(1) - s(n) / 2;
            note("N %2d: kappa_1 = %s, listed head %s, recursion %s", N, s(1).str().c_str(), head ? "exact" : "wrong",
                 rec ? "exact" : "broken");
            ok &= head && rec && s.recursion_holds();
        }
        const auto it = iterate_kappa(Rational(0), 20);
        const Rational err = abs(it.back() - Rational(2, 3));
        note("20 iterations from 0: |kappa - 2/3| = %s", err.str().c_str());
        return ok && err <= pow2(-20);
    });

    // 8. interlacing v3 <= v5 <= v4
    criterion(8, "interlacing v3 <= v5 <= v4 on M=64 grids", [] {
        const int M = 64;
        const double cells = std::pow(double(M), 8);
        note("M=64 requires symmetric degree-5 vectors of about %.1e complex entries; not run", cells / 120);
        note("same-grid substitute on M=8 (p=0 mode removed):");
        for (double l : {1e-3, 1e-5}) {
            double v[6];
            for (int n = 3; n <= 5; ++n) {
                NestedResolventSpec s;
                s.n = n;
                s.lambda = l;
                s.M = 8;
                s.tol = 1e-12;
                const auto r = resolvent_truncated(s);
                v[n] = r.value - r.zero_mode;
            }
            note("lambda %.0e: v3 %.10f  v5 %.10f  v4 %.10f, margins %.2e %.2e [%s]", l, v[3], v[5], v[4], v[5] - v[3],
                 v[4] - v[5], (v[5] - v[3] > 1e-10 && v[4] - v[5] > 1e-10) ? "ordered" : "not ordered");
        }
        return false;
    });

    // 9. sandwich of the main estimate at degree 2
    criterion(9, "main-estimate sandwich, 100 functions", [] {
        const auto r = verify_main_estimate_sandwich(1.0, 1.5, {1e-6, 1e-9}, 100, 50, 64);
        note("kappa %.2f -> kappa~ %.2f, M %d, fitted C %.4g, functions with <F,VF> > 0: %d", r.kappa, r.kappa_tilde, r.M,
               r.fitted_C, r.lower_nonvacuous);
        for (const auto& p : r.per_lambda)
            note("lambda %.0e: gamma %.3g, worst upper ratio %.4g, worst lower ratio %.4g", p.lambda, p.gamma,
                 p.worst_upper_ratio, p.worst_lower_ratio);
        note("violations: upper %d, lower %d", r.upper_violations, r.lower_violations);
        if (r.lower_nonvacuous == 0)
            note("the V good set holds only p=0 on this grid, so the lower inequality is vacuous here");
        return r.upper_violations == 0 && r.lower_violations == 0;
    });

    // 10. drift of the local exponent with depth; reported only
    criterion(10, "exponent drift with depth (report)", [] {
        const std::vector<double> lams{1e-5, 1e-6, 1e-7};
        note("local exponent d log v / d log|log lambda| around 1e-6, M=8, p=0 mode removed");
        for (int n = 3; n <= 5; ++n) {
            std::vector<double> v;
            for (double l : lams) {
                NestedResolventSpec s;
                s.n = n;
                s.lambda = l;
                s.M = 8;
                s.tol = 1e-12;
                const auto r = resolvent_truncated(s);
                v.push_back(r.value - r.zero_mode);
            }
            const double k = std::log(v[2] / v[0]) / std::log(abs_log(lams[2]) / abs_log(lams[0]));
            note("n %d: v(1e-5) %.8f  v(1e-6) %.8f  v(1e-7) %.8f  local exponent %.3e", n, v[0], v[1], v[2], k);
        }
        note("the 8x8 grid cuts the logarithm at momentum 2pi/8, so these values saturate; no asymptote is asserted");
        return true;
    });

    std::printf("acceptance: %d of 10 criteria failing\n", failures);
    return std::min(failures, 10);
}
