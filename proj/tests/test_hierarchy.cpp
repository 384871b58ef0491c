#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <asep/hierarchy.hpp>

#include <cstdio>

using namespace asep;

TEST_CASE("U and V multipliers") {
    UVParams p{1.0, 1.5, 1e-6};
    const double thr = p.good_threshold();
    // kappa = 1: both U branches coincide at the boundary
    CHECK(u_multiplier(p, thr, 0.3 * thr) == doctest::Approx(u_multiplier(p, thr * (1 + 1e-12), 0.3 * thr)).epsilon(1e-9));
    CHECK(v_multiplier(p, 0.5 * thr, 0.2 * thr) == u_multiplier(p, 0.5 * thr, 0.2 * thr));
    CHECK(v_multiplier(p, 10 * thr, 0.2) < 0);
    CHECK(u_multiplier(p, 10 * thr, 0.2) > 0);
    CHECK_THROWS_AS((UVParams{1.2, 1.5, 1e-6}.validate()), ParameterError);
    CHECK_THROWS_AS((UVParams{0.5, 1.0, 1e-6}.validate()), ParameterError);

    MomentumGrid g(6);
    DegreeN zero(g, 3);
    auto uz = apply_U(p, zero);
    for (std::size_t i = 0; i < uz.size(); ++i) CHECK(uz[i] == cplx(0));

    RngStream rng(4, 0);
    DegreeN f(g, 3);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    f.symmetrize();
    CHECK(inner_product(f, apply_U(p, f)).real() >= 0);

    // omega + gamma V >= 0 pointwise for gamma = |loglog|^-3
    const double gam = std::pow(loglog(p.lambda), -3.0);
    double worst = 1e300;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto t = f.tuple(i);
        double so = 0, sr = 0;
        for (int k = 0; k < 3; ++k) {
            so += g.omega(t[k]);
            sr += g.omega_r(t[k]);
        }
        worst = std::min(worst, so + gam * v_multiplier(p, so, sr));
    }
    CHECK(worst >= 0);
}

TEST_CASE("nested level operator is bounded below by lambda") {
    UniformHierarchy h(8, 1e-3);
    RngStream rng(5, 0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> f(h.size(3));
        for (auto& v : f) v = rng.uniform() - 0.5;
        DegreeN sym(h.grid(), 3);
        for (std::size_t i = 0; i < f.size(); ++i) sym[i] = f[i];
        sym.symmetrize();
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = sym[i].real();
        std::vector<double> up, back;
        h.kplus(3, f, up, true);
        h.kplus_t(4, up, back);
        int t[8];
        double form = 0, norm = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            h.decode(3, i, t);
            form += f[i] * (h.denominator(3, t) * f[i] + back[i]);
            norm += f[i] * f[i];
        }
        CHECK(form >= h.lambda() * norm * (1 - 1e-12));
    }
}

TEST_CASE("uniform and graded degree-3 values agree") {
    NestedResolventSpec s;
    s.n = 3;
    s.lambda = 1.0;
    s.M = 32;
    const double uni = resolvent_truncated(s).value;
    const double gr = degree_three_graded(1.0, 64).value;
    std::printf("lambda=1: uniform %.10f graded %.10f\n", uni, gr);
    CHECK(std::abs(uni - gr) < 1e-6 * gr);
}

TEST_CASE("monotone in lambda and parameter errors") {
    NestedResolventSpec s;
    s.n = 3;
    s.M = 16;
    s.lambda = 1e-2;
    const double a = resolvent_truncated(s).value;
    s.lambda = 1e-4;
    const double b = resolvent_truncated(s).value;
    CHECK(b > a);
    CHECK(degree_three_graded(1e-4, 32).value > degree_three_graded(1e-2, 32).value);
    s.lambda = 0;
    CHECK_THROWS_AS(resolvent_truncated(s), ParameterError);
    s.lambda = 1e-3;
    s.n = 6;
    CHECK_THROWS_AS(resolvent_truncated(s), CapacityError);
    s.n = 4;
    s.max_iter = 1;
    s.tol = 1e-14;
    CHECK_THROWS_AS(resolvent_truncated(s), NumericalError);
}

TEST_CASE("interlacing on a small common grid") {
    for (double lambda : {1e-3, 1e-5}) {
        double v[6];
        for (int n = 2; n <= 5; ++n) {
            NestedResolventSpec s;
            s.n = n;
            s.lambda = lambda;
            s.M = 6;
            s.tol = 1e-12;
            const auto r = resolvent_truncated(s);
            v[n] = r.value - r.zero_mode;
        }
        std::printf("lambda=%g: v2 %.12g v3 %.12g v4 %.12g v5 %.12g\n", lambda, v[2], v[3], v[4], v[5]);
        CHECK(v[3] < v[5]);
        CHECK(v[5] < v[4]);
        CHECK(v[4] < v[2]);
    }
}

TEST_CASE("diagonal modes bracket the degree-3 value") {
    for (double lambda : {1e-3, 1e-6}) {
        NestedResolventSpec s;
        s.n = 3;
        s.lambda = lambda;
        s.M = 16;
        const double exact = resolvent_truncated(s).value;
        s.mode = NestedMode::diagonal_U;
        const double vu = resolvent_truncated(s).value;
        s.mode = NestedMode::diagonal_V;
        const double vv = resolvent_truncated(s).value;
        CHECK(vu <= exact);
        CHECK(exact <= vv);
        s.n = 4;
        CHECK_THROWS_AS(resolvent_truncated(s), ParameterError);
    }
}

TEST_CASE("closed-form degree-2 integral") {
    UVParams p{0.0, 1.5, 1e-4};
    const double a = resolvent_diagonal_closed_form(p, 0, 0);
    p.lambda = 1e-8;
    const double b = resolvent_diagonal_closed_form(p, 0, 0);
    // trivial bound: 1/2 int 1/(lambda + 2 omega) grows like log(1/lambda) / (16 pi)
    CHECK(b - a == doctest::Approx(std::log(1e4) / (16 * kPi)).epsilon(0.01));
    UVParams q{0.5, 1.5, 1e-6};
    const double c1 = resolvent_diagonal_closed_form(q, 0.1, 2);
    const double c2 = resolvent_diagonal_closed_form(q, 1.0, 2);
    CHECK(c2 < c1);
}

TEST_CASE("main-estimate sandwich, small grid") {
    auto rep = verify_main_estimate_sandwich(1.0, 1.5, {1e-6}, 20, 10, 16);
    CHECK(rep.kappa_tilde == 0.5);
    CHECK(rep.upper_violations == 0);
    CHECK(rep.lower_violations == 0);
    CHECK(rep.per_lambda.size() == 1);
    CHECK(rep.per_lambda[0].worst_upper_ratio > 0);
}
