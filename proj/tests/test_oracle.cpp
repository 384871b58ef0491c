#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <asep/oracle.hpp>

using namespace asep;

TEST_CASE("ensemble indexing is a bijection") {
    CanonicalEnsemble e(4, 4, 8);
    CHECK(e.size() == 12870);
    for (std::size_t i = 0; i < e.size(); i += 97) CHECK(e.index(e.state(i)) == i);
    CHECK(e.index(e.state(e.size() - 1)) == e.size() - 1);
    CHECK_THROWS_AS(CanonicalEnsemble(6, 6, 18, 1e6), CapacityError);
}

TEST_CASE("2x2 single particle generator") {
    auto g = build_generator(2, 2, 1);
    CHECK(g.dim() == 4);
    auto s = generator_sums(g);
    CHECK(s.max_row < 1e-15);
    CHECK(s.max_col < 1e-15);
}

TEST_CASE("symmetric part is negative semidefinite, antisymmetric part is antisymmetric") {
    auto g = build_generator(3, 3, 4);
    CHECK(symmetric_part_max_eigenvalue(g) < 1e-10);
    CHECK((Eigen::MatrixXd(g.A) + Eigen::MatrixXd(g.A).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conservation law on 3x3, k=4") {
    CanonicalEnsemble e(3, 3, 4);
    auto g = build_generator(e);
    auto r = conservation_check(e, g);
    CHECK(r.states == 126);
    CHECK(r.max_physical < 1e-14);
    CHECK(r.max_stated_y_only < 1e-14);
    // the x current as written enters with the opposite sign to the y current
    CHECK(r.max_stated > 0.5);
}

TEST_CASE("resolvent value: positivity, monotonicity, large-lambda limit") {
    CanonicalEnsemble e(4, 4, 8);
    ResolventSolver s(e);
    // exact canonical second moment by enumeration
    const double norm = s.static_norm();
    CHECK(norm > 0.0);
    CHECK(norm == doctest::Approx(1.0 / 16).epsilon(0.15));
    double prev = 1e300;
    for (double lam : {0.01, 0.1, 1.0, 10.0}) {
        auto r = s.solve(lam);
        CHECK(r.residual < 1e-10);
        CHECK(r.value > 0.0);
        CHECK(r.value < prev);
        CHECK(lam * r.value <= norm * (1 + 1e-12));
        prev = r.value;
    }
    CHECK(1e4 * s.solve(1e4).value == doctest::Approx(norm).epsilon(1e-3));
}

TEST_CASE("exact current variance matches resolvent through the Laplace transform") {
    // int e^{-l t} Var J(t)/V dt = 2 R(l) / l^2 for the centred current
    CanonicalEnsemble e(3, 3, 4);
    ResolventSolver s(e);
    const double lam = 1.0;
    std::vector<double> ts;
    for (int i = 1; i <= 2000; ++i) ts.push_back(0.02 * i);
    auto var = s.current_variance(ts, 0.005);
    double integral = 0.0, prev_t = 0.0, prev_v = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        integral += 0.5 * (ts[i] - prev_t) * (std::exp(-lam * prev_t) * prev_v + std::exp(-lam * ts[i]) * var[i]);
        prev_t = ts[i];
        prev_v = var[i];
    }
    CHECK(integral == doctest::Approx(2.0 * s.solve(lam).value / (lam * lam)).epsilon(2e-3));
}

TEST_CASE("degree structure at density 1/2") {
    auto r = verify_duality_degree2(3, 3, 6, 7);
    CHECK(r.s_degree_leak < 1e-12);
    CHECK(r.a_other_leak < 1e-12);
    CHECK(r.a_same_degree < 1e-12);
    CHECK(r.m_on_xi0_xie1 < 1e-12);
    CHECK(r.adjoint_defect < 1e-12);
    CHECK(r.a_plus_mean < 1e-10);
}
