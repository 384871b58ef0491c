#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <asep/kintegral.hpp>
#include <asep/scaling.hpp>

using namespace asep;

TEST_CASE("kappa schedule values") {
    auto s = kappa_schedule(3);
    CHECK(s.size() == 7);
    CHECK(s(7) == Rational(0));
    CHECK(s(6) == Rational(1));
    CHECK(s(5) == Rational(1, 2));
    CHECK(s(4) == Rational(2, 3) + Rational(1, 12));
    CHECK(s.recursion_holds());
    CHECK_THROWS_AS(kappa_schedule(0), ParameterError);
    CHECK_THROWS_AS(s(8), ParameterError);
}

TEST_CASE("alternate schedule") {
    auto s = kappa_schedule(4, true);
    CHECK(s.size() == 8);
    CHECK(s(8) == Rational(0));
    CHECK(s(7) == Rational(1));
    CHECK(s(6) == Rational(1, 2));
    CHECK(s(5) == Rational(2, 3) + Rational(1, 12));
    CHECK(s(2) == Rational(2, 3) - pow2(-2 * 4 + 3) / 3);
    CHECK(s.recursion_holds());
}

TEST_CASE("exact up to N = 64") {
    auto s = kappa_schedule(64);
    CHECK(s.recursion_holds());
    CHECK(s(1) == Rational(2, 3) - pow2(-127) / 3);
}

TEST_CASE("iteration contracts to 2/3") {
    auto seq = iterate_kappa(Rational(0), 20);
    for (std::size_t i = 1; i < seq.size(); ++i) {
        const Rational e0 = abs(seq[i - 1] - Rational(2, 3)), e1 = abs(seq[i] - Rational(2, 3));
        CHECK(e1 * 2 == e0);
    }
    CHECK(abs(seq.back() - Rational(2, 3)) <= pow2(-20));
}

TEST_CASE("fit on synthetic data") {
    std::vector<double> lam, val, scaled;
    for (int k = 3; k <= 30; ++k) {
        lam.push_back(std::pow(10.0, -k));
        val.push_back(std::pow(k * std::log(10.0), 2.0 / 3.0));
        scaled.push_back(7.5 * val.back());
    }
    auto f = fit_log_power(lam, val);
    CHECK(f.kappa_hat == doctest::Approx(2.0 / 3).epsilon(1e-10));
    auto g = fit_log_power(lam, scaled);
    CHECK(std::abs(g.kappa_hat - f.kappa_hat) < 1e-12);
    CHECK(g.intercept - f.intercept == doctest::Approx(std::log(7.5)));
    CHECK_FALSE(f.non_asymptotic);
    CHECK_THROWS_AS(fit_log_power({1e-3, 1e-4, 1e-5}, {1, 2, 3}), RangeError);
}

TEST_CASE("K-integral fixed point gives exponent 2/3") {
    // the asymptotic regime needs lambda far below the double range: 1e-400 .. 1e-4000
    std::vector<double> ell, val;
    for (int k = 400; k <= 4000; k += 400) {
        KIntegralSpec s;
        s.kappa = 2.0 / 3;
        s.abs_log_lambda = k * std::log(10.0);
        ell.push_back(s.abs_log_lambda);
        val.push_back(K_integral(s));
    }
    auto f = fit_log_power_abslog(ell, val);
    MESSAGE("K fit exponent " << f.kappa_hat << " halves " << f.kappa_first_half << " " << f.kappa_second_half);
    CHECK(std::abs(f.kappa_hat - 2.0 / 3) < 0.05);
}

TEST_CASE("bound envelope") {
    auto e = bound_envelope({1e-6, 1e-9}, 0.3);
    for (std::size_t i = 0; i < e.lambda.size(); ++i) {
        CHECK(e.lower[i] < e.center[i]);
        CHECK(e.center[i] < e.upper[i]);
    }
    const double lll = std::log(std::log(std::abs(std::log(1e-6))));
    CHECK(e.upper[0] / e.lower[0] == doctest::Approx(std::exp(2 * 0.3 * lll * lll)));
    CHECK_THROWS_AS(bound_envelope({1e-6}, 0), ParameterError);
}
