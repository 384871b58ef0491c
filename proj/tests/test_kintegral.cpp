#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <asep/kintegral.hpp>

#include <cstdio>

using namespace asep;

TEST_CASE("kappa = 0 at the origin has a closed form") {
    for (double lambda : {1e-6, 1e-12}) {
        KIntegralSpec s;
        s.lambda = lambda;
        const double r2 = std::pow(std::abs(std::log(lambda)), -2 * s.tau);
        // kappa = 0 turns the x-weight into 2: int dtheta log(1 + R^2 g / lambda) / (2 g), g = 1 + cos^2
        double exact = 0;
        const int nt = 4000;
        for (int k = 0; k < nt; ++k) {
            const double c = std::cos(2 * kPi * k / nt), g = 1 + c * c;
            exact += 2 * kPi / nt * std::log(1 + r2 * g / lambda) / (2 * g);
        }
        CHECK(K_integral(s) == doctest::Approx(exact).epsilon(1e-10));
        // leading behaviour pi/sqrt(2) |log lambda| up to log log corrections
        CHECK(std::abs(K_integral(s) - kPi / std::sqrt(2.0) * std::abs(std::log(lambda))) <
              2 * kPi * 1.5 * std::log(std::abs(std::log(lambda))));
    }
}

TEST_CASE("resolution and parameter errors") {
    KIntegralSpec s;
    s.radial_cells = 16;
    CHECK_THROWS_AS(K_integral(s), RefinementError);
    s.radial_cells = 64;
    s.kappa = 2;
    CHECK_THROWS_AS(K_integral(s), ParameterError);
    s.kappa = 0.5;
    s.tau = 1;
    CHECK_THROWS_AS(K_integral(s), ParameterError);
}

TEST_CASE("refinement stability") {
    KIntegralSpec s;
    s.kappa = 2.0 / 3;
    s.lambda = 1e-9;
    const double a = K_integral(s);
    s.radial_cells = 128;
    s.gauss_points = 12;
    CHECK(K_integral(s) == doctest::Approx(a).epsilon(1e-8));
}

TEST_CASE("ratio drift across lambda stays within 2x") {
    for (double kappa : {0.0, 0.5, 2.0 / 3, 1.0})
        for (int regime = 0; regime < 2; ++regime) {
            double lo = 1e300, hi = 0;
            for (double lambda : {1e-6, 1e-9, 1e-12}) {
                KIntegralSpec s;
                s.kappa = kappa;
                s.lambda = lambda;
                if (regime) s.a2 = s.b2 = 0.5 * std::pow(std::abs(std::log(lambda)), -4 * s.tau);
                const double r = K_ratio(s);
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
            CHECK(hi / lo < 2);
        }
}

TEST_CASE("restricted split integral grows like log log, not log") {
    std::vector<double> ratio_ll, ratio_l;
    for (double lambda : {1e-4, 1e-8, 1e-12, 1e-16}) {
        const double v = restricted_split_integral(lambda, std::sqrt(lambda), 0);
        ratio_ll.push_back(v / std::log(std::abs(std::log(lambda))));
        ratio_l.push_back(v / std::abs(std::log(lambda)));
        std::printf("lambda=%g split integral %.6f\n", lambda, v);
    }
    CHECK(ratio_ll.back() / ratio_ll.front() < 1.25);
    CHECK(ratio_ll.back() / ratio_ll.front() > 0.8);
    CHECK(ratio_l.front() / ratio_l.back() > 2);
    CHECK_THROWS_AS(restricted_split_integral(1e-2, 1.0, 0), RangeError);
}
