#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <asep/fourier.hpp>
#include <asep/rng.hpp>

using namespace asep;

namespace {

DegreeN random_symmetric(const MomentumGrid& g, int n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    DegreeN f(g, n);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    f.symmetrize();
    return f;
}

double max_diff(const DegreeN& a, const DegreeN& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("grid arithmetic") {
    MomentumGrid g(6);
    CHECK(g.points() == 36);
    for (int p = 0; p < g.points(); ++p) {
        CHECK(g.add(p, g.neg(p)) == 0);
        CHECK(std::abs(reduce_angle(g.r(p) + g.r(g.neg(p)))) < 1e-12);
    }
    CHECK(g.omega(0) == 0.0);
    CHECK_THROWS_AS(MomentumGrid(5), ParameterError);
}

TEST_CASE("symmetrize is a projection") {
    MomentumGrid g(4);
    auto f = random_symmetric(g, 3, 1);
    auto h = f;
    h.symmetrize();
    CHECK(max_diff(f, h) < 1e-14);
    const auto t = f.tuple(7);
    std::array<int, DegreeN::kMaxDegree + 1> u{t[2], t[0], t[1]};
    CHECK(std::abs(f.at(t) - f.at(u)) < 1e-14);
}

TEST_CASE("raising kernel: symmetric form equals symmetrized raw form") {
    MomentumGrid g(6);
    for (int n : {2, 3}) {
        auto f = random_symmetric(g, n, 10 + n);
        auto raw = apply_A_plus_raw(f);
        raw.symmetrize();
        CHECK(max_diff(raw, apply_A_plus(f)) < 1e-12);
    }
}

TEST_CASE("lowering operator is minus the adjoint of raising") {
    MomentumGrid g(6);
    for (int n : {2, 3}) {
        auto f = random_symmetric(g, n, 20 + n);
        auto h = random_symmetric(g, n + 1, 30 + n);
        const cplx lhs = inner_product(h, apply_A_plus(f));
        const cplx rhs = -inner_product(apply_A_minus(h), f);
        CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + std::abs(lhs)));
    }
}

TEST_CASE("raising preserves zero total momentum mean") {
    MomentumGrid g(8);
    auto f = random_symmetric(g, 2, 5);
    auto h = apply_A_plus(f);
    CHECK(std::abs(h[0]) == 0.0);  // the all-zero tuple
}

TEST_CASE("Parseval at degree two") {
    const int m = 8;
    MomentumGrid g(m);
    RngStream rng(3, 0);
    // even real-space kernel f(z) with small support on the m x m torus
    std::vector<double> fz(m * m, 0.0);
    for (int dx = -2; dx <= 2; ++dx)
        for (int dy = -2; dy <= 2; ++dy) {
            if (dx < 0 || (dx == 0 && dy < 0)) continue;
            const double v = rng.uniform() - 0.5;
            fz[((dx + m) % m) + m * ((dy + m) % m)] = v;
            fz[((-dx + m) % m) + m * ((-dy + m) % m)] = v;
        }
    DegreeN f(g, 2);
    double real_norm = 0;
    for (int z = 0; z < m * m; ++z) real_norm += 0.5 * fz[z] * fz[z];
    for (int p = 0; p < g.points(); ++p) {
        cplx acc = 0;
        for (int z = 0; z < m * m; ++z) {
            const int zx = z % m, zy = z / m;
            acc += fz[z] * std::exp(cplx(0, 2 * kPi * (double(zx) * (p % m) + double(zy) * (p / m)) / m));
        }
        f[p] = acc;
    }
    CHECK(std::abs(inner_product(f, f).real() - real_norm) < 1e-12);
}

TEST_CASE("current in momentum space") {
    MomentumGrid g(16);
    DegreeN raw(g, 2), sym(g, 2);
    for (int p = 0; p < g.points(); ++p) {
        raw[p] = std::exp(cplx(0, -g.r(g.neg(p))));
        sym[p] = std::cos(g.r(p));
    }
    CHECK(std::abs(inner_product(raw, raw).real() - 0.5) < 1e-12);
    CHECK(std::abs(inner_product(sym, sym).real() - 0.25) < 1e-12);
}

TEST_CASE("term count and capacity") {
    CHECK(pair_term_count(2) == 9);
    CHECK(pair_term_count(4) == 100);
    MomentumGrid g(2);
    CHECK_THROWS_AS(DegreeN(g, 6), CapacityError);
    DegreeN f(g, 5);
    CHECK_THROWS_AS(apply_A_plus(f), CapacityError);
}
