#pragma once

#include <cmath>
#include <vector>

#include "error.hpp"
#include "fourier.hpp"
#include "quadrature.hpp"

namespace asep {

struct KIntegralSpec {
    double kappa = 0;
    double tau = 1.5;
    double a2 = 0;  // a^2
    double b2 = 0;  // b^2
    double lambda = 1e-6;
    // if > 0, overrides lambda by exp(-abs_log_lambda); evaluated in extended precision so
    // lambda far below the double range is reachable
    double abs_log_lambda = 0;
    int radial_cells = 64;  // geometric panels inside the disc
    int gauss_points = 8;   // per panel, radial and angular

    double log_lambda_abs() const { return abs_log_lambda > 0 ? abs_log_lambda : std::abs(std::log(lambda)); }
};

// int_{x^2+y^2 <= |log lambda|^{-2 tau}} dx dy
//     [lambda + b^2 + y^2 + (a^2 + x^2)(1 + |log(lambda + a^2 + b^2 + x^2 + y^2)|^kappa)]^{-1}
inline double K_integral(const KIntegralSpec& s) {
    using real = long double;
    if (s.abs_log_lambda <= 0 && !(s.lambda > 0 && s.lambda < 1)) throw ParameterError("lambda must lie in (0,1)");
    if (!(s.kappa >= 0 && s.kappa <= 1)) throw ParameterError("kappa must lie in [0,1]");
    if (!(s.tau > 1)) throw ParameterError("tau must exceed 1");
    if (s.a2 < 0 || s.b2 < 0) throw ParameterError("a^2, b^2 must be nonnegative");
    if (s.radial_cells < 32) throw RefinementError("fewer than 32 radial cells inside the disc");
    const real ell = s.log_lambda_abs();
    const real lambda = std::exp(-ell);
    if (!(lambda > 0)) throw RangeError("lambda underflows extended precision");
    const real a2 = s.a2, b2 = s.b2;
    const real big_r = std::pow(ell, real(-s.tau));
    const real scale = std::sqrt(lambda + a2 + b2);
    const real r0 = std::min(real(1e-4) * scale, real(1e-3) * big_r);

    // radial: [0, r0] plus geometric cells r0 -> R; nodes are mapped from double rules
    const auto& g = gauss_legendre(s.gauss_points);
    std::vector<real> rr, rw;
    auto panel = [&](real a, real b) {
        const real h = (b - a) / 2, c = (a + b) / 2;
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            rr.push_back(c + h * real(g.x[k]));
            rw.push_back(h * real(g.w[k]));
        }
    };
    panel(0, r0);
    // at least the requested cells, and never wider than a factor 2
    const int cells = std::max(s.radial_cells, int(std::ceil(std::log2(big_r / r0))));
    const real ratio = std::pow(big_r / r0, real(1) / cells);
    real lo = r0;
    for (int k = 0; k < cells; ++k) {
        const real hi = k + 1 == cells ? big_r : lo * ratio;
        panel(lo, hi);
        lo = hi;
    }
    // angle over the first quadrant, graded towards theta = pi/2 where the x-weight is small
    std::vector<double> th, tw;
    double a = 0, b = kPi / 4;
    for (int k = 0; k < 12; ++k) {
        gauss_panel(a, b, s.gauss_points, th, tw);
        a = b;
        b = kPi / 2 - (kPi / 2 - b) / 2;
    }
    gauss_panel(a, kPi / 2, s.gauss_points, th, tw);

    std::vector<real> weight(rr.size());
    for (std::size_t i = 0; i < rr.size(); ++i) {
        const real l = std::abs(std::log(lambda + a2 + b2 + rr[i] * rr[i]));
        weight[i] = 1 + std::pow(l, real(s.kappa));
    }
    real sum = 0;
    for (std::size_t j = 0; j < th.size(); ++j) {
        const real c = std::cos(th[j]), sn = std::sin(th[j]);
        real acc = 0;
        for (std::size_t i = 0; i < rr.size(); ++i) {
            const real x = rr[i] * c, y = rr[i] * sn;
            acc += rw[i] * rr[i] / (lambda + b2 + y * y + (a2 + x * x) * weight[i]);
        }
        sum += tw[j] * acc;
    }
    return double(4 * sum);
}

// K / |log(lambda + a^2 + b^2)|^{1 - kappa/2}
inline double K_ratio(const KIntegralSpec& s) {
    const long double lambda = std::exp(-(long double)s.log_lambda_abs());
    const long double l = std::abs(std::log(lambda + s.a2 + s.b2));
    return K_integral(s) / double(std::pow(l, 1 - (long double)s.kappa / 2));
}

// Restricted split integral: merged momentum q = p_n + p_{n+1} with p_n = a, over the region
// |p_n - p_{n+1}|^2 <= |log lambda|^{2m} (|q|^2 + omega0), of
//   |e^{i a_r} - e^{-i (q-a)_r}|^2 / (lambda + omega0 + omega(a) + omega(q - a)),
// normalized dp. The numerator equals omega_r(q); the value is returned divided by it.
inline double restricted_split_integral(double lambda, double qr, double qs, double omega0 = 0, double m = 1,
                                        int cells = 48, int gauss_points = 8) {
    if (!(lambda > 0 && lambda < 1)) throw ParameterError("lambda must lie in (0,1)");
    const double q2 = qr * qr + qs * qs;
    if (!(q2 > 0)) throw ParameterError("merged momentum must be nonzero");
    const double umax = std::pow(std::abs(std::log(lambda)), m) * std::sqrt(q2 + omega0);
    if (umax > kPi) throw RangeError("restricted region exceeds the torus");
    const double r0 = 1e-3 * std::sqrt(q2);
    std::vector<double> rr, rw, th, tw;
    gauss_panel(0, r0, gauss_points, rr, rw);
    const double ratio = std::pow(umax / r0, 1.0 / cells);
    double lo = r0;
    for (int k = 0; k < cells; ++k) {
        const double hi = k + 1 == cells ? umax : lo * ratio;
        gauss_panel(lo, hi, gauss_points, rr, rw);
        lo = hi;
    }
    for (int k = 0; k < 16; ++k) gauss_panel(2 * kPi * k / 16, 2 * kPi * (k + 1) / 16, gauss_points, th, tw);
    double sum = 0;
    for (std::size_t j = 0; j < th.size(); ++j)
        for (std::size_t i = 0; i < rr.size(); ++i) {
            // u = 2a - q; a = (q + u)/2, q - a = (q - u)/2, da = du / 4
            const double ux = rr[i] * std::cos(th[j]), uy = rr[i] * std::sin(th[j]);
            const double den = lambda + omega0 + omega(0.5 * (qr + ux), 0.5 * (qs + uy)) +
                               omega(0.5 * (qr - ux), 0.5 * (qs - uy));
            sum += tw[j] * rw[i] * rr[i] / den;
        }
    return sum / 4 / (4 * kPi * kPi);
}

}  // namespace asep
