#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"

namespace asep {

using Rational = boost::multiprecision::cpp_rational;

struct KappaSchedule {
    int N = 1;
    bool alternate = false;
    std::vector<Rational> values;  // values[i] = kappa_{i+1}

    int size() const { return int(values.size()); }
    const Rational& operator()(int n) const {
        if (n < 1 || n > size()) throw ParameterError("kappa index out of range");
        return values[std::size_t(n - 1)];
    }
    // kappa_{n-1} = 1 - kappa_n / 2 for every adjacent pair, exactly
    bool recursion_holds() const {
        for (int n = 2; n <= size(); ++n)
            if ((*this)(n - 1) != Rational(1) - (*this)(n) / 2) return false;
        return true;
    }
};

inline Rational pow2(int e) {
    Rational r(1);
    const Rational two(2);
    for (int i = 0; i < std::abs(e); ++i) r *= two;
    return e >= 0 ? r : Rational(1) / r;
}

// kappa_n = 2/3 + (-1)^n 2^{-2N+n} / 3, n = 1..2N+1
// alternate: kappa_n = 2/3 - (-1)^n 2^{-2N+n+1} / 3, n = 1..2N
inline KappaSchedule kappa_schedule(int N, bool alternate = false) {
    if (N < 1) throw ParameterError("N must be >= 1");
    KappaSchedule s;
    s.N = N;
    s.alternate = alternate;
    const Rational two_thirds(2, 3);
    const int last = alternate ? 2 * N : 2 * N + 1;
    for (int n = 1; n <= last; ++n) {
        const Rational sign = n % 2 == 0 ? Rational(1) : Rational(-1);
        if (!alternate)
            s.values.push_back(two_thirds + sign * pow2(-2 * N + n) / 3);
        else
            s.values.push_back(two_thirds - sign * pow2(-2 * N + n + 1) / 3);
    }
    return s;
}

// kappa <- 1 - kappa/2, returning the sequence including the start
inline std::vector<Rational> iterate_kappa(const Rational& start, int steps) {
    std::vector<Rational> out{start};
    for (int i = 0; i < steps; ++i) out.push_back(Rational(1) - out.back() / 2);
    return out;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

struct ScalingFit {
    double kappa_hat = 0;
    double intercept = 0;
    double loglog_exponent = 0;  // coefficient of |log log log|^2 when the envelope term is fitted
    double rms_residual = 0;
    std::vector<double> residuals;
    double kappa_first_half = 0, kappa_second_half = 0;
    bool non_asymptotic = false;  // window halves disagree by more than 0.1
    int points = 0;
};

namespace detail {

// least squares y ~ X b (columns of X given), returns b
inline std::vector<double> lstsq(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
    const std::size_t p = cols.size(), n = y.size();
    std::vector<double> a(p * p, 0.0), rhs(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < n; ++k) a[i * p + j] += cols[i][k] * cols[j][k];
        for (std::size_t k = 0; k < n; ++k) rhs[i] += cols[i][k] * y[k];
    }
    // Gaussian elimination with partial pivoting (p <= 3)
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(a[r * p + c]) > std::abs(a[piv * p + c])) piv = r;
        if (std::abs(a[piv * p + c]) < 1e-300) throw NumericalError("singular fit", 0);
        for (std::size_t j = 0; j < p; ++j) std::swap(a[c * p + j], a[piv * p + j]);
        std::swap(rhs[c], rhs[piv]);
        for (std::size_t r = c + 1; r < p; ++r) {
            const double f = a[r * p + c] / a[c * p + c];
            for (std::size_t j = c; j < p; ++j) a[r * p + j] -= f * a[c * p + j];
            rhs[r] -= f * rhs[c];
        }
    }
    std::vector<double> b(p);
    for (std::size_t c = p; c-- > 0;) {
        double s = rhs[c];
        for (std::size_t j = c + 1; j < p; ++j) s -= a[c * p + j] * b[j];
        b[c] = s / a[c * p + c];
    }
    return b;
}

inline ScalingFit fit_abscissa(const std::vector<double>& x, const std::vector<double>& values,
                               const std::vector<double>& lll, bool envelope) {
    ScalingFit f;
    f.points = int(x.size());
    std::vector<double> y;
    for (double v : values) {
        if (!(v > 0)) throw ParameterError("values must be positive");
        y.push_back(std::log(v));
    }
    std::vector<double> ones(x.size(), 1.0), env;
    for (double l : lll) env.push_back(l * l);
    std::vector<std::vector<double>> cols{ones, x};
    if (envelope) cols.push_back(env);
    const auto b = lstsq(cols, y);
    f.intercept = b[0];
    f.kappa_hat = b[1];
    if (envelope) f.loglog_exponent = b[2];
    double ss = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - b[0] - b[1] * x[k] - (envelope ? b[2] * env[k] : 0.0);
        f.residuals.push_back(r);
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / double(x.size()));
    // window halves (ordered by abscissa), two-parameter fits
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return x[a] < x[c]; });
    const std::size_t half = (x.size() + 1) / 2;
    auto slope = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> xs, ys, os;
        for (std::size_t i = lo; i < hi; ++i) {
            xs.push_back(x[order[i]]);
            ys.push_back(y[order[i]]);
            os.push_back(1.0);
        }
        return lstsq({os, xs}, ys)[1];
    };
    f.kappa_first_half = slope(0, half);
    f.kappa_second_half = slope(x.size() - half, x.size());
    f.non_asymptotic = std::abs(f.kappa_first_half - f.kappa_second_half) > 0.1;
    return f;
}

}  // namespace detail

// log(value) against log|log lambda|; the data must touch at least 6 distinct decades of lambda.
inline ScalingFit fit_log_power(const std::vector<double>& lambdas, const std::vector<double>& values,
                                bool envelope = false) {
    if (lambdas.size() != values.size()) throw ParameterError("lambda and value lengths differ");
    std::set<long> decades;
    std::vector<double> x, lll;
    for (double l : lambdas) {
        if (!(l > 0 && l < 1)) throw ParameterError("lambda must lie in (0,1)");
        decades.insert(long(std::floor(std::log10(l) + 1e-9)));
        x.push_back(std::log(std::abs(std::log(l))));
        lll.push_back(std::log(std::abs(x.back())));
    }
    if (decades.size() < 6) throw RangeError("fit needs data in at least 6 decades");
    if (envelope && lambdas.size() < 4) throw RangeError("envelope fit needs at least 4 points");
    return detail::fit_abscissa(x, values, lll, envelope);
}

// same fit with the abscissa given as |log lambda| directly (lambda below the double range)
inline ScalingFit fit_log_power_abslog(const std::vector<double>& abs_logs, const std::vector<double>& values,
                                       bool envelope = false) {
    if (abs_logs.size() != values.size()) throw ParameterError("lambda and value lengths differ");
    std::set<long> decades;
    std::vector<double> x, lll;
    for (double l : abs_logs) {
        if (!(l > 0)) throw ParameterError("|log lambda| must be positive");
        decades.insert(long(std::floor(-l / std::log(10.0) + 1e-9)));
        x.push_back(std::log(l));
        lll.push_back(std::log(std::abs(x.back())));
    }
    if (decades.size() < 6) throw RangeError("fit needs data in at least 6 decades");
    return detail::fit_abscissa(x, values, lll, envelope);
}

// time-domain variant: abscissa log log t (exploratory only)
inline ScalingFit fit_log_power_time(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size()) throw ParameterError("time and value lengths differ");
    std::set<long> decades;
    std::vector<double> x, lll;
    for (double t : times) {
        if (!(t > std::exp(1.0))) throw ParameterError("times must exceed e");
        decades.insert(long(std::floor(std::log10(t) + 1e-9)));
        x.push_back(std::log(std::log(t)));
        lll.push_back(std::log(x.back()));
    }
    if (decades.size() < 6) throw RangeError("fit needs data in at least 6 decades");
    return detail::fit_abscissa(x, values, lll, false);
}

struct Envelope {
    std::vector<double> lambda, center, lower, upper;
};

// lambda^-2 |log lambda|^{2/3} e^{-+gamma |log log log lambda|^2}
inline Envelope bound_envelope(const std::vector<double>& lambdas, double gamma) {
    if (!(gamma > 0)) throw ParameterError("gamma must be positive");
    Envelope e;
    for (double l : lambdas) {
        if (!(l > 0 && l < std::exp(-std::exp(1.0)))) throw ParameterError("lambda must lie in (0, e^-e)");
        const double lg = std::abs(std::log(l));
        const double lll = std::log(std::log(lg));
        const double c = std::pow(l, -2.0) * std::pow(lg, 2.0 / 3.0);
        e.lambda.push_back(l);
        e.center.push_back(c);
        e.lower.push_back(c * std::exp(-gamma * lll * lll));
        e.upper.push_back(c * std::exp(gamma * lll * lll));
    }
    return e;
}

}  // namespace asep
