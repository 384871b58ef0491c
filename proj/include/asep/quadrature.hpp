#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "error.hpp"

namespace asep {

struct GaussRule {
    std::vector<double> x, w;  // on [-1, 1]
};

// Golub-Welsch: eigenvalues of the Jacobi matrix of the Legendre recurrence.
inline const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw ParameterError("Gauss rule needs at least one node");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    GaussRule r;
    for (int k = 0; k < n; ++k) {
        r.x.push_back(es.eigenvalues()(k));
        const double v = es.eigenvectors()(0, k);
        r.w.push_back(2.0 * v * v);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Appends the n-point rule on [a, b] to (x, w).
inline void gauss_panel(double a, double b, int n, std::vector<double>& x, std::vector<double>& w) {
    const auto& g = gauss_legendre(n);
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    for (int k = 0; k < n; ++k) {
        x.push_back(c + h * g.x[k]);
        w.push_back(h * g.w[k]);
    }
}

// Breakpoints 0, r0, 2 r0, 4 r0, ... up to r1 (geometric shells around the origin).
inline std::vector<double> geometric_breaks(double r0, double r1, double ratio = 2.0) {
    std::vector<double> b{0.0};
    double r = r0;
    while (r < r1 / std::sqrt(ratio)) {
        b.push_back(r);
        r *= ratio;
    }
    b.push_back(r1);
    return b;
}

}  // namespace asep
