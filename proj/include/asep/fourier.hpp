#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "error.hpp"

namespace asep {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

inline double omega_r(double r) {
    const double h = std::sin(0.5 * r);
    return 4.0 * h * h;
}
inline double omega(double r, double s) { return omega_r(r) + omega_r(s); }

inline double reduce_angle(double a) {
    a = std::fmod(a + kPi, 2 * kPi);
    if (a < 0) a += 2 * kPi;
    return a - kPi;
}

struct MomentumPoint {
    double r = 0, s = 0;
    MomentumPoint() = default;
    MomentumPoint(double r_, double s_) : r(reduce_angle(r_)), s(reduce_angle(s_)) {}
    double omega() const { return asep::omega(r, s); }
    MomentumPoint operator+(const MomentumPoint& o) const { return {r + o.r, s + o.s}; }
    MomentumPoint operator-() const { return {-r, -s}; }
};

// Number of terms in the expansion of |A_+ F|^2 at degree n: one per ordered pair of (j,m) pairs.
inline long long pair_term_count(int n) {
    const long long p = (long long)n * (n + 1) / 2;
    return p * p;
}

// M x M grid on the momentum torus. Point index p = i + M j with angle 2 pi i / M
// folded into [-pi, pi). Closed under negation and contains p = 0.
class MomentumGrid {
public:
    explicit MomentumGrid(int m) : m_(m) {
        if (m < 2 || m % 2) throw ParameterError("grid size M must be even and >= 2");
        const int n = m * m;
        r_.resize(n);
        s_.resize(n);
        sin_r_.resize(n);
        om_.resize(n);
        om_r_.resize(n);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
                const int p = i + m * j;
                r_[p] = angle(i);
                s_[p] = angle(j);
                sin_r_[p] = std::sin(r_[p]);
                om_r_[p] = asep::omega_r(r_[p]);
                om_[p] = om_r_[p] + asep::omega_r(s_[p]);
            }
    }

    int M() const { return m_; }
    int points() const { return m_ * m_; }
    double spacing() const { return 2 * kPi / m_; }
    double weight() const { return 1.0 / (double(m_) * m_); }  // normalized dp

    double angle(int i) const { return 2 * kPi * (i >= m_ / 2 ? i - m_ : i) / m_; }
    double r(int p) const { return r_[p]; }
    double s(int p) const { return s_[p]; }
    double sin_r(int p) const { return sin_r_[p]; }
    double omega(int p) const { return om_[p]; }
    double omega_r(int p) const { return om_r_[p]; }

    int add(int p, int q) const {
        const int i = (p % m_ + q % m_) % m_, j = (p / m_ + q / m_) % m_;
        return i + m_ * j;
    }
    int neg(int p) const {
        const int i = (m_ - p % m_) % m_, j = (m_ - p / m_) % m_;
        return i + m_ * j;
    }
    int sub(int p, int q) const { return add(p, neg(q)); }
    bool operator==(const MomentumGrid& o) const { return m_ == o.m_; }

private:
    int m_;
    std::vector<double> r_, s_, sin_r_, om_, om_r_;
};

inline double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Symmetric function of n momenta on the slice sum p = 0, stored over the first
// n - 1 momenta (the last one is implied). Index = p_1 + P p_2 + P^2 p_3 + ..., P = M^2.
template <class T>
class DegreeNFunction {
public:
    static constexpr int kMaxDegree = 5;

    DegreeNFunction(const MomentumGrid& g, int n) : grid_(&g), n_(n) {
        if (n < 1) throw ParameterError("degree must be positive");
        if (n > kMaxDegree) throw CapacityError("degree above the configured maximum of 5");
        std::size_t size = 1;
        for (int i = 0; i < n - 1; ++i) size *= std::size_t(g.points());
        v_.assign(size, T{});
    }

    const MomentumGrid& grid() const { return *grid_; }
    int degree() const { return n_; }
    std::size_t size() const { return v_.size(); }
    T& operator[](std::size_t i) { return v_[i]; }
    const T& operator[](std::size_t i) const { return v_[i]; }
    std::vector<T>& data() { return v_; }
    const std::vector<T>& data() const { return v_; }

    // decode a flat index into the full tuple (last momentum implied)
    std::array<int, kMaxDegree + 1> tuple(std::size_t idx) const {
        std::array<int, kMaxDegree + 1> t{};
        const std::size_t pp = std::size_t(grid_->points());
        int sum = 0;
        for (int i = 0; i < n_ - 1; ++i) {
            t[i] = int(idx % pp);
            idx /= pp;
            sum = grid_->add(sum, t[i]);
        }
        t[n_ - 1] = grid_->neg(sum);
        return t;
    }
    // flat index from any n - 1 of the momenta (the first n - 1 entries of t)
    std::size_t index(const int* t, int count) const {
        std::size_t idx = 0, mul = 1;
        const std::size_t pp = std::size_t(grid_->points());
        for (int i = 0; i < count; ++i) {
            idx += std::size_t(t[i]) * mul;
            mul *= pp;
        }
        return idx;
    }
    T at(const std::array<int, kMaxDegree + 1>& t) const { return v_[index(t.data(), n_ - 1)]; }

    void symmetrize() {
        if (n_ <= 1) return;
        std::vector<T> out(v_.size());
        std::array<int, kMaxDegree + 1> perm{};
        std::iota(perm.begin(), perm.begin() + n_, 0);
        std::vector<std::array<int, kMaxDegree + 1>> perms;
        do perms.push_back(perm);
        while (std::next_permutation(perm.begin(), perm.begin() + n_));
        for (std::size_t i = 0; i < v_.size(); ++i) {
            const auto t = tuple(i);
            T acc{};
            for (const auto& p : perms) {
                std::array<int, kMaxDegree + 1> u{};
                for (int k = 0; k < n_; ++k) u[k] = t[p[k]];
                acc += v_[index(u.data(), n_ - 1)];
            }
            out[i] = acc / double(perms.size());
        }
        v_.swap(out);
    }

private:
    const MomentumGrid* grid_;
    int n_;
    std::vector<T> v_;
};

using DegreeN = DegreeNFunction<cplx>;

// Degree-two function f(p) = F(p, -p).
using DegreeTwoFunction = DegreeNFunction<cplx>;

inline void require_same(const DegreeN& a, const DegreeN& b) {
    if (!(a.grid() == b.grid()) || a.degree() != b.degree()) throw ParameterError("grid or degree mismatch");
}

// (1/n!) int dmu conj(F) G with normalized dp.
inline cplx inner_product(const DegreeN& f, const DegreeN& g) {
    require_same(f, g);
    cplx s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
    return s * std::pow(f.grid().weight(), f.degree() - 1) / factorial(f.degree());
}

// -sum_{j<m} (e^{i r_j} - e^{-i r_m}) F(..., p_j + p_m, ..., p_m omitted, ...), not symmetrized.
inline DegreeN apply_A_plus_raw(const DegreeN& f) {
    const auto& g = f.grid();
    const int n = f.degree();
    DegreeN out(g, n + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto t = out.tuple(i);
        cplx acc = 0;
        for (int j = 0; j <= n; ++j)
            for (int m = j + 1; m <= n; ++m) {
                int rest[DegreeN::kMaxDegree + 1];
                int c = 0;
                // merged momentum takes slot j; its value is implied by the others
                for (int l = 0; l <= n; ++l)
                    if (l != j && l != m) rest[c++] = l;
                std::array<int, DegreeN::kMaxDegree + 1> u{};
                int k = 0;
                u[k++] = g.add(t[j], t[m]);
                for (int l = 0; l < c; ++l) u[k++] = t[rest[l]];
                const cplx ker = std::exp(cplx(0, g.r(t[j]))) - std::exp(cplx(0, -g.r(t[m])));
                acc -= ker * f[f.index(u.data(), n - 1)];
            }
        out[i] = acc;
    }
    return out;
}

// Symmetrized raising operator; on symmetric F the (j,m) kernel reduces to
// i (sin r_j + sin r_m).
inline DegreeN apply_A_plus(const DegreeN& f) {
    const auto& g = f.grid();
    const int n = f.degree();
    if (n + 1 > DegreeN::kMaxDegree) throw CapacityError("degree overflow");
    DegreeN out(g, n + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto t = out.tuple(i);
        cplx acc = 0;
        for (int j = 0; j <= n; ++j)
            for (int m = j + 1; m <= n; ++m) {
                int u[DegreeN::kMaxDegree + 1];
                int c = 0;
                for (int l = 0; l <= n; ++l)
                    if (l != j && l != m) u[c++] = t[l];
                // with n - 1 untouched momenta the merged one is implied
                const cplx val = n == 1 ? f[0] : f[f.index(u, n - 1)];
                acc -= cplx(0, g.sin_r(t[j]) + g.sin_r(t[m])) * val;
            }
        out[i] = acc;
    }
    return out;
}

// A_- = -A_+^*: (A_- G)(q) = -(1/2) sum_k int da i (sin(q_k - a)_r + sin a_r) G(q_k -> (q_k - a, a)).
inline DegreeN apply_A_minus(const DegreeN& gfun) {
    const auto& g = gfun.grid();
    const int n1 = gfun.degree();
    const int n = n1 - 1;
    if (n < 1) throw ParameterError("A_- needs degree >= 2");
    DegreeN out(g, n);
    const double w = g.weight();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto q = out.tuple(i);
        cplx acc = 0;
        for (int k = 0; k < n; ++k)
            for (int a = 0; a < g.points(); ++a) {
                const int b = g.sub(q[k], a);
                int u[DegreeN::kMaxDegree + 1];
                int c = 0;
                u[c++] = b;
                u[c++] = a;
                for (int l = 0; l < n && c < n1 - 1; ++l)
                    if (l != k) u[c++] = q[l];
                acc += cplx(0, g.sin_r(b) + g.sin_r(a)) * gfun[gfun.index(u, n1 - 1)];
            }
        out[i] = -0.5 * w * acc;
    }
    return out;
}

}  // namespace asep
