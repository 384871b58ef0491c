#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "error.hpp"
#include "fourier.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace asep {

inline double abs_log(double x) { return std::abs(std::log(x)); }
inline double loglog(double lambda) { return std::abs(std::log(abs_log(lambda))); }

struct UVParams {
    double kappa = 1.0;
    double tau = 1.5;
    double lambda = 1e-6;

    void validate() const {
        if (!(kappa >= 0 && kappa <= 1)) throw ParameterError("kappa must lie in [0,1]");
        if (!(tau > 1)) throw ParameterError("tau must exceed 1");
        if (!(lambda > 0 && lambda < 1)) throw ParameterError("lambda must lie in (0,1)");
    }
    double loglog_weight() const { return std::pow(loglog(lambda), 2); }
    double good_threshold() const { return std::pow(abs_log(lambda), -2 * tau); }
};

// sum_omega: sum of omega over all momenta of the tuple; sum_omega_r: same over r-components only.
inline double u_multiplier(const UVParams& p, double sum_omega, double sum_omega_r) {
    const double l = abs_log(p.lambda + sum_omega);
    if (sum_omega <= p.good_threshold()) return sum_omega_r * (1 + std::pow(l, p.kappa));
    return sum_omega_r * (1 + l);
}

inline double v_multiplier(const UVParams& p, double sum_omega, double sum_omega_r) {
    if (sum_omega <= p.good_threshold()) return u_multiplier(p, sum_omega, sum_omega_r);
    return -p.loglog_weight() * sum_omega_r;
}

namespace detail {
template <class Mult>
DegreeN apply_multiplier(const DegreeN& f, Mult&& mult) {
    const auto& g = f.grid();
    DegreeN out(g, f.degree());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto t = f.tuple(i);
        double so = 0, sr = 0;
        for (int k = 0; k < f.degree(); ++k) {
            so += g.omega(t[k]);
            sr += g.omega_r(t[k]);
        }
        out[i] = mult(so, sr) * f[i];
    }
    return out;
}
}  // namespace detail

inline DegreeN apply_U(const UVParams& p, const DegreeN& f) {
    p.validate();
    return detail::apply_multiplier(f, [&](double so, double sr) { return u_multiplier(p, so, sr); });
}

inline DegreeN apply_V(const UVParams& p, const DegreeN& f) {
    p.validate();
    return detail::apply_multiplier(f, [&](double so, double sr) { return v_multiplier(p, so, sr); });
}

// ---------------------------------------------------------------------------
// Real-arithmetic hierarchy on a uniform grid. With A_+ = i K_+ all blocks are real:
//   (K_+ F)(p)  = -sum_{j<m} (sin r_j + sin r_m) F(merge j,m)
//   (K_+^T G)(q) = -(1/2) sum_k int da (sin(q_k - a)_r + sin a_r) G(split q_k)
// and A_+^* X A_+ = K_+^T X K_+.

class UniformHierarchy {
public:
    UniformHierarchy(int m, double lambda) : g_(m), lambda_(lambda), pp_(std::size_t(g_.points())) {
        if (!(lambda > 0)) throw ParameterError("lambda must be positive");
    }

    const MomentumGrid& grid() const { return g_; }
    double lambda() const { return lambda_; }
    std::size_t size(int k) const {
        std::size_t s = 1;
        for (int i = 0; i < k - 1; ++i) s *= pp_;
        return s;
    }
    double weight(int k) const { return std::pow(g_.weight(), k - 1) / factorial(k); }

    int decode(int k, std::size_t idx, int* t) const {
        int sum = 0;
        for (int i = 0; i < k - 1; ++i) {
            t[i] = int(idx % pp_);
            idx /= pp_;
            sum = g_.add(sum, t[i]);
        }
        t[k - 1] = g_.neg(sum);
        return k;
    }
    double denominator(int k, const int* t) const {
        double d = lambda_;
        for (int i = 0; i < k; ++i) d += g_.omega(t[i]);
        return d;
    }
    double dot(int k, const std::vector<double>& a, const std::vector<double>& b) const {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s * weight(k);
    }

    // degree k -> k + 1; optionally divided by the degree-(k+1) denominator
    void kplus(int k, const std::vector<double>& in, std::vector<double>& out, bool scale = false) const {
        out.assign(size(k + 1), 0.0);
        const int n1 = k + 1;
        parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
            int t[8], rest[8];
            for (std::size_t i = b; i < e; ++i) {
                decode(n1, i, t);
                double acc = 0;
                for (int j = 0; j < n1; ++j)
                    for (int m = j + 1; m < n1; ++m) {
                        int c = 0;
                        for (int l = 0; l < n1 && c < k - 1; ++l)
                            if (l != j && l != m) rest[c++] = t[l];
                        std::size_t idx = 0, mul = 1;
                        for (int l = 0; l < k - 1; ++l, mul *= pp_) idx += std::size_t(rest[l]) * mul;
                        acc -= (g_.sin_r(t[j]) + g_.sin_r(t[m])) * in[idx];
                    }
                out[i] = scale ? acc / denominator(n1, t) : acc;
            }
        });
    }

    // degree k1 -> k1 - 1
    void kplus_t(int k1, const std::vector<double>& in, std::vector<double>& out) const {
        const int k = k1 - 1;
        out.assign(size(k), 0.0);
        const int np = g_.points();
        const double pref = -0.5 * g_.weight();
        parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
            int q[8];
            for (std::size_t i = b; i < e; ++i) {
                decode(k, i, q);
                double acc = 0;
                for (int s = 0; s < k; ++s) {
                    std::size_t base = 0, mul = pp_ * pp_;
                    int c = 0;
                    for (int l = 0; l < k && c < k - 2; ++l)
                        if (l != s) {
                            base += std::size_t(q[l]) * mul;
                            mul *= pp_;
                            ++c;
                        }
                    for (int a = 0; a < np; ++a) {
                        const int bb = g_.sub(q[s], a);
                        acc += (g_.sin_r(bb) + g_.sin_r(a)) * in[std::size_t(bb) + pp_ * std::size_t(a) + base];
                    }
                }
                out[i] = pref * acc;
            }
        });
    }

    // diagonal of K_+^T D_{k+1}^{-1} K_+ at degree k
    std::vector<double> elimination_diagonal(int k) const {
        std::vector<double> m(size(k));
        const int np = g_.points();
        parallel_for(m.size(), [&](std::size_t b, std::size_t e) {
            int q[8];
            for (std::size_t i = b; i < e; ++i) {
                decode(k, i, q);
                const double d0 = denominator(k, q);
                double acc = 0;
                for (int s = 0; s < k; ++s)
                    for (int a = 0; a < np; ++a) {
                        const int bb = g_.sub(q[s], a);
                        const double c = g_.sin_r(bb) + g_.sin_r(a);
                        acc += c * c / (d0 - g_.omega(q[s]) + g_.omega(bb) + g_.omega(a));
                    }
                m[i] = 0.5 * g_.weight() * acc;
            }
        });
        return m;
    }

    std::vector<double> w_hat() const {
        std::vector<double> w(size(2));
        for (int p = 0; p < g_.points(); ++p) w[p] = std::cos(g_.r(p));
        return w;
    }

private:
    MomentumGrid g_;
    double lambda_;
    std::size_t pp_;
};

enum class NestedMode { exact_nested, diagonal_U, diagonal_V };

inline std::string to_string(NestedMode m) {
    switch (m) {
        case NestedMode::exact_nested: return "exact-nested";
        case NestedMode::diagonal_U: return "diagonal-U";
        case NestedMode::diagonal_V: return "diagonal-V";
    }
    return "?";
}

struct NestedResolventSpec {
    int n = 3;
    double lambda = 1e-3;
    int M = 16;
    NestedMode mode = NestedMode::exact_nested;
    double tol = 1e-10;
    int max_iter = 5000;
    // diagonal modes: B_2 = lambda + 2 omega + multiplier, with
    //   U: c / gamma * |loglog|^2 * U_{kappa,tau},   V: c * gamma * V_{kappa,2 tau}
    double kappa = 0.5;
    double tau = 1.5;
    double gamma = 0;  // 0 -> |log log lambda|^-3
    double c = 1;
};

struct NestedResult {
    double value = 0;
    double zero_mode = 0;  // contribution of p = 0, which decouples: 1 / (2 M^2 lambda)
    double residual = 0;
    int iterations = 0;
    std::size_t unknowns = 0;
};

namespace detail {

// Preconditioned MINRES for a self-adjoint operator in a weighted inner product.
// apply(x, y): y = T x; precond(v, z): z = P^{-1} v; dot(a, b) weighted.
template <class Apply, class Precond, class Dot>
NestedResult minres(std::size_t n, const std::vector<double>& rhs, std::vector<double>& x, Apply&& apply,
                    Precond&& precond, Dot&& dot, double tol, int max_iter) {
    using V = std::vector<double>;
    x.assign(n, 0.0);
    V v_old(n, 0.0), v = rhs, v_new(n), z(n), z_new(n), w_old(n, 0.0), w(n, 0.0), w_new(n), az(n);
    precond(v, z);
    double gamma = std::sqrt(dot(z, v)), gamma_old = 1.0;
    const double gamma1 = gamma;
    if (gamma1 == 0) return {};
    double eta = gamma, s_old = 0, s = 0, c_old = 1, c = 1;
    NestedResult res;
    for (int it = 1; it <= max_iter; ++it) {
        for (auto& e : z) e /= gamma;
        apply(z, az);
        const double delta = dot(az, z);
        for (std::size_t i = 0; i < n; ++i) v_new[i] = az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i];
        precond(v_new, z_new);
        const double gamma_new = std::sqrt(std::max(0.0, dot(z_new, v_new)));
        const double a0 = c * delta - c_old * s * gamma;
        const double a1 = std::sqrt(a0 * a0 + gamma_new * gamma_new);
        const double a2 = s * delta + c_old * c * gamma;
        const double a3 = s_old * gamma;
        const double c_new = a0 / a1, s_new = gamma_new / a1;
        for (std::size_t i = 0; i < n; ++i) {
            w_new[i] = (z[i] - a3 * w_old[i] - a2 * w[i]) / a1;
            x[i] += c_new * eta * w_new[i];
        }
        eta = -s_new * eta;
        res.iterations = it;
        res.residual = std::abs(eta) / gamma1;
        if (res.residual < tol || gamma_new == 0) return res;
        std::swap(v_old, v);
        std::swap(v, v_new);
        std::swap(z, z_new);
        std::swap(w_old, w);
        std::swap(w, w_new);
        gamma_old = gamma;
        gamma = gamma_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
    }
    throw NumericalError("MINRES did not converge", res.residual);
}

}  // namespace detail

// <<w, (lambda - L_n)^{-1} w>> on a uniform M x M grid, w-hat = cos r on the (p, -p) slice.
// Levels 2..n-1 form a symmetric block-tridiagonal system with alternating signs; the top
// level n is diagonal and eliminated exactly. Solved by preconditioned MINRES.
inline NestedResult resolvent_truncated(const NestedResolventSpec& spec) {
    if (!(spec.lambda > 0)) throw ParameterError("lambda must be positive");
    if (spec.n < 2) throw ParameterError("truncation degree must be >= 2");
    if (spec.n > DegreeN::kMaxDegree) throw CapacityError("truncation degree above 5");
    const UniformHierarchy h(spec.M, spec.lambda);
    const auto& g = h.grid();
    const auto w = h.w_hat();
    NestedResult res;
    res.zero_mode = 0.5 * g.weight() / spec.lambda;

    if (spec.mode != NestedMode::exact_nested || spec.n == 2) {
        if (spec.mode != NestedMode::exact_nested && spec.n != 3)
            throw ParameterError("diagonal modes are defined at degree 3 only");
        const double ll = loglog(spec.lambda);
        const double gam = spec.gamma > 0 ? spec.gamma : std::pow(ll, -3.0);
        UVParams up{spec.kappa, spec.tau, spec.lambda};
        UVParams vp{spec.kappa, 2 * spec.tau, spec.lambda};
        if (spec.mode != NestedMode::exact_nested) up.validate();
        double v = 0;
        for (int p = 0; p < g.points(); ++p) {
            double d = spec.lambda + 2 * g.omega(p);
            const double so = 2 * g.omega(p), sr = 2 * g.omega_r(p);
            if (spec.mode == NestedMode::diagonal_U) d += spec.c / gam * ll * ll * u_multiplier(up, so, sr);
            if (spec.mode == NestedMode::diagonal_V) d += spec.c * gam * v_multiplier(vp, so, sr);
            if (!(d > 0)) throw NumericalError("non-positive diagonal denominator", d);
            v += w[p] * w[p] / d;
        }
        res.value = 0.5 * g.weight() * v;
        res.unknowns = std::size_t(g.points());
        return res;
    }

    const int top = spec.n - 1;
    const int levels = top - 1;  // degrees 2..top
    std::vector<std::size_t> off(levels + 1, 0);
    for (int l = 0; l < levels; ++l) off[l + 1] = off[l] + h.size(l + 2);
    const std::size_t total = off[levels];
    res.unknowns = total;

    std::vector<std::vector<double>> diag(levels);
    for (int l = 0; l < levels; ++l) {
        const int k = l + 2;
        diag[l].resize(h.size(k));
        int t[8];
        for (std::size_t i = 0; i < diag[l].size(); ++i) {
            h.decode(k, i, t);
            diag[l][i] = h.denominator(k, t);
        }
    }
    const auto mtop = h.elimination_diagonal(top);
    auto sigma = [](int k) { return k % 2 == 0 ? 1.0 : -1.0; };

    auto seg = [&](const std::vector<double>& x, int l) {
        return std::vector<double>(x.begin() + off[l], x.begin() + off[l + 1]);
    };
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (int l = 0; l < levels; ++l) {
            double sl = 0;
            for (std::size_t i = off[l]; i < off[l + 1]; ++i) sl += a[i] * b[i];
            s += sl * h.weight(l + 2);
        }
        return s;
    };
    auto precond = [&](const std::vector<double>& v, std::vector<double>& z) {
        z.resize(total);
        for (int l = 0; l < levels; ++l)
            for (std::size_t i = 0; i < diag[l].size(); ++i) {
                const double d = diag[l][i] + (l == levels - 1 ? mtop[i] : 0.0);
                z[off[l] + i] = v[off[l] + i] / d;
            }
    };
    std::vector<double> tmp, tmp2;
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        y.assign(total, 0.0);
        for (int l = 0; l < levels; ++l) {
            const int k = l + 2;
            const double sg = sigma(k);
            const auto xl = seg(x, l);
            for (std::size_t i = 0; i < xl.size(); ++i) y[off[l] + i] += sg * diag[l][i] * xl[i];
            if (l == levels - 1) {
                h.kplus(k, xl, tmp, true);
                h.kplus_t(k + 1, tmp, tmp2);
                for (std::size_t i = 0; i < tmp2.size(); ++i) y[off[l] + i] += sg * tmp2[i];
            } else {
                // coupling (k, k+1) = -sigma_k K_+^T and (k+1, k) = -sigma_k K_+
                h.kplus(k, xl, tmp);
                for (std::size_t i = 0; i < tmp.size(); ++i) y[off[l + 1] + i] -= sg * tmp[i];
                h.kplus_t(k + 1, seg(x, l + 1), tmp2);
                for (std::size_t i = 0; i < tmp2.size(); ++i) y[off[l] + i] -= sg * tmp2[i];
            }
        }
    };
    std::vector<double> rhs(total, 0.0), x;
    for (std::size_t i = 0; i < w.size(); ++i) rhs[i] = w[i];
    auto r = detail::minres(total, rhs, x, apply, precond, dot, spec.tol, spec.max_iter);
    res.iterations = r.iterations;
    res.residual = r.residual;
    res.value = h.dot(2, w, seg(x, 0));
    return res;
}

// ---------------------------------------------------------------------------
// Degree-3 truncation on a graded polar quadrature (continuum torus). The unknown is
// even under r -> -r and s -> -s, so only first-quadrant nodes are kept and the
// off-diagonal kernel is summed over the four reflections.

struct GradedNodes {
    std::vector<double> r, s, w;  // w: weight for d^2p / (2 pi)^2 over the first quadrant
    std::size_t size() const { return r.size(); }
};

// M scales the node counts: M/8 Gauss nodes per octant in angle, max(4, M/16) per radial panel.
// Radial panels: [0, r0], geometric shells r0 * 2^k up to 1, then 4 panels out to the square edge.
// extra_break(theta) may add one radius (e.g. a good-set boundary); return <= 0 for none.
inline GradedNodes graded_nodes(int M, double lambda, const std::function<double(double)>& extra_break = {}) {
    if (M < 16 || M % 8) throw ParameterError("graded resolution M must be a multiple of 8, >= 16");
    const int nth = M / 8, nr = std::max(4, M / 16);
    const double r0 = std::min(1e-3, 1e-3 * std::sqrt(lambda));
    std::vector<double> th, thw;
    gauss_panel(0, kPi / 4, nth, th, thw);
    gauss_panel(kPi / 4, kPi / 2, nth, th, thw);
    GradedNodes q;
    const double norm = 1.0 / (4 * kPi * kPi);
    for (std::size_t a = 0; a < th.size(); ++a) {
        const double c = std::cos(th[a]), s = std::sin(th[a]);
        const double rmax = kPi / std::max(c, s);
        auto br = geometric_breaks(r0, 1.0);
        for (int k = 1; k <= 4; ++k) br.push_back(1.0 + (rmax - 1.0) * k / 4);
        if (extra_break) {
            const double e = extra_break(th[a]);
            if (e > 0 && e < rmax) {
                br.push_back(e);
                std::sort(br.begin(), br.end());
            }
        }
        std::vector<double> rr, rw;
        for (std::size_t k = 0; k + 1 < br.size(); ++k)
            if (br[k + 1] > br[k] * (1 + 1e-12)) gauss_panel(br[k], br[k + 1], nr, rr, rw);
        for (std::size_t k = 0; k < rr.size(); ++k) {
            q.r.push_back(rr[k] * c);
            q.s.push_back(rr[k] * s);
            q.w.push_back(thw[a] * rw[k] * rr[k] * norm);
        }
    }
    return q;
}

// radius along direction theta where omega reaches level (bisection; level small)
inline double omega_level_radius(double theta, double level) {
    const double c = std::cos(theta), s = std::sin(theta);
    double lo = 0, hi = kPi / std::max(std::abs(c), std::abs(s));
    if (omega(hi * c, hi * s) <= level) return -1;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (omega(mid * c, mid * s) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct DegreeThreeResult {
    double value = 0;
    double residual = 0;
    int iterations = 0;
    std::size_t nodes = 0;
};

inline DegreeThreeResult degree_three_graded(double lambda, int M, double tol = 1e-12, int max_iter = 20000) {
    if (!(lambda > 0)) throw ParameterError("lambda must be positive");
    const auto q = graded_nodes(M, lambda);
    const std::size_t n = q.size();
    // half-angle representation keeps omega accurate for tiny momenta
    std::vector<double> hr(n), kr(n), hs(n), ks(n), sr(n), cr(n), om(n);
    for (std::size_t i = 0; i < n; ++i) {
        hr[i] = std::sin(0.5 * q.r[i]);
        kr[i] = std::cos(0.5 * q.r[i]);
        hs[i] = std::sin(0.5 * q.s[i]);
        ks[i] = std::cos(0.5 * q.s[i]);
        sr[i] = std::sin(q.r[i]);
        cr[i] = std::cos(q.r[i]);
        om[i] = 4 * (hr[i] * hr[i] + hs[i] * hs[i]);
    }
    static constexpr double sgn[4][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
    // omega(p_i + h p_j) and sin of its r-component
    auto sum_terms = [&](std::size_t i, std::size_t j, const double* h, double& om_sum, double& sin_sum) {
        const double a = hr[i] * kr[j] + kr[i] * h[0] * hr[j];
        const double ca = kr[i] * kr[j] - hr[i] * h[0] * hr[j];
        const double b = hs[i] * ks[j] + ks[i] * h[1] * hs[j];
        om_sum = 4 * (a * a + b * b);
        sin_sum = 2 * a * ca;
    };

    // multiplier m(q_i) = int da R(q,a,-q-a) (sin a_r - sin(q_r + a_r))^2, partition of unity
    // phi(a) = omega(a+q) / (omega(a) + omega(a+q)) keeps only the peak at a = 0
    std::vector<double> m(n, 0.0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double acc = 0;
            for (std::size_t j = 0; j < n; ++j)
                for (const auto& h : sgn) {
                    double oqa, sqa;
                    sum_terms(i, j, h, oqa, sqa);
                    const double c = h[0] * sr[j] - sqa;
                    const double phi = oqa / (om[j] + oqa);
                    acc += q.w[j] * 2 * phi * c * c / (lambda + om[i] + om[j] + oqa);
                }
            m[i] = acc;
        }
    });

    Eigen::MatrixXd a(n, n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double k = 0;
                for (const auto& h : sgn) {
                    double o12, s12;
                    sum_terms(i, j, h, o12, s12);
                    k += (h[0] * sr[j] - s12) * (sr[i] - s12) / (lambda + om[i] + om[j] + o12);
                }
                a(Eigen::Index(i), Eigen::Index(j)) = q.w[i] * q.w[j] * k;
            }
    });
    Eigen::VectorXd rhs(n), dinv(n);
    for (std::size_t i = 0; i < n; ++i) {
        a(Eigen::Index(i), Eigen::Index(i)) += 0.5 * q.w[i] * (lambda + 2 * om[i] + m[i]);
        rhs(Eigen::Index(i)) = 0.5 * q.w[i] * cr[i];
        dinv(Eigen::Index(i)) = 1.0 / a(Eigen::Index(i), Eigen::Index(i));
    }
    // Jacobi-preconditioned CG
    Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(n)), r = rhs, z = dinv.cwiseProduct(r), p = z, ap;
    double rz = r.dot(z);
    const double bnorm = rhs.norm();
    DegreeThreeResult res;
    res.nodes = n;
    for (int it = 1; it <= max_iter; ++it) {
        ap.noalias() = a.selfadjointView<Eigen::Lower>() * p;
        const double pap = p.dot(ap);
        if (!(pap > 0)) throw NumericalError("degree-3 quadrature matrix is not positive definite", pap);
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        res.iterations = it;
        res.residual = r.norm() / bnorm;
        if (res.residual < tol) break;
        z = dinv.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    if (res.residual >= tol) throw NumericalError("CG did not converge", res.residual);
    res.value = 4 * rhs.dot(x);
    return res;
}

struct RefinedValue {
    double lambda = 0;
    double value = 0;    // at M
    double refined = 0;  // at 2M
    double delta = 0;    // |refined - value| / refined
    int M = 0;
};

inline RefinedValue degree_three_refined(double lambda, int M) {
    RefinedValue v;
    v.lambda = lambda;
    v.M = M;
    v.value = degree_three_graded(lambda, M).value;
    v.refined = degree_three_graded(lambda, 2 * M).value;
    v.delta = std::abs(v.refined - v.value) / std::abs(v.refined);
    return v;
}

// 1/2 int dp [lambda + 2 omega(p) + c |loglog lambda|^e U_{kappa,tau}(p,-p)]^{-1}
inline double resolvent_diagonal_closed_form(const UVParams& p, double c, double loglog_exponent, int M = 64) {
    p.validate();
    const double thr = p.good_threshold();
    const auto q = graded_nodes(M, p.lambda, [&](double th) { return omega_level_radius(th, thr / 2); });
    const double pref = c * std::pow(loglog(p.lambda), loglog_exponent);
    double v = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double om = omega(q.r[i], q.s[i]);
        const double u = c == 0 ? 0.0 : u_multiplier(p, 2 * om, 2 * omega_r(q.r[i]));
        v += q.w[i] / (p.lambda + 2 * om + pref * u);
    }
    return 0.5 * 4 * v;
}

// ---------------------------------------------------------------------------
// Quadratic-form check of the main estimate at degree 2 on a uniform grid:
//   upper:  <F, K^T (lambda - S + gamma V_{kappa,2tau})^{-1} K F>  <=  gamma^-1 |ll|^2 <F, U_{kt,tau} F>
//   lower:  <F, K^T (lambda - S + gamma^-1 U_{kappa,tau})^{-1} K F>  >=  C gamma <F, V_{kt,2tau} F>
// with kt = 1 - kappa/2. C is fitted on a calibration set at the first lambda.

struct SandwichReport {
    double kappa = 1, kappa_tilde = 0.5, tau = 1.5;
    int M = 64;
    int functions = 0;
    int upper_violations = 0, lower_violations = 0;
    double fitted_C = 0;
    int lower_nonvacuous = 0;  // test functions with <F, V F> > 0
    struct PerLambda {
        double lambda, gamma, worst_upper_ratio, worst_lower_ratio;
    };
    std::vector<PerLambda> per_lambda;
};

namespace detail {

// Real even test function on the grid: random cosine modes times a random-width bump.
inline std::vector<double> random_even_function(const MomentumGrid& g, RngStream& rng) {
    const int kmax = 3;
    std::vector<double> coef;
    for (int i = 0; i < (2 * kmax + 1) * (2 * kmax + 1); ++i) coef.push_back(rng.uniform() - 0.5);
    const double width = std::exp(std::log(1e-2) + rng.uniform() * std::log(1e4));
    std::vector<double> f(std::size_t(g.points()));
    for (int p = 0; p < g.points(); ++p) {
        double v = 0;
        int c = 0;
        for (int x = -kmax; x <= kmax; ++x)
            for (int y = -kmax; y <= kmax; ++y) v += coef[c++] * std::cos(x * g.r(p) + y * g.s(p));
        f[p] = v * std::exp(-g.omega(p) / width);
    }
    return f;
}

// (1/6) int dp1 dp2 R(p1,p2,p3) (sum_l c_l f(p_l))^2, R tabulated over (p1, p2)
inline double degree_three_form(const MomentumGrid& g, const std::vector<double>& rtab, const std::vector<double>& f) {
    const int np = g.points();
    double acc = 0;
    for (int p1 = 0; p1 < np; ++p1)
        for (int p2 = 0; p2 < np; ++p2) {
            const int p3 = g.neg(g.add(p1, p2));
            const double s1 = g.sin_r(p1), s2 = g.sin_r(p2), s3 = g.sin_r(p3);
            const double v = (s2 + s3) * f[p1] + (s1 + s3) * f[p2] + (s1 + s2) * f[p3];
            acc += rtab[std::size_t(p1) * np + p2] * v * v;
        }
    return acc * g.weight() * g.weight() / 6.0;
}

inline std::vector<double> omega_table(const MomentumGrid& g, double lambda,
                                       const std::function<double(double, double)>& extra) {
    const int np = g.points();
    std::vector<double> t(std::size_t(np) * np);
    for (int p1 = 0; p1 < np; ++p1)
        for (int p2 = 0; p2 < np; ++p2) {
            const int p3 = g.neg(g.add(p1, p2));
            const double so = g.omega(p1) + g.omega(p2) + g.omega(p3);
            const double sr = g.omega_r(p1) + g.omega_r(p2) + g.omega_r(p3);
            const double d = lambda + so + extra(so, sr);
            if (!(d > 0)) throw NumericalError("non-positive resolvent denominator", d);
            t[std::size_t(p1) * np + p2] = 1.0 / d;
        }
    return t;
}

}  // namespace detail

inline SandwichReport verify_main_estimate_sandwich(double kappa, double tau, const std::vector<double>& lambdas,
                                                    int functions = 100, int calibration = 50, int M = 64,
                                                    std::uint64_t seed = 2024) {
    if (lambdas.empty()) throw ParameterError("need at least one lambda");
    SandwichReport rep;
    rep.kappa = kappa;
    rep.kappa_tilde = 1 - kappa / 2;
    rep.tau = tau;
    rep.M = M;
    rep.functions = functions;
    MomentumGrid g(M);
    const double w2 = 0.5 * g.weight();

    auto degree_two = [&](const std::vector<double>& f, auto&& mult) {
        double s = 0;
        for (int p = 0; p < g.points(); ++p) s += mult(2 * g.omega(p), 2 * g.omega_r(p)) * f[p] * f[p];
        return w2 * s;
    };

    bool fitted = false;
    for (double lambda : lambdas) {
        const double ll = loglog(lambda);
        const double gam = std::pow(ll, -3.0);
        const UVParams u3{kappa, tau, lambda}, v3{kappa, 2 * tau, lambda};
        const UVParams u2{rep.kappa_tilde, tau, lambda}, v2{rep.kappa_tilde, 2 * tau, lambda};
        u3.validate();
        const auto r_up = detail::omega_table(g, lambda, [&](double so, double sr) { return gam * v_multiplier(v3, so, sr); });
        const auto r_lo = detail::omega_table(g, lambda, [&](double so, double sr) { return u_multiplier(u3, so, sr) / gam; });
        RngStream rng(seed, std::uint64_t(std::llround(-std::log10(lambda) * 1000)));
        if (!fitted) {
            double cmin = 1e300;
            for (int i = 0; i < calibration; ++i) {
                const auto f = detail::random_even_function(g, rng);
                const double vf = degree_two(f, [&](double so, double sr) { return v_multiplier(v2, so, sr); });
                if (vf > 0) cmin = std::min(cmin, detail::degree_three_form(g, r_lo, f) / (gam * vf));
            }
            rep.fitted_C = cmin < 1e300 ? cmin : 1.0;
            fitted = true;
        }
        SandwichReport::PerLambda pl{lambda, gam, 0, 1e300};
        for (int i = 0; i < functions; ++i) {
            const auto f = detail::random_even_function(g, rng);
            const double up_l = detail::degree_three_form(g, r_up, f);
            const double up_r = ll * ll / gam * degree_two(f, [&](double so, double sr) { return u_multiplier(u2, so, sr); });
            const double ratio = up_l / up_r;
            pl.worst_upper_ratio = std::max(pl.worst_upper_ratio, ratio);
            if (ratio > 1 + 1e-12) ++rep.upper_violations;
            const double lo_l = detail::degree_three_form(g, r_lo, f);
            const double vf = degree_two(f, [&](double so, double sr) { return v_multiplier(v2, so, sr); });
            if (vf > 0) {
                ++rep.lower_nonvacuous;
                pl.worst_lower_ratio = std::min(pl.worst_lower_ratio, lo_l / (rep.fitted_C * gam * vf));
            }
            if (lo_l < rep.fitted_C * gam * vf * (1 - 1e-12)) ++rep.lower_violations;
        }
        rep.per_lambda.push_back(pl);
    }
    return rep;
}

}  // namespace asep
