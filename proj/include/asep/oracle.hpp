#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "error.hpp"
#include "lattice.hpp"

namespace asep {

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

// All configurations with exactly k particles on an L_x x L_y torus (V <= 64).
// States are bitmasks in increasing numeric order, which is colex order, so the
// rank is a sum of binomials over set-bit positions.
class CanonicalEnsemble {
public:
    CanonicalEnsemble(int lx, int ly, int k, double cap = 1e6) : lx_(lx), ly_(ly), k_(k) {
        const int v = lx * ly;
        if (lx < 2 || ly < 2 || v > 64) throw ParameterError("oracle lattice must be at least 2x2 with V <= 64");
        if (k < 0 || k > v) throw ParameterError("particle count out of range");
        const double n = binomial(v, k);
        if (n > cap) throw CapacityError("canonical ensemble has " + std::to_string(n) + " states");
        binom_.assign(v + 1, std::vector<std::uint64_t>(k + 2, 0));
        for (int a = 0; a <= v; ++a)
            for (int b = 0; b <= k + 1; ++b) binom_[a][b] = std::uint64_t(binomial(a, b));
        states_.reserve(std::size_t(n));
        if (k == 0) {
            states_.push_back(0);
        } else {
            std::uint64_t s = (k == 64) ? ~0ULL : ((1ULL << k) - 1);
            const std::uint64_t limit = (v == 64) ? ~0ULL : ((1ULL << v) - 1);
            for (;;) {
                states_.push_back(s);
                if (s == (limit & ~((1ULL << (v - k)) - 1))) break;
                // Gosper's hack
                const std::uint64_t c = s & (0 - s);
                const std::uint64_t r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
    }

    int width() const { return lx_; }
    int height() const { return ly_; }
    int volume() const { return lx_ * ly_; }
    int particles() const { return k_; }
    double density() const { return double(k_) / volume(); }
    std::size_t size() const { return states_.size(); }
    std::uint64_t state(std::size_t i) const { return states_[i]; }

    std::size_t index(std::uint64_t mask) const {
        std::size_t r = 0;
        int j = 1;
        while (mask) {
            const int c = std::countr_zero(mask);
            r += binom_[c][j++];
            mask &= mask - 1;
        }
        return r;
    }

    int site(int x, int y) const { return ((x % lx_ + lx_) % lx_) + lx_ * ((y % ly_ + ly_) % ly_); }
    static bool occ(std::uint64_t m, int i) { return (m >> i) & 1ULL; }

    Configuration configuration(std::size_t i) const {
        Configuration c(lx_, ly_);
        for (int s = 0; s < volume(); ++s)
            if (occ(states_[i], s)) c.set(s, true);
        return c;
    }

private:
    int lx_, ly_, k_;
    std::vector<std::uint64_t> states_;
    std::vector<std::vector<std::uint64_t>> binom_;
};

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Rate matrix Q acting on functions: (Qf)(i) = sum_j Q_ij f(j), rows sum to zero.
// S = (Q + Q^T)/2 and A = (Q - Q^T)/2 are the parts w.r.t. the uniform measure.
struct GeneratorMatrix {
    SpMat Q, S, A;
    int lx = 0, ly = 0, k = 0;
    std::size_t dim() const { return std::size_t(Q.rows()); }
};

// Generic builder over an explicit state list with an index function.
template <class IndexFn>
SpMat build_rate_matrix(const std::vector<std::uint64_t>& states, int lx, int ly, IndexFn&& index,
                        const JumpRates& rates) {
    const int v = lx * ly;
    auto site = [&](int x, int y) { return ((x % lx + lx) % lx) + lx * ((y % ly + ly) % ly); };
    std::vector<std::array<int, 4>> nb(v);
    for (int i = 0; i < v; ++i) {
        const int x = i % lx, y = i / lx;
        nb[i] = {site(x + 1, y), site(x - 1, y), site(x, y + 1), site(x, y - 1)};
    }
    const double r[4] = {rates.right, rates.left, rates.up, rates.down};
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(states.size() * 8);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const std::uint64_t m = states[i];
        double out = 0.0;
        for (std::uint64_t b = m; b; b &= b - 1) {
            const int s = std::countr_zero(b);
            for (int d = 0; d < 4; ++d) {
                if (r[d] == 0.0) continue;
                const int t = nb[s][d];
                if ((m >> t) & 1ULL) continue;
                const std::uint64_t m2 = (m & ~(1ULL << s)) | (1ULL << t);
                trip.emplace_back(int(i), int(index(m2)), r[d]);
                out += r[d];
            }
        }
        if (out != 0.0) trip.emplace_back(int(i), int(i), -out);
    }
    SpMat q(Eigen::Index(states.size()), Eigen::Index(states.size()));
    q.setFromTriplets(trip.begin(), trip.end());
    q.makeCompressed();
    return q;
}

inline GeneratorMatrix build_generator(const CanonicalEnsemble& ens, const JumpRates& rates = {}) {
    GeneratorMatrix g;
    g.lx = ens.width();
    g.ly = ens.height();
    g.k = ens.particles();
    std::vector<std::uint64_t> states(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) states[i] = ens.state(i);
    g.Q = build_rate_matrix(states, g.lx, g.ly, [&](std::uint64_t m) { return ens.index(m); }, rates);
    SpMat qt = SpMat(g.Q.transpose());
    g.S = 0.5 * (g.Q + qt);
    g.A = 0.5 * (g.Q - qt);
    return g;
}

inline GeneratorMatrix build_generator(int lx, int ly, int k, double cap = 1e6) {
    return build_generator(CanonicalEnsemble(lx, ly, k, cap));
}

struct SumReport {
    double max_row = 0.0, max_col = 0.0;
};

inline SumReport generator_sums(const GeneratorMatrix& g) {
    SumReport r;
    Eigen::VectorXd col = Eigen::VectorXd::Zero(g.Q.cols());
    for (int i = 0; i < g.Q.outerSize(); ++i) {
        double row = 0.0;
        for (SpMat::InnerIterator it(g.Q, i); it; ++it) {
            row += it.value();
            col[it.col()] += it.value();
        }
        r.max_row = std::max(r.max_row, std::abs(row));
    }
    r.max_col = col.cwiseAbs().maxCoeff();
    return r;
}

// Site-0 conservation check. Returns the largest residual of
//   L eta_0 + sum_i (w~_{-e_i,0} - w~_{0,e_i})           (as stated), and of
//   L eta_0 - sum_i (inflow_i - outflow_i)                 (physical fluxes).
struct ConservationReport {
    double max_stated = 0.0, max_physical = 0.0, max_stated_y_only = 0.0;
    std::size_t states = 0;
};

inline ConservationReport conservation_check(const CanonicalEnsemble& ens, const GeneratorMatrix& g) {
    ConservationReport rep;
    rep.states = ens.size();
    Eigen::VectorXd eta0(Eigen::Index(ens.size()));
    for (std::size_t i = 0; i < ens.size(); ++i) eta0[Eigen::Index(i)] = double(ens.state(i) & 1ULL);
    const Eigen::VectorXd l_eta0 = g.Q * eta0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Configuration c = ens.configuration(i);
        auto wt = [&](int x, int y, Axis a) { return instantaneous_current(c, x, y, a); };
        const double x_div = wt(-1, 0, Axis::x) - wt(0, 0, Axis::x);
        const double y_div = wt(0, -1, Axis::y) - wt(0, 0, Axis::y);
        const double lhs = l_eta0[Eigen::Index(i)];
        rep.max_stated = std::max(rep.max_stated, std::abs(lhs + x_div + y_div));
        // the y current as written is minus the physical flux
        rep.max_physical = std::max(rep.max_physical, std::abs(lhs - (x_div - y_div)));
        const double ly_part = 0.5 * (double(c.at(0, 1)) + double(c.at(0, -1)) - 2.0 * double(c.at(0, 0)));
        rep.max_stated_y_only = std::max(rep.max_stated_y_only, std::abs(ly_part + y_div));
    }
    return rep;
}

// Largest eigenvalue of the symmetric part (dense; tiny ensembles only).
inline double symmetric_part_max_eigenvalue(const GeneratorMatrix& g) {
    if (g.dim() > 3000) throw CapacityError("dense eigenvalue check limited to 3000 states");
    Eigen::MatrixXd s = Eigen::MatrixXd(g.S);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

// W(eta) = sum_x (eta_x - rho)(eta_{x+e1} - rho), rho = k/V, centred by its exact ensemble mean.
struct CurrentVector {
    Eigen::VectorXd w;
    double raw_mean = 0.0;
};

inline CurrentVector current_vector(const CanonicalEnsemble& ens) {
    const double rho = ens.density();
    const int lx = ens.width(), ly = ens.height();
    CurrentVector cv;
    cv.w.resize(Eigen::Index(ens.size()));
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const std::uint64_t m = ens.state(i);
        double s = 0.0;
        for (int y = 0; y < ly; ++y)
            for (int x = 0; x < lx; ++x) {
                const double a = double(CanonicalEnsemble::occ(m, ens.site(x, y))) - rho;
                const double b = double(CanonicalEnsemble::occ(m, ens.site(x + 1, y))) - rho;
                s += a * b;
            }
        cv.w[Eigen::Index(i)] = s;
    }
    cv.raw_mean = cv.w.mean();
    cv.w.array() -= cv.raw_mean;
    return cv;
}

struct ResolventResult {
    double value = 0.0;     // V^-1 <W, (lambda - L)^-1 W>_uniform
    double residual = 0.0;  // ||(lambda - Q)u - W|| / ||W||
    std::size_t states = 0;
};

class ResolventSolver {
public:
    explicit ResolventSolver(const CanonicalEnsemble& ens, double direct_limit = 4e3)
        : ens_(ens), gen_(build_generator(ens)), cur_(current_vector(ens)), direct_limit_(direct_limit) {}

    const GeneratorMatrix& generator() const { return gen_; }
    const CurrentVector& current() const { return cur_; }
    int volume() const { return ens_.volume(); }

    // V^-1 Var(W): the lambda -> infinity limit of lambda * value.
    double static_norm() const { return cur_.w.squaredNorm() / double(cur_.w.size()) / volume(); }

    ResolventResult solve(double lambda, double tol = 1e-10) const {
        if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
        const auto n = gen_.Q.rows();
        SpMat id(n, n);
        id.setIdentity();
        Eigen::SparseMatrix<double> m = Eigen::SparseMatrix<double>(lambda * id - gen_.Q);
        Eigen::VectorXd u;
        if (double(n) <= direct_limit_) {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(m);
            if (lu.info() != Eigen::Success) throw NumericalError("sparse LU failed", 1.0);
            u = lu.solve(cur_.w);
        } else {
            Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> it;
            it.setTolerance(tol * 0.1);
            it.setMaxIterations(20000);
            it.compute(m);
            u = it.solve(cur_.w);
        }
        ResolventResult r;
        r.states = std::size_t(n);
        r.residual = (m * u - cur_.w).norm() / cur_.w.norm();
        if (!(r.residual <= tol)) throw NumericalError("resolvent solve did not converge", r.residual);
        r.value = cur_.w.dot(u) / double(n) / volume();
        return r;
    }

    // Exact V^-1 Var J(t) for the centred W: integrates C(s) = <W, e^{sQ} W>/(N V)
    // twice along an RK4 trajectory of u' = Qu. Returns values at the requested times.
    std::vector<double> current_variance(const std::vector<double>& times, double dt = 0.01) const {
        std::vector<double> out;
        out.reserve(times.size());
        Eigen::VectorXd u = cur_.w;
        const double norm = double(cur_.w.size()) * volume();
        double y1 = 0.0, y2 = 0.0, t = 0.0;
        auto c_of = [&](const Eigen::VectorXd& x) { return cur_.w.dot(x) / norm; };
        for (double target : times) {
            while (t < target - 1e-12) {
                const double h = std::min(dt, target - t);
                // state (u, y1, y2): u' = Qu, y1' = C(u), y2' = y1
                const Eigen::VectorXd k1 = gen_.Q * u;
                const double a1 = c_of(u), b1 = y1;
                const Eigen::VectorXd u2 = u + 0.5 * h * k1;
                const Eigen::VectorXd k2 = gen_.Q * u2;
                const double a2 = c_of(u2), b2 = y1 + 0.5 * h * a1;
                const Eigen::VectorXd u3 = u + 0.5 * h * k2;
                const Eigen::VectorXd k3 = gen_.Q * u3;
                const double a3 = c_of(u3), b3 = y1 + 0.5 * h * a2;
                const Eigen::VectorXd u4 = u + h * k3;
                const Eigen::VectorXd k4 = gen_.Q * u4;
                const double a4 = c_of(u4), b4 = y1 + h * a3;
                u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
                y2 += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
                y1 += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
                t += h;
            }
            out.push_back(2.0 * y2);
        }
        return out;
    }

private:
    CanonicalEnsemble ens_;
    GeneratorMatrix gen_;
    CurrentVector cur_;
    double direct_limit_;
};

inline ResolventResult exact_resolvent(const CanonicalEnsemble& ens, double lambda) {
    return ResolventSolver(ens).solve(lambda);
}

// Checks of the degree structure on the full 2^V state space at density 1/2, where
// the uniform measure is the Bernoulli(1/2) product measure and xi_x = 2 eta_x - 1.
// Functions are expanded in the Walsh basis xi_Lambda via a fast Walsh-Hadamard transform.
struct DualityReport {
    double s_degree_leak = 0.0;    // weight of S xi_Lambda outside degree |Lambda|
    double a_same_degree = 0.0;    // weight of A xi_Lambda in degree |Lambda| (the M part)
    double a_other_leak = 0.0;     // weight of A xi_Lambda outside degrees |Lambda| +- 1
    double m_on_xi0_xie1 = 0.0;    // |M (xi_0 xi_e1)|
    double a_plus_mean = 0.0;      // max |sum_Gamma (A_+ F)_Gamma| over random F
    double adjoint_defect = 0.0;   // max |<A_- G, F> + <G, A_+ F>| relative
    int trials = 0;
};

namespace detail {
inline void walsh_hadamard(std::vector<double>& a) {
    const std::size_t n = a.size();
    for (std::size_t h = 1; h < n; h <<= 1)
        for (std::size_t i = 0; i < n; i += h << 1)
            for (std::size_t j = i; j < i + h; ++j) {
                const double x = a[j], y = a[j + h];
                a[j] = x + y;
                a[j + h] = x - y;
            }
}
}  // namespace detail

inline DualityReport verify_duality_degree2(int lx = 3, int ly = 3, int trials = 8, std::uint64_t seed = 1) {
    const int v = lx * ly;
    if (v > 20) throw CapacityError("full state space limited to V <= 20");
    const std::size_t n = std::size_t(1) << v;
    std::vector<std::uint64_t> states(n);
    for (std::size_t i = 0; i < n; ++i) states[i] = i;
    const SpMat q = build_rate_matrix(states, lx, ly, [](std::uint64_t m) { return m; }, JumpRates{});
    const SpMat qt = SpMat(q.transpose());
    const SpMat s = 0.5 * (q + qt), a = 0.5 * (q - qt);

    // Walsh function value: xi_Lambda(eta) = prod (2 eta_x - 1) = (-1)^{|Lambda \ eta|}
    auto walsh = [&](std::uint64_t lam) {
        Eigen::VectorXd f(static_cast<Eigen::Index>(n));
        for (std::size_t m = 0; m < n; ++m) f[Eigen::Index(m)] = (std::popcount(lam & ~m) & 1) ? -1.0 : 1.0;
        return f;
    };
    // coefficient of xi_Gamma in f: 2^-V sum_eta xi_Gamma(eta) f(eta)
    auto coeffs = [&](const Eigen::VectorXd& f) {
        std::vector<double> c(n);
        for (std::size_t m = 0; m < n; ++m) c[m] = f[Eigen::Index(m)];
        detail::walsh_hadamard(c);
        // WHT gives sum_eta (-1)^{popcount(Gamma & eta)} f; convert to xi basis
        std::vector<double> out(n);
        for (std::size_t g = 0; g < n; ++g) {
            const int sign = (std::popcount(std::uint64_t(g)) & 1) ? -1 : 1;
            out[g] = sign * c[g] / double(n);
        }
        return out;
    };
    auto from_coeffs = [&](const std::vector<double>& c) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(Eigen::Index(n));
        for (std::size_t g = 0; g < n; ++g)
            if (c[g] != 0.0) f += c[g] * walsh(g);
        return f;
    };

    DualityReport rep;
    rep.trials = trials;
    // degree bookkeeping for every two-point Lambda
    for (int x = 0; x < v; ++x)
        for (int y = x + 1; y < v; ++y) {
            const std::uint64_t lam = (1ULL << x) | (1ULL << y);
            const Eigen::VectorXd f = walsh(lam);
            const auto cs = coeffs(s * f);
            const auto ca = coeffs(a * f);
            for (std::size_t g = 0; g < n; ++g) {
                const int d = std::popcount(std::uint64_t(g));
                if (d != 2) rep.s_degree_leak = std::max(rep.s_degree_leak, std::abs(cs[g]));
                if (d == 2) rep.a_same_degree = std::max(rep.a_same_degree, std::abs(ca[g]));
                if (d != 1 && d != 3) rep.a_other_leak = std::max(rep.a_other_leak, std::abs(ca[g]));
            }
            if (x == 0 && y == 1) {
                double mm = 0.0;
                for (std::size_t g = 0; g < n; ++g)
                    if (std::popcount(std::uint64_t(g)) == 2) mm += ca[g] * ca[g];
                rep.m_on_xi0_xie1 = std::sqrt(mm);
            }
        }

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    auto random_degree = [&](int deg) {
        std::vector<double> c(n, 0.0);
        for (std::size_t g = 0; g < n; ++g)
            if (std::popcount(std::uint64_t(g)) == deg) c[g] = nd(gen);
        return c;
    };
    auto project = [&](const std::vector<double>& c, int deg) {
        std::vector<double> out(n, 0.0);
        for (std::size_t g = 0; g < n; ++g)
            if (std::popcount(std::uint64_t(g)) == deg) out[g] = c[g];
        return out;
    };
    auto dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double r = 0.0;
        for (std::size_t g = 0; g < n; ++g) r += x[g] * y[g];
        return r;
    };
    for (int t = 0; t < trials; ++t) {
        const auto fc = random_degree(2);
        const auto gc = random_degree(3);
        const Eigen::VectorXd f = from_coeffs(fc), g = from_coeffs(gc);
        const auto apf = project(coeffs(a * f), 3);  // A_+ F
        const auto amg = project(coeffs(a * g), 2);  // A_- G
        double sum = 0.0;
        for (double c : apf) sum += c;
        rep.a_plus_mean = std::max(rep.a_plus_mean, std::abs(sum));
        // Walsh functions are orthonormal under the uniform measure
        const double lhs = dot(amg, fc), rhs = dot(gc, apf);
        const double scale = std::max(1e-300, std::abs(lhs) + std::abs(rhs));
        rep.adjoint_defect = std::max(rep.adjoint_defect, std::abs(lhs + rhs) / scale);
    }
    return rep;
}

}  // namespace asep
