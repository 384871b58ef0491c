#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"
#include "lattice.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace asep {

inline double compressibility(double rho) { return rho * (1.0 - rho); }
// closed form quoted for the drift; the rate-1 process itself drifts at 1 - 2 rho
inline double velocity_formula(double rho) { return 2.0 * (1.0 - 2.0 * rho); }
inline double flux_velocity(double rho, double right_rate = 1.0) { return right_rate * (1.0 - 2.0 * rho); }

struct SimulationSpec {
    int lx = 64, ly = 64;
    double rho = 0.5;
    int canonical_k = -1;  // >= 0: fixed particle number instead of Bernoulli
    std::vector<double> t_grid;
    int replicas = 100;
    int blocks = 20;
    std::uint64_t seed = 1;
    JumpRates rates{};
    bool structure = true;  // accumulate S(x,t)
    bool current = true;    // accumulate J(t)
    double w_mean = 0.0;    // subtracted from W inside J
};

// Column layout of the per-replica scalar row, for each t:
// [sum S, sum x1 S', sum x1^2 S', sum x2 S', sum x2^2 S', S' outside L/4, J, J^2]
// where S' is the replica-centred field (sums to zero).
inline constexpr int kScalars = 8;

// Site averages (1/V) sum_x f(x) of the moment weights. Moments are summed over the
// box |x_i| <= L_i/4 only (far bins carry noise, no signal, once the spread check
// passes). A zero-sum field misses chi times these averages.
struct Background {
    double x1 = 0, x1sq = 0, x2 = 0, x2sq = 0, outside = 0;
    Background(int lx, int ly) {
        auto mi = [](int d, int l) { return d > l / 2 ? d - l : d; };
        for (int y = 0; y < ly; ++y)
            for (int x = 0; x < lx; ++x) {
                const double a = mi(x, lx), b = mi(y, ly);
                if (4 * std::abs(a) > lx || 4 * std::abs(b) > ly) {
                    outside += 1;
                    continue;
                }
                x1 += a;
                x1sq += a * a;
                x2 += b;
                x2sq += b * b;
            }
        const double v = double(lx) * ly;
        x1 /= v;
        x1sq /= v;
        x2 /= v;
        x2sq /= v;
        outside /= v;
    }
    double operator[](int col) const {
        switch (col) {
            case 1: return x1;
            case 2: return x1sq;
            case 3: return x2;
            case 4: return x2sq;
            case 5: return outside;
            default: return 0.0;
        }
    }
};

struct SimulationResult {
    SimulationSpec spec;
    BlockSums scalars;                   // kScalars * n_t per replica
    std::vector<std::vector<double>> field_sum;    // [t][site] summed over replicas
    std::vector<std::vector<double>> field_sumsq;  // for per-bin errors
    double replicas = 0;
    std::size_t nt() const { return spec.t_grid.size(); }
    double chi() const { return compressibility(spec.rho); }
    double volume() const { return double(spec.lx) * spec.ly; }
};

namespace detail {

inline std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// Circular cross-correlation C(x) = sum_y a(y + x) b(y) on an lx x ly torus.
class Correlator {
public:
    Correlator(int lx, int ly) : lx_(lx), ly_(ly), nk_(std::size_t(ly) * (lx / 2 + 1)) {
        real_ = fftw_alloc_real(std::size_t(lx) * ly);
        a_ = fftw_alloc_complex(nk_);
        b_ = fftw_alloc_complex(nk_);
        std::lock_guard<std::mutex> g(fftw_mutex());
        fwd_ = fftw_plan_dft_r2c_2d(ly, lx, real_, a_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(ly, lx, a_, real_, FFTW_ESTIMATE);
    }
    ~Correlator() {
        std::lock_guard<std::mutex> g(fftw_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(a_);
        fftw_free(b_);
    }
    Correlator(const Correlator&) = delete;
    Correlator& operator=(const Correlator&) = delete;

    void set_reference(const std::vector<double>& b) {
        std::copy(b.begin(), b.end(), real_);
        fftw_execute_dft_r2c(fwd_, real_, b_);
    }
    // returns C(x) / V
    void correlate(const std::vector<double>& a, std::vector<double>& out) {
        std::copy(a.begin(), a.end(), real_);
        fftw_execute_dft_r2c(fwd_, real_, a_);
        for (std::size_t k = 0; k < nk_; ++k) {
            const double ar = a_[k][0], ai = a_[k][1], br = b_[k][0], bi = b_[k][1];
            a_[k][0] = ar * br + ai * bi;
            a_[k][1] = ai * br - ar * bi;
        }
        fftw_execute_dft_c2r(bwd_, a_, real_);
        const double v = double(lx_) * ly_;
        out.resize(std::size_t(lx_) * ly_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] / (v * v);
    }

private:
    int lx_, ly_;
    std::size_t nk_;
    double* real_;
    fftw_complex *a_, *b_;
    fftw_plan fwd_, bwd_;
};

inline int minimal_image(int d, int l) {
    d %= l;
    if (d < 0) d += l;
    return d > l / 2 ? d - l : d;
}

}  // namespace detail

inline void validate(const SimulationSpec& s) {
    if (s.lx < 2 || s.ly < 2) throw ParameterError("lattice must be at least 2x2");
    if (!(s.rho >= 0.0 && s.rho <= 1.0)) throw ParameterError("density must lie in [0,1]");
    if (s.replicas < 2) throw ParameterError("at least 2 replicas are needed for error bars");
    if (s.blocks < 2 || s.blocks > s.replicas) throw ParameterError("blocks must be in [2, replicas]");
    if (s.t_grid.empty()) throw ParameterError("empty time grid");
    for (std::size_t i = 0; i < s.t_grid.size(); ++i)
        if (s.t_grid[i] < 0.0 || (i && s.t_grid[i] <= s.t_grid[i - 1]))
            throw ParameterError("time grid must be nonnegative and increasing");
}

// Runs independent equilibrium replicas. Replica r uses RngStream(seed, r) and lands
// in block r * blocks / replicas, so results do not depend on the thread count.
inline SimulationResult run_replicas(const SimulationSpec& spec) {
    validate(spec);
    const std::size_t nt = spec.t_grid.size();
    const int v = spec.lx * spec.ly;
    SimulationResult res;
    res.spec = spec;
    res.scalars = BlockSums(std::size_t(spec.blocks), nt * kScalars);
    if (spec.structure) {
        res.field_sum.assign(nt, std::vector<double>(v, 0.0));
        res.field_sumsq.assign(nt, std::vector<double>(v, 0.0));
    }
    const int nthreads = std::max(1, std::min(thread_count(), spec.blocks));

    auto run_blocks = [&](int first_block, int last_block, SimulationResult& out) {
        std::unique_ptr<detail::Correlator> corr;
        if (spec.structure) corr = std::make_unique<detail::Correlator>(spec.lx, spec.ly);
        std::vector<double> a0(v), at(v), c(v), row(nt * kScalars);
        for (int r = 0; r < spec.replicas; ++r) {
            const int b = int((long long)r * spec.blocks / spec.replicas);
            if (b < first_block || b >= last_block) continue;
            RngStream rng(spec.seed, std::uint64_t(r));
            Configuration cfg = spec.canonical_k >= 0 ? sample_canonical(spec.canonical_k, spec.lx, spec.ly, rng)
                                                      : sample_bernoulli(spec.rho, spec.lx, spec.ly, rng);
            for (int i = 0; i < v; ++i) a0[i] = double(cfg[i]) - spec.rho;
            if (corr) corr->set_reference(a0);
            Process proc(cfg, spec.rates);
            CurrentIntegral cur(proc.configuration(), spec.rho, spec.w_mean);
            for (std::size_t k = 0; k < nt; ++k) {
                const double t = spec.t_grid[k];
                if (spec.current)
                    proc.advance(t, rng, cur);
                else
                    proc.advance(t, rng);
                double* s = &row[k * kScalars];
                std::fill(s, s + kScalars, 0.0);
                if (corr) {
                    const Configuration& now = proc.configuration();
                    for (int i = 0; i < v; ++i) at[i] = double(now[i]) - spec.rho;
                    corr->correlate(at, c);
                    // moments use the replica-centred field S - (m - rho)^2, which sums to
                    // zero; the uniform background it lacks is restored in the estimators
                    const double m = double(now.particle_count()) / v - spec.rho;
                    const double off = m * m;
                    s[0] = 0.0;
                    for (int i = 0; i < v; ++i) {
                        out.field_sum[k][i] += c[i];
                        out.field_sumsq[k][i] += c[i] * c[i];
                        s[0] += c[i];
                        c[i] -= off;
                    }
                    for (int i = 0; i < v; ++i) {
                        const int x1 = detail::minimal_image(i % spec.lx, spec.lx);
                        const int x2 = detail::minimal_image(i / spec.lx, spec.ly);
                        if (4 * std::abs(x1) > spec.lx || 4 * std::abs(x2) > spec.ly) {
                            s[5] += c[i];
                            continue;
                        }
                        s[1] += x1 * c[i];
                        s[2] += double(x1) * x1 * c[i];
                        s[3] += x2 * c[i];
                        s[4] += double(x2) * x2 * c[i];
                    }
                }
                if (spec.current) {
                    const double j = cur.integral(t);
                    s[6] = j;
                    s[7] = j * j;
                }
            }
            out.scalars.add(std::size_t(b), row);
            out.replicas += 1;
        }
    };

    if (nthreads == 1) {
        run_blocks(0, spec.blocks, res);
    } else {
        std::vector<SimulationResult> parts(nthreads, res);
        std::vector<std::thread> pool;
        for (int w = 0; w < nthreads; ++w) {
            const int b0 = w * spec.blocks / nthreads, b1 = (w + 1) * spec.blocks / nthreads;
            pool.emplace_back([&, w, b0, b1] { run_blocks(b0, b1, parts[w]); });
        }
        for (auto& th : pool) th.join();
        // blocks are disjoint across workers, so merging is exact and order-free
        for (auto& p : parts) {
            res.scalars.merge(p.scalars);
            res.replicas += p.replicas;
            for (std::size_t k = 0; k < res.field_sum.size(); ++k)
                for (int i = 0; i < v; ++i) {
                    res.field_sum[k][i] += p.field_sum[k][i];
                    res.field_sumsq[k][i] += p.field_sumsq[k][i];
                }
        }
    }
    return res;
}

struct CorrelationField {
    int lx = 0, ly = 0;
    std::vector<double> t_grid;
    std::vector<std::vector<double>> values;  // [t][site], S_hat(x,t)
    std::vector<std::vector<double>> errors;  // standard error per bin
    double replica_count = 0;
    Estimate sum_rule;    // sum_x S per t
    Estimate first_x1;    // sum_x x1 S per t
    Estimate outside;     // S mass outside L/4 per t
};

inline CorrelationField measure_structure_function(const SimulationResult& r) {
    if (r.field_sum.empty()) throw ParameterError("simulation ran without structure-function accumulation");
    if (r.replicas < 2) throw ParameterError("need at least 2 replicas");
    CorrelationField f;
    f.lx = r.spec.lx;
    f.ly = r.spec.ly;
    f.t_grid = r.spec.t_grid;
    f.replica_count = r.replicas;
    const std::size_t nt = r.nt();
    const double n = r.replicas;
    f.values.resize(nt);
    f.errors.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const auto& s = r.field_sum[k];
        const auto& q = r.field_sumsq[k];
        f.values[k].resize(s.size());
        f.errors[k].resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double m = s[i] / n;
            f.values[k][i] = m;
            f.errors[k][i] = std::sqrt(std::max(0.0, q[i] / n - m * m) / (n - 1.0));
        }
    }
    auto pick = [nt](int col) {
        return [nt, col](const std::vector<double>& m) {
            std::vector<double> out(nt);
            for (std::size_t k = 0; k < nt; ++k) out[k] = m[k * kScalars + col];
            return out;
        };
    };
    const Background bg(r.spec.lx, r.spec.ly);
    const double chi = r.chi();
    auto pick_bg = [nt, bg, chi](int col) {
        return [nt, bg, chi, col](const std::vector<double>& m) {
            std::vector<double> out(nt);
            for (std::size_t k = 0; k < nt; ++k) out[k] = m[k * kScalars + col] + chi * bg[col];
            return out;
        };
    };
    f.sum_rule = jackknife(r.scalars, pick(0));
    f.first_x1 = jackknife(r.scalars, pick_bg(1));
    f.outside = jackknife(r.scalars, pick_bg(5));
    return f;
}

struct DiffusivityCurve {
    std::vector<double> t_grid;
    Estimate d11_moments, d22_moments, velocity1, d11_gk;
};

inline DiffusivityCurve diffusivity_curves(const SimulationResult& r) {
    const double chi = r.chi();
    if (!(chi > 0.0)) throw ParameterError("compressibility must be positive");
    DiffusivityCurve c;
    c.t_grid = r.spec.t_grid;
    const std::size_t nt = r.nt();
    const double vol = r.volume();
    const double n = std::max(2.0, r.replicas);
    const auto& tg = r.spec.t_grid;
    const Background bg(r.spec.lx, r.spec.ly);
    auto moment = [&, nt](int c1, int c2) {
        return [&, nt, c1, c2](const std::vector<double>& m) {
            std::vector<double> out(nt, NAN);
            for (std::size_t k = 0; k < nt; ++k) {
                if (tg[k] <= 0.0) continue;  // t = 0 bin excluded
                const double m1 = m[k * kScalars + c1] / chi + bg[c1];
                const double m2 = m[k * kScalars + c2] / chi + bg[c2];
                out[k] = (m2 - m1 * m1) / tg[k];
            }
            return out;
        };
    };
    if (!r.field_sum.empty()) {
        c.d11_moments = jackknife(r.scalars, moment(1, 2));
        c.d22_moments = jackknife(r.scalars, moment(3, 4));
        c.velocity1 = jackknife(r.scalars, [&, nt](const std::vector<double>& m) {
            std::vector<double> out(nt, NAN);
            for (std::size_t k = 0; k < nt; ++k)
                if (tg[k] > 0.0) out[k] = (m[k * kScalars + 1] / chi + bg[1]) / tg[k];
            return out;
        });
    }
    if (r.spec.current) {
        // leave-one-block-out means are over about n(B-1)/B replicas; the unbiased
        // variance factor uses the full count, a negligible O(1/(nB)) difference
        c.d11_gk = jackknife(r.scalars, [&, nt](const std::vector<double>& m) {
            std::vector<double> out(nt, NAN);
            for (std::size_t k = 0; k < nt; ++k) {
                if (tg[k] <= 0.0) continue;
                const double mj = m[k * kScalars + 6], mj2 = m[k * kScalars + 7];
                const double var = (mj2 - mj * mj) * n / (n - 1.0);
                out[k] = 0.5 + var / (chi * vol * tg[k]);
            }
            return out;
        });
    }
    return c;
}

inline DiffusivityCurve diffusivity_from_moments(const SimulationResult& r) {
    if (r.field_sum.empty()) throw ParameterError("moment route needs the structure function");
    return diffusivity_curves(r);
}
inline DiffusivityCurve diffusivity_green_kubo(const SimulationResult& r) {
    if (!r.spec.current) throw ParameterError("Green-Kubo route needs the current integral");
    return diffusivity_curves(r);
}

// Laplace transform int_0^inf e^{-lambda t} t D(t) dt of a sampled curve. t D(t) is
// interpolated linearly (with t D = 0 at t = 0) and integrated exactly against the
// exponential; beyond the last sample a straight-line fit of t D over the final
// `tail_fraction` of the grid is continued to infinity.
struct LaplaceResult {
    double value = 0.0;
    double tail = 0.0;  // part contributed by the extrapolated tail
    bool truncation_warning = false;
};

inline LaplaceResult laplace_transform(const std::vector<double>& t, const std::vector<double>& d, double lambda,
                                       double tail_fraction = 0.25) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    if (t.size() != d.size() || t.size() < 2) throw ParameterError("curve needs at least two samples");
    std::vector<double> tt{0.0}, f{0.0};
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0) continue;
        tt.push_back(t[i]);
        f.push_back(t[i] * d[i]);
    }
    // int_a^b e^{-l s} (p + q s) ds in closed form
    auto seg = [lambda](double a, double b, double fa, double fb) {
        const double q = (fb - fa) / (b - a);
        const double p = fa - q * a;
        auto prim = [&](double s) { return -std::exp(-lambda * s) * ((p + q * s) / lambda + q / (lambda * lambda)); };
        return prim(b) - prim(a);
    };
    LaplaceResult r;
    for (std::size_t i = 1; i < tt.size(); ++i) r.value += seg(tt[i - 1], tt[i], f[i - 1], f[i]);
    const double tmax = tt.back();
    const std::size_t n = tt.size();
    const std::size_t first = std::min(n - 2, std::size_t(double(n) * (1.0 - tail_fraction)));
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (std::size_t i = first; i < n; ++i) {
        sx += tt[i];
        sy += f[i];
        sxx += tt[i] * tt[i];
        sxy += tt[i] * f[i];
        m += 1;
    }
    const double beta = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double alpha = (sy - beta * sx) / m;
    r.tail = std::exp(-lambda * tmax) * ((alpha + beta * tmax) / lambda + beta / (lambda * lambda));
    r.value += r.tail;
    r.truncation_warning = lambda * tmax < 5.0;
    return r;
}

struct LaplaceEstimate {
    double value = 0.0, error = 0.0, tail = 0.0;
    bool truncation_warning = false;
};

inline LaplaceEstimate laplace_transform_D(const std::vector<double>& t, const Estimate& curve, double lambda) {
    LaplaceEstimate e;
    const auto central = laplace_transform(t, curve.value, lambda);
    e.value = central.value;
    e.tail = central.tail;
    e.truncation_warning = central.truncation_warning;
    std::vector<double> reps;
    for (const auto& rep : curve.replicates) reps.push_back(laplace_transform(t, rep, lambda).value);
    e.error = jackknife_error(reps);
    return e;
}

// Right side of the Laplace identity given an oracle resolvent value
// R = <<w, (lambda - L)^{-1} w>>: 1/(2 lambda^2) + factor * R / (chi lambda^2).
// factor = 2 follows from Var J = 2 int int C; factor = 1 is the form quoted without it.
inline double laplace_identity_rhs(double lambda, double chi, double resolvent, double factor = 2.0) {
    return 0.5 / (lambda * lambda) + factor * resolvent / (chi * lambda * lambda);
}

}  // namespace asep
