#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace asep {

// Occupancy field on an L_x x L_y torus, one bit per site. Site index is x + L_x * y.
class Configuration {
public:
    Configuration() = default;
    Configuration(int lx, int ly) : lx_(lx), ly_(ly), words_((std::size_t(lx) * ly + 63) / 64, 0) {
        if (lx < 1 || ly < 1) throw ParameterError("lattice dimensions must be positive");
    }

    int width() const { return lx_; }
    int height() const { return ly_; }
    int volume() const { return lx_ * ly_; }
    int particle_count() const { return count_; }

    int site(int x, int y) const {
        x %= lx_;
        y %= ly_;
        if (x < 0) x += lx_;
        if (y < 0) y += ly_;
        return x + lx_ * y;
    }
    int x_of(int i) const { return i % lx_; }
    int y_of(int i) const { return i / lx_; }

    bool operator[](int i) const { return (words_[std::size_t(i) >> 6] >> (i & 63)) & 1ULL; }
    bool at(int x, int y) const { return (*this)[site(x, y)]; }

    void set(int i, bool v) {
        const std::uint64_t bit = 1ULL << (i & 63);
        auto& w = words_[std::size_t(i) >> 6];
        if (bool(w & bit) == v) return;
        w ^= bit;
        count_ += v ? 1 : -1;
    }

    // move a particle from occupied i to empty j
    void move(int i, int j) {
        words_[std::size_t(i) >> 6] &= ~(1ULL << (i & 63));
        words_[std::size_t(j) >> 6] |= 1ULL << (j & 63);
    }

    const std::vector<std::uint64_t>& words() const { return words_; }
    bool operator==(const Configuration& o) const {
        return lx_ == o.lx_ && ly_ == o.ly_ && words_ == o.words_;
    }

private:
    int lx_ = 0, ly_ = 0, count_ = 0;
    std::vector<std::uint64_t> words_;
};

enum class Axis { x = 1, y = 2 };

// Jump rates per direction. Default is the totally asymmetric x / symmetric y process.
struct JumpRates {
    double right = 1.0, left = 0.0, up = 0.5, down = 0.5;
    double cap() const { return right + left + up + down; }
    static JumpRates symmetric_y_only() { return {0.0, 0.0, 0.5, 0.5}; }
};

// Upper bound on the total jump rate, used for thinning.
struct RateBound {
    double per_particle_cap = 2.0;
    double total_cap(int particle_count) const { return per_particle_cap * particle_count; }
};

inline Configuration sample_bernoulli(double rho, int lx, int ly, RngStream& rng) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("density must lie in [0,1]");
    if (lx < 2 || ly < 2) throw ParameterError("lattice must be at least 2x2");
    Configuration c(lx, ly);
    for (int i = 0; i < c.volume(); ++i)
        if (rng.uniform() < rho) c.set(i, true);
    return c;
}

// Uniform configuration with exactly k particles (partial Fisher-Yates over sites).
inline Configuration sample_canonical(int k, int lx, int ly, RngStream& rng) {
    if (lx < 2 || ly < 2) throw ParameterError("lattice must be at least 2x2");
    const int v = lx * ly;
    if (k < 0 || k > v) throw ParameterError("particle count out of range");
    std::vector<int> sites(v);
    for (int i = 0; i < v; ++i) sites[i] = i;
    Configuration c(lx, ly);
    for (int i = 0; i < k; ++i) {
        int j = i + int(rng.below(std::uint64_t(v - i)));
        std::swap(sites[i], sites[j]);
        c.set(sites[i], true);
    }
    return c;
}

// Axis 1: eta_x (1 - eta_{x+e1}). Axis 2: (eta_{x+e2} - eta_x) / 2.
inline double instantaneous_current(const Configuration& c, int x, int y, Axis axis) {
    const int s = c.site(x, y);
    if (axis == Axis::x) return c[s] && !c[c.site(x + 1, y)] ? 1.0 : 0.0;
    return 0.5 * (double(c[c.site(x, y + 1)]) - double(c[s]));
}

// Observer with no side effects.
struct NullObserver {
    void before_move(const Configuration&, int, int, double) {}
    void after_move(const Configuration&, int, int) {}
};

// Exact continuous-time dynamics by uniformization. The configuration, the clock
// and a particle list live together so the hot loop is O(1) per proposal.
class Process {
public:
    Process(Configuration cfg, JumpRates rates = {}, double t0 = 0.0)
        : cfg_(std::move(cfg)), rates_(rates), time_(t0) {
        const int v = cfg_.volume();
        slot_.assign(v, -1);
        for (int i = 0; i < v; ++i)
            if (cfg_[i]) {
                slot_[i] = int(pos_.size());
                pos_.push_back(i);
            }
        nb_.resize(v);
        for (int i = 0; i < v; ++i) {
            int x = cfg_.x_of(i), y = cfg_.y_of(i);
            nb_[i] = {cfg_.site(x + 1, y), cfg_.site(x - 1, y), cfg_.site(x, y + 1), cfg_.site(x, y - 1)};
        }
        const double cap = rates_.cap();
        cum_ = {rates_.right / cap, (rates_.right + rates_.left) / cap,
                (rates_.right + rates_.left + rates_.up) / cap};
        bound_.per_particle_cap = cap;
    }

    const Configuration& configuration() const { return cfg_; }
    double time() const { return time_; }
    std::uint64_t events() const { return events_; }
    std::uint64_t accepted() const { return accepted_; }
    const std::vector<int>& particles() const { return pos_; }
    const std::array<int, 4>& neighbours(int i) const { return nb_[i]; }

    // Advance to t_target. Observer sees each accepted move before and after it happens.
    template <class Obs = NullObserver>
    void advance(double t_target, RngStream& rng, Obs&& obs = Obs{}) {
        if (t_target < time_) throw ParameterError("target time precedes current time");
        const int k = int(pos_.size());
        const double total = bound_.total_cap(k);
        if (k == 0 || total <= 0.0) {
            time_ = t_target;
            return;
        }
        for (;;) {
            const double dt = rng.exponential(total);
            if (time_ + dt > t_target) break;
            time_ += dt;
            ++events_;
            const int p = int(rng.below(std::uint64_t(k)));
            const double u = rng.uniform();
            const int dir = u < cum_[0] ? 0 : u < cum_[1] ? 1 : u < cum_[2] ? 2 : 3;
            const int from = pos_[p];
            const int to = nb_[from][dir];
            if (cfg_[to]) continue;
            obs.before_move(cfg_, from, to, time_);
            cfg_.move(from, to);
            pos_[p] = to;
            slot_[to] = p;
            slot_[from] = -1;
            ++accepted_;
            obs.after_move(cfg_, from, to);
        }
        // memorylessness lets us discard the overshooting clock
        time_ = t_target;
    }

private:
    Configuration cfg_;
    JumpRates rates_;
    RateBound bound_;
    double time_ = 0.0;
    std::vector<int> pos_, slot_;
    std::vector<std::array<int, 4>> nb_;
    std::array<double, 3> cum_{};
    std::uint64_t events_ = 0, accepted_ = 0;
};

inline Configuration step_ctmc(const Configuration& cfg, double t_now, double t_target, RngStream& rng,
                               JumpRates rates = {}) {
    Process p(cfg, rates, t_now);
    p.advance(t_target, rng);
    return p.configuration();
}

// Tracks W = sum_x (eta_x - rho)(eta_{x+e1} - rho) and its time integral, updated
// locally at each move.
class CurrentIntegral {
public:
    CurrentIntegral(const Configuration& c, double rho, double w_mean = 0.0, double t0 = 0.0)
        : rho_(rho), mean_(w_mean), last_(t0) {
        for (int i = 0; i < c.volume(); ++i) w_ += term(c, i);
    }

    void before_move(const Configuration& c, int from, int to, double t) {
        j_ += (w_ - mean_) * (t - last_);
        last_ = t;
        lefts_ = {left_of(c, from), from, left_of(c, to), to};
        before_ = local(c);
    }
    void after_move(const Configuration& c, int, int) { w_ += local(c) - before_; }

    // integral up to time t (W is constant since the last event)
    double integral(double t) const { return j_ + (w_ - mean_) * (t - last_); }
    double current() const { return w_; }

    double term(const Configuration& c, int i) const {
        const int r = c.site(c.x_of(i) + 1, c.y_of(i));
        return (double(c[i]) - rho_) * (double(c[r]) - rho_);
    }

private:
    static int left_of(const Configuration& c, int i) { return c.site(c.x_of(i) - 1, c.y_of(i)); }
    double local(const Configuration& c) const {
        double s = 0.0;
        for (int a = 0; a < 4; ++a) {
            bool dup = false;
            for (int b = 0; b < a; ++b) dup |= lefts_[b] == lefts_[a];
            if (!dup) s += term(c, lefts_[a]);
        }
        return s;
    }

    double rho_, mean_, last_;
    double w_ = 0.0, j_ = 0.0, before_ = 0.0;
    std::array<int, 4> lefts_{};
};

}  // namespace asep
