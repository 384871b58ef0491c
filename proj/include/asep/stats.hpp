#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace asep {

// Block-summed data for delete-one-block jackknife. Each block stores a count and
// the sum of per-replica vectors; estimators are functions of the pooled mean vector.
struct BlockSums {
    std::vector<double> count;
    std::vector<std::vector<double>> sum;

    BlockSums() = default;
    BlockSums(std::size_t blocks, std::size_t width) : count(blocks, 0.0), sum(blocks, std::vector<double>(width, 0.0)) {}

    std::size_t blocks() const { return count.size(); }
    std::size_t width() const { return sum.empty() ? 0 : sum.front().size(); }

    void add(std::size_t b, const std::vector<double>& x) {
        count[b] += 1.0;
        auto& s = sum[b];
        for (std::size_t i = 0; i < x.size(); ++i) s[i] += x[i];
    }

    void merge(const BlockSums& o) {
        for (std::size_t b = 0; b < blocks(); ++b) {
            count[b] += o.count[b];
            for (std::size_t i = 0; i < width(); ++i) sum[b][i] += o.sum[b][i];
        }
    }

    std::vector<double> mean_excluding(std::ptrdiff_t skip) const {
        std::vector<double> m(width(), 0.0);
        double n = 0.0;
        for (std::size_t b = 0; b < blocks(); ++b) {
            if (std::ptrdiff_t(b) == skip) continue;
            n += count[b];
            for (std::size_t i = 0; i < width(); ++i) m[i] += sum[b][i];
        }
        for (auto& x : m) x /= n;
        return m;
    }
    std::vector<double> mean() const { return mean_excluding(-1); }
    double total_count() const {
        double n = 0.0;
        for (double c : count) n += c;
        return n;
    }
};

struct Estimate {
    std::vector<double> value, error;
    std::vector<std::vector<double>> replicates;  // leave-one-block-out values
};

// Jackknife over blocks for a vector-valued estimator of the pooled means.
inline Estimate jackknife(const BlockSums& data, const std::function<std::vector<double>(const std::vector<double>&)>& f) {
    Estimate e;
    e.value = f(data.mean());
    const std::size_t nb = data.blocks();
    const std::size_t w = e.value.size();
    std::vector<double> avg(w, 0.0);
    std::size_t used = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        if (data.count[b] == 0.0) continue;
        e.replicates.push_back(f(data.mean_excluding(std::ptrdiff_t(b))));
        for (std::size_t i = 0; i < w; ++i) avg[i] += e.replicates.back()[i];
        ++used;
    }
    e.error.assign(w, 0.0);
    if (used < 2) {
        for (auto& x : e.error) x = NAN;
        return e;
    }
    for (auto& x : avg) x /= double(used);
    for (const auto& r : e.replicates)
        for (std::size_t i = 0; i < w; ++i) e.error[i] += (r[i] - avg[i]) * (r[i] - avg[i]);
    for (auto& x : e.error) x = std::sqrt(x * double(used - 1) / double(used));
    return e;
}

// Jackknife error of a scalar function of leave-one-out replicate vectors.
inline double jackknife_error(const std::vector<double>& reps) {
    const std::size_t n = reps.size();
    if (n < 2) return NAN;
    double m = 0.0;
    for (double r : reps) m += r;
    m /= double(n);
    double s = 0.0;
    for (double r : reps) s += (r - m) * (r - m);
    return std::sqrt(s * double(n - 1) / double(n));
}

}  // namespace asep
