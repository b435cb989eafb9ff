#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vegan/tensor.hpp"

namespace vegan {

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// sqrt of the mean squared error between estimated and true per-row effects.
inline double pehe(const std::vector<double>& tau_hat, const std::vector<double>& tau) {
    if (tau_hat.size() != tau.size() || tau.empty())
        throw MetricError("pehe: vectors must be non-empty and of equal length");
    double s = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double e = tau_hat[i] - tau[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(tau.size()));
}

/// Absolute error of the estimated average effect.
inline double eps_cate(const std::vector<double>& tau_hat, const std::vector<double>& tau) {
    if (tau_hat.size() != tau.size() || tau.empty())
        throw MetricError("eps_cate: vectors must be non-empty and of equal length");
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        a += tau_hat[i];
        b += tau[i];
    }
    return std::fabs(a - b) / static_cast<double>(tau.size());
}

/// Relative deviation, in percent, between in-sample and corrupted errors.
inline double volatility(double e_in, double e_corr) {
    if (e_in <= 0.0) throw MetricError("volatility: in-sample error must be positive");
    return 100.0 * std::fabs(e_in - e_corr) / e_in;
}

/// Unbiased U-statistic estimate of squared MMD with a Gaussian kernel.
/// bandwidth <= 0 selects the median pairwise distance heuristic on A u B.
inline double mmd_rbf(const Tensor& A, const Tensor& B, double bandwidth = -1.0) {
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols())
        throw MetricError("mmd: expects rank-2 inputs with equal column counts");
    const std::size_t m = A.rows(), n = B.rows(), d = A.cols();
    if (m < 2 || n < 2) throw MetricError("mmd: need at least 2 rows per sample");

    auto sqdist = [d](const Tensor& X, std::size_t i, const Tensor& Y, std::size_t j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = X.at(i, k) - Y.at(j, k);
            s += diff * diff;
        }
        return s;
    };

    double sigma = bandwidth;
    if (sigma <= 0.0) {
        std::vector<double> dists;
        dists.reserve((m + n) * (m + n - 1) / 2);
        auto row = [&](std::size_t i) -> std::pair<const Tensor*, std::size_t> {
            return i < m ? std::make_pair(&A, i) : std::make_pair(&B, i - m);
        };
        for (std::size_t i = 0; i < m + n; ++i)
            for (std::size_t j = i + 1; j < m + n; ++j) {
                auto [Xi, ri] = row(i);
                auto [Xj, rj] = row(j);
                dists.push_back(std::sqrt(sqdist(*Xi, ri, *Xj, rj)));
            }
        std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
        sigma = dists[dists.size() / 2];
        if (sigma <= 0.0) sigma = 1.0;
    }
    const double gamma = 1.0 / (2.0 * sigma * sigma);

    double kaa = 0.0, kbb = 0.0, kab = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (i != j) kaa += std::exp(-gamma * sqdist(A, i, A, j));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) kbb += std::exp(-gamma * sqdist(B, i, B, j));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) kab += std::exp(-gamma * sqdist(A, i, B, j));

    const double dm = static_cast<double>(m), dn = static_cast<double>(n);
    return kaa / (dm * (dm - 1.0)) + kbb / (dn * (dn - 1.0)) - 2.0 * kab / (dm * dn);
}

/// Per-run evaluation record; MMD values are floored at 0 for reporting.
struct MetricsReport {
    double sqrt_pehe = 0.0;
    double eps_cate = 0.0;
    std::optional<double> volatility_pct;
    double mmd_treated_control = 0.0;
    std::optional<double> mmd_train_runtime;
    std::size_t n_eval = 0;
    std::uint64_t seed = 0;

    static double floor_mmd(double v) { return v < 0.0 ? 0.0 : v; }
};

struct Aggregate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

/// mean +- standard error (sample std / sqrt(n)) over seeds.
inline Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    a.count = values.size();
    if (values.empty()) return a;
    double s = 0.0;
    for (double v : values) s += v;
    a.mean = s / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        a.stderr_ = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return a;
}

}  // namespace vegan
