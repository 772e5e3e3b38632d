#pragma once

// Independent oracles for the test suites. These deliberately avoid the
// library's implementation paths: the eigenvalue oracle locates roots of the
// characteristic polynomial det(A - x I) by inertia bisection, the weighted
// return oracle evaluates the double sum verbatim, and the co-movement oracle
// re-derives the day statistic from scratch with the standard library RNG.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "herdlab/matrix.hpp"

namespace oracle {

/// Number of eigenvalues of symmetric A strictly below x: the count of
/// negative pivots of the LDL^T factorization of A - x I (Sylvester inertia,
/// i.e. the sign changes of the characteristic polynomial's Sturm chain).
inline int eigenvalues_below(const herdlab::Matrix& a, double x) {
    const std::size_t n = a.rows();
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = a(i, j) - (i == j ? x : 0.0);

    // Unpivoted symmetric elimination; pivot signs give the inertia. An exact
    // zero pivot means x sits on an eigenvalue, counted as below.
    int negatives = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double d = m[k][k];
        if (d == 0.0) d = -1e-300;
        if (d < 0.0) ++negatives;
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m[i][k] / d;
            for (std::size_t j = k + 1; j < n; ++j) m[i][j] -= f * m[k][j];
        }
    }
    return negatives;
}

/// All eigenvalues of a symmetric matrix, ascending, by bisecting the
/// eigenvalue counting function over a Gershgorin enclosure.
inline std::vector<double> symmetric_eigenvalues(const herdlab::Matrix& a,
                                                 double tol = 1e-12) {
    const std::size_t n = a.rows();
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) radius += std::fabs(a(i, j));
        lo = std::min(lo, a(i, i) - radius);
        hi = std::max(hi, a(i, i) + radius);
    }
    lo -= 1.0;
    hi += 1.0;

    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double a0 = lo, b0 = hi;
        // Smallest x with at least k+1 eigenvalues below or at x.
        while (b0 - a0 > tol * std::max(1.0, std::fabs(b0))) {
            double mid = 0.5 * (a0 + b0);
            if (eigenvalues_below(a, mid) >= static_cast<int>(k + 1))
                b0 = mid;
            else
                a0 = mid;
        }
        out[k] = 0.5 * (a0 + b0);
    }
    return out;
}

/// Weighted average return evaluated as the literal double sum
/// k * sum_l xi_l * sum_{m=0..l-1} R(t-m), history oldest..newest.
inline double weighted_return_double_sum(const std::vector<double>& history,
                                         const std::vector<double>& xi, double k) {
    const std::size_t L = xi.size();
    double total = 0.0;
    for (std::size_t l = 1; l <= L; ++l) {
        double window = 0.0;
        for (std::size_t m = 0; m < l; ++m) {
            // R(t - m); history.back() is R(t), entries before the start are 0.
            if (m < history.size()) window += history[history.size() - 1 - m];
        }
        total += xi[l - 1] * window;
    }
    return k * total;
}

/// One day's co-movement statistic for i.i.d. standard normal returns,
/// written out from the definition: zeta and v_dom - v_non.
struct DayStat {
    double zeta;
    double amplitude_gap;
};

inline DayStat iid_normal_day_stat(std::size_t stocks, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double v_plus = 0.0, v_minus = 0.0;
    std::size_t rising = 0, falling = 0;
    for (std::size_t i = 0; i < stocks; ++i) {
        double r = normal(rng);
        if (r > 0.0) {
            v_plus += r * r;
            ++rising;
        } else if (r < 0.0) {
            v_minus += r * r;
            ++falling;
        }
    }
    v_plus /= static_cast<double>(stocks);
    v_minus /= static_cast<double>(stocks);
    DayStat s;
    s.amplitude_gap = std::fabs(v_plus - v_minus);
    std::size_t dominating = v_plus >= v_minus ? rising : falling;
    s.zeta = static_cast<double>(dominating) / static_cast<double>(stocks);
    return s;
}

/// Monte-Carlo moments of the day statistic for n i.i.d. normal stocks:
/// H = E[zeta] * E[v_dom - v_non], plus the variances needed to form the
/// standard error of a T-day product-of-means estimate (delta method).
struct ComovementOracle {
    double mean_zeta = 0.0, var_zeta = 0.0;
    double mean_gap = 0.0, var_gap = 0.0;
    std::size_t days = 0;

    double h() const { return mean_zeta * mean_gap; }
    double stderr_for(std::size_t T) const {
        double var = (var_zeta * mean_gap * mean_gap + var_gap * mean_zeta * mean_zeta) /
                     static_cast<double>(T);
        return std::sqrt(var);
    }
};

inline ComovementOracle comovement_iid_oracle(std::size_t stocks, std::size_t days,
                                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    long double sz = 0.0L, sz2 = 0.0L, sg = 0.0L, sg2 = 0.0L;
    for (std::size_t d = 0; d < days; ++d) {
        DayStat s = iid_normal_day_stat(stocks, rng);
        sz += s.zeta;
        sz2 += s.zeta * s.zeta;
        sg += s.amplitude_gap;
        sg2 += s.amplitude_gap * s.amplitude_gap;
    }
    ComovementOracle o;
    o.days = days;
    o.mean_zeta = static_cast<double>(sz / days);
    o.var_zeta = static_cast<double>(sz2 / days) - o.mean_zeta * o.mean_zeta;
    o.mean_gap = static_cast<double>(sg / days);
    o.var_gap = static_cast<double>(sg2 / days) - o.mean_gap * o.mean_gap;
    return o;
}

} // namespace oracle
