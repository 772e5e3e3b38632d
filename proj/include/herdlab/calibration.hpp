#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "herdlab/panel.hpp"

namespace herdlab {

/// Power-law investment-horizon weights xi_1..xi_L with the normalizing
/// coefficient k that keeps the weighted average return on the scale of the
/// raw returns.
struct HorizonWeights {
    int max_horizon = 0;     // L
    double exponent = 1.12;  // decay of xi_l ~ l^-exponent
    std::vector<double> xi;  // xi_1..xi_L at indices 0..L-1, sums to 1
    double k = 0.0;          // 1 / sum_l l*xi_l

    /// Single-pass kernel: kw[m] = k * sum_{l=m+1..L} xi_l, so that the
    /// weighted average return of a history is sum_m kw[m] * R(t-m). This is
    /// the double sum k*sum_l xi_l*sum_{m<l} R(t-m) with the summation order
    /// exchanged: R(t-m) appears for every l > m, collecting weight
    /// k*sum_{l>m} xi_l.
    std::vector<double> kernel;
};

/// Builds weights for horizons 1..L. Throws std::invalid_argument if L < 1.
HorizonWeights horizon_weights(int max_horizon, double exponent = 1.12);

/// Weighted average return over a history ordered oldest-to-newest, where
/// history.back() is the most recent return. Histories shorter than L are
/// treated as zero-padded on the old side; longer ones are rejected.
double weighted_return(std::span<const double> history, const HorizonWeights& weights);

/// One day's rising/falling trend amplitudes over a set of normalized returns.
struct TrendStats {
    double v_plus = 0.0;  // sum of r^2 over rising stocks / n_s
    double v_minus = 0.0; // sum of r^2 over falling stocks / n_s
    double v_dom = 0.0;
    double v_non = 0.0;
    double zeta = 0.0;    // fraction of stocks in the dominating trend
};

/// Zero returns belong to neither trend; a v+ == v- tie counts as rising.
TrendStats daily_trend_amplitudes(std::span<const double> day_returns);

/// Co-movement degree H = <zeta> * <v_dom - v_non> over the given stock
/// columns. Throws std::invalid_argument on an empty column set.
double co_movement_degree(const NormalizedPanel& panel, std::span<const std::size_t> columns);
double co_movement_market(const NormalizedPanel& panel);
double co_movement_sector(const NormalizedPanel& panel, int sector);

struct CoMovement {
    double market = 0.0;         // H_M
    std::vector<double> sector;  // H_j, one per sector
    double sector_mean() const;  // unweighted mean of H_j
};

/// Daily buy (= sell) probability of an individual investor from the yearly
/// turnover of individually held shares.
double individual_probability(double institutional_fraction, double yearly_turnover,
                              int trading_days);

/// Buy (= sell) probability of an M-group of average size n*H_M. Throws
/// CalibrationError if the result exceeds 0.5 (hold probability negative).
double group_probability(double p, int n, double h_market);

struct ModelParams {
    int n = 150;
    int n_sec = 5;
    long long agents = 600000;  // N
    HorizonWeights weights;
    CoMovement co;
    double p = 0.00826;  // individual daily buy (= sell) probability
    double P = 0.0;      // M-group buy (= sell) probability
    int T_out = 0;       // emitted series length
    int burn_in = 10000; // discarded leading steps

    int stocks_per_sector() const { return n / n_sec; }
    /// Throws CalibrationError / std::invalid_argument on violated invariants.
    void validate() const;
};

struct CalibrationConfig {
    long long agents = 600000;
    int max_horizon = 1000;
    double exponent = 1.12;
    double p = 0.00826;
    /// When set, p is derived from the holdings/turnover chain instead.
    std::optional<double> institutional_fraction;
    double yearly_turnover = 1.64;
    int trading_days_per_year = 250;
    int burn_in = 10000;
    int T_out = 0; // 0: use the calibrated panel's length
};

/// Computes every model parameter from a normalized panel plus configured
/// constants. Fails with CalibrationError if any sector's H_j <= H_M or the
/// panel's sectors are unsuitable for the simulator (empty or unequal sizes).
ModelParams calibrate(const NormalizedPanel& panel, const CalibrationConfig& config = {});

/// params JSON: {n, n_sec, N, L, exponent, H_M, H, p, P, burn_in, T_out}.
void write_params_json(const ModelParams& params, const std::filesystem::path& file);
ModelParams load_params_json(const std::filesystem::path& file);

} // namespace herdlab
