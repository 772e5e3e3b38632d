#include "herdlab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "herdlab/errors.hpp"

namespace herdlab {

HorizonWeights horizon_weights(int max_horizon, double exponent) {
    if (max_horizon < 1) throw std::invalid_argument("max horizon must be >= 1");
    if (!(exponent > 0.0)) throw std::invalid_argument("horizon exponent must be positive");

    HorizonWeights w;
    w.max_horizon = max_horizon;
    w.exponent = exponent;
    w.xi.resize(max_horizon);

    long double norm = 0.0L;
    for (int l = 1; l <= max_horizon; ++l)
        norm += std::pow(static_cast<long double>(l), -static_cast<long double>(exponent));
    for (int l = 1; l <= max_horizon; ++l)
        w.xi[l - 1] = static_cast<double>(
            std::pow(static_cast<long double>(l), -static_cast<long double>(exponent)) / norm);

    // k = 1 / sum_l l*xi_l; the sum is accumulated from the small tail up.
    long double horizon_mean = 0.0L;
    for (int l = max_horizon; l >= 1; --l)
        horizon_mean += static_cast<long double>(l) * w.xi[l - 1];
    w.k = static_cast<double>(1.0L / horizon_mean);

    // Suffix masses from the tail to avoid cancellation.
    w.kernel.resize(max_horizon);
    long double suffix = 0.0L;
    for (int m = max_horizon - 1; m >= 0; --m) {
        suffix += w.xi[m]; // xi_{m+1}
        w.kernel[m] = static_cast<double>(static_cast<long double>(w.k) * suffix);
    }
    return w;
}

double weighted_return(std::span<const double> history, const HorizonWeights& weights) {
    const std::size_t L = weights.kernel.size();
    if (history.size() > L)
        throw std::invalid_argument("history longer than the maximum horizon");
    double acc = 0.0;
    const std::size_t len = history.size();
    for (std::size_t m = 0; m < len; ++m) acc += history[len - 1 - m] * weights.kernel[m];
    return acc;
}

TrendStats daily_trend_amplitudes(std::span<const double> day_returns) {
    if (day_returns.empty()) throw std::invalid_argument("trend amplitudes need >= 1 stock");
    TrendStats s;
    const double n_s = static_cast<double>(day_returns.size());
    std::size_t rising = 0, falling = 0;
    for (double r : day_returns) {
        if (r > 0.0) {
            s.v_plus += r * r;
            ++rising;
        } else if (r < 0.0) {
            s.v_minus += r * r;
            ++falling;
        }
    }
    s.v_plus /= n_s;
    s.v_minus /= n_s;
    s.v_dom = std::max(s.v_plus, s.v_minus);
    s.v_non = std::min(s.v_plus, s.v_minus);
    // Tie: the rising trend dominates.
    std::size_t dominating = s.v_plus >= s.v_minus ? rising : falling;
    s.zeta = static_cast<double>(dominating) / n_s;
    return s;
}

double co_movement_degree(const NormalizedPanel& panel,
                          std::span<const std::size_t> columns) {
    if (columns.empty()) throw std::invalid_argument("co-movement scope is empty");
    const std::size_t T = panel.days();
    if (T == 0) throw std::invalid_argument("co-movement needs at least one day");
    std::vector<double> day(columns.size());
    long double zeta_sum = 0.0L, amp_sum = 0.0L;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < columns.size(); ++c) day[c] = panel.r(t, columns[c]);
        TrendStats s = daily_trend_amplitudes(day);
        zeta_sum += s.zeta;
        amp_sum += s.v_dom - s.v_non;
    }
    return static_cast<double>((zeta_sum / T) * (amp_sum / T));
}

double co_movement_market(const NormalizedPanel& panel) {
    std::vector<std::size_t> cols(panel.stocks());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return co_movement_degree(panel, cols);
}

double co_movement_sector(const NormalizedPanel& panel, int sector) {
    auto cols = panel.sectors.members(sector);
    return co_movement_degree(panel, cols);
}

double CoMovement::sector_mean() const {
    if (sector.empty()) return 0.0;
    long double s = 0.0L;
    for (double h : sector) s += h;
    return static_cast<double>(s / sector.size());
}

double individual_probability(double institutional_fraction, double yearly_turnover,
                              int trading_days) {
    if (institutional_fraction < 0.0 || institutional_fraction >= 1.0)
        throw std::invalid_argument("institutional fraction must be in [0, 1)");
    if (!(yearly_turnover > 0.0))
        throw std::invalid_argument("yearly turnover must be positive");
    if (trading_days < 1) throw std::invalid_argument("trading days must be >= 1");
    double trades_per_year = yearly_turnover / (1.0 - institutional_fraction);
    double p = trades_per_year / trading_days / 2.0;
    if (p >= 0.5)
        throw CalibrationError("individual probability p = " + std::to_string(p) +
                               " is not below 0.5");
    return p;
}

double group_probability(double p, int n, double h_market) {
    if (!(p > 0.0) || p >= 0.5)
        throw std::invalid_argument("individual probability must be in (0, 0.5)");
    double exponent = static_cast<double>(n) * h_market;
    if (!(exponent > 0.0)) throw std::invalid_argument("n * H_M must be positive");
    double P = 1.0 - std::pow(1.0 - p, exponent);
    if (P > 0.5)
        throw CalibrationError("group probability P = " + std::to_string(P) +
                               " exceeds 0.5; the hold probability would be negative");
    return P;
}

void ModelParams::validate() const {
    if (n < 1) throw std::invalid_argument("stock count must be >= 1");
    if (n_sec < 1 || n % n_sec != 0)
        throw std::invalid_argument("stock count must be divisible by the sector count");
    if (agents < n) throw std::invalid_argument("need at least one agent per stock");
    if (weights.max_horizon < 1) throw std::invalid_argument("horizon weights not initialized");
    if (static_cast<int>(co.sector.size()) != n_sec)
        throw CalibrationError("expected one H value per sector");
    if (!(co.market > 0.0) || co.market >= 1.0)
        throw CalibrationError("H_M must lie in (0, 1)");
    for (int j = 0; j < n_sec; ++j) {
        if (!(co.sector[j] > 0.0) || co.sector[j] >= 1.0)
            throw CalibrationError("H_" + std::to_string(j + 1) + " must lie in (0, 1)");
        if (co.sector[j] <= co.market)
            throw CalibrationError("sector " + std::to_string(j + 1) + ": H_j = " +
                                   std::to_string(co.sector[j]) + " must exceed H_M = " +
                                   std::to_string(co.market));
    }
    if (!(p > 0.0) || p >= 0.5) throw CalibrationError("p must lie in (0, 0.5)");
    // P = 0 is degenerate but well-defined (everybody holds); calibration
    // itself always produces P > 0.
    if (P < 0.0 || P > 0.5) throw CalibrationError("P must lie in [0, 0.5]");
    if (burn_in < 0) throw std::invalid_argument("burn-in must be >= 0");
}

ModelParams calibrate(const NormalizedPanel& panel, const CalibrationConfig& config) {
    const int n = static_cast<int>(panel.stocks());
    const int n_sec = panel.sectors.n_sec();
    if (n_sec < 1) throw CalibrationError("panel has no sectors");
    auto counts = panel.sectors.counts();
    for (int j = 0; j < n_sec; ++j)
        if (counts[j] == 0)
            throw CalibrationError("sector '" + panel.sectors.names[j] + "' is empty");
    for (int j = 1; j < n_sec; ++j)
        if (counts[j] != counts[0])
            throw CalibrationError(
                "sectors must hold the same number of stocks for simulation (sector '" +
                panel.sectors.names[j] + "' has " + std::to_string(counts[j]) + ", sector '" +
                panel.sectors.names[0] + "' has " + std::to_string(counts[0]) + ")");

    ModelParams params;
    params.n = n;
    params.n_sec = n_sec;
    params.agents = config.agents;
    params.burn_in = config.burn_in;
    params.T_out = config.T_out > 0 ? config.T_out : static_cast<int>(panel.days());
    params.weights = horizon_weights(config.max_horizon, config.exponent);

    params.co.market = co_movement_market(panel);
    params.co.sector.resize(n_sec);
    for (int j = 0; j < n_sec; ++j) params.co.sector[j] = co_movement_sector(panel, j);
    for (int j = 0; j < n_sec; ++j)
        if (params.co.sector[j] <= params.co.market)
            throw CalibrationError("sector '" + panel.sectors.names[j] + "': H_j = " +
                                   std::to_string(params.co.sector[j]) +
                                   " does not exceed H_M = " +
                                   std::to_string(params.co.market) +
                                   "; the sector herding level would be empty");

    params.p = config.institutional_fraction
                   ? individual_probability(*config.institutional_fraction,
                                            config.yearly_turnover,
                                            config.trading_days_per_year)
                   : config.p;
    params.P = group_probability(params.p, n, params.co.market);
    params.validate();
    return params;
}

void write_params_json(const ModelParams& params, const std::filesystem::path& file) {
    nlohmann::ordered_json j;
    j["n"] = params.n;
    j["n_sec"] = params.n_sec;
    j["N"] = params.agents;
    j["L"] = params.weights.max_horizon;
    j["exponent"] = params.weights.exponent;
    j["H_M"] = params.co.market;
    j["H"] = params.co.sector;
    j["p"] = params.p;
    j["P"] = params.P;
    j["burn_in"] = params.burn_in;
    j["T_out"] = params.T_out;
    std::ofstream out(file);
    if (!out) throw IoError("cannot write file: " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + file.string());
}

ModelParams load_params_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open params file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("params file " + file.string() + ": " + e.what());
    }
    ModelParams params;
    try {
        params.n = j.at("n").get<int>();
        params.n_sec = j.at("n_sec").get<int>();
        params.agents = j.at("N").get<long long>();
        params.weights = horizon_weights(j.at("L").get<int>(), j.at("exponent").get<double>());
        params.co.market = j.at("H_M").get<double>();
        params.co.sector = j.at("H").get<std::vector<double>>();
        params.p = j.at("p").get<double>();
        params.P = j.at("P").get<double>();
        params.burn_in = j.at("burn_in").get<int>();
        params.T_out = j.at("T_out").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("params file " + file.string() + ": " + e.what());
    }
    params.validate();
    return params;
}

} // namespace herdlab
