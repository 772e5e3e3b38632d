#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "herdlab/calibration.hpp"
#include "herdlab/panel.hpp"
#include "herdlab/rng.hpp"
#include "herdlab/thread_pool.hpp"

namespace herdlab {

enum class PopulationMode { random, uniform };

/// Agents hold exactly one stock each for the whole run. Agents are
/// interchangeable within a stock and groups disband daily, so only the
/// per-stock head counts are observable.
struct AgentPopulation {
    long long total = 0;
    std::vector<long long> per_stock; // N_i, every entry >= 1
};

/// mode random: each agent draws a uniform stock (multinomial counts),
/// redrawn until no stock is empty. mode uniform: exactly N/n per stock.
AgentPopulation init_population(const ModelParams& params, std::uint64_t seed,
                                PopulationMode mode = PopulationMode::random);

struct StockHerding {
    double degree = 0.0;    // D_I = 1/groups
    long long groups = 0;   // G_I
};

/// I-group count for one stock: nominal count N_i / max(|R'|, 1), rounded
/// half away from zero and clamped to [1, N_i]. The floor keeps the average
/// group size at one agent or more, which also covers the all-zero start.
StockHerding stock_herding(double r_prime, long long agents_in_stock);

/// S-group count for one sector: 1/D_S with D_S = n*(H_j - H_M)/N_I_j,
/// rounded and clamped to [1, N_I_j]. Throws EngineError if H_j <= H_M.
long long sector_group_count(long long i_groups_in_sector, int n, double h_sector,
                             double h_market);

struct MarketGroupCounts {
    std::vector<long long> per_sector; // G_M_j: admissible M-group indices for sector j
    long long total = 0;               // max_j G_M_j
};

/// M-group counts per sector from the effective I-group numbers
/// N_M_j = H_bar * N_I_M / H_j and D_M_j = n*H_M/N_M_j. Each count is rounded
/// half away from zero with a floor of 1; the market total is their maximum.
MarketGroupCounts market_group_counts(long long i_groups_market,
                                      std::span<const double> h_sector, int n,
                                      double h_market);

/// Scratch for dispersion sampling: a persistent 0..K-1 pool so one sample
/// costs O(members) after swap undo, not O(targets).
class DispersionScratch {
public:
    void sample(std::size_t members, std::size_t targets, RngStream& rng,
                std::uint32_t* out);

private:
    void ensure(std::size_t targets);
    std::vector<std::uint32_t> pool_;
    std::vector<std::uint32_t> perm_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> swaps_;
};

/// Assigns members, grouped by origin, to targets so that members of one
/// origin land on distinct targets whenever the origin fits (uniform sample
/// without replacement), and otherwise round-robin over a fresh random
/// permutation (per-target loads from one origin differ by at most 1).
/// Members are ordered origin by origin in the returned vector.
std::vector<std::uint32_t> assign_with_dispersion(std::span<const std::size_t> origin_sizes,
                                                  std::size_t target_count, RngStream& rng);

/// Transient per-day herding hierarchy, exposed for inspection after each
/// simulated day. I-groups of one sector are stored contiguously, stock
/// blocks in column order.
struct DayState {
    long long day = 0;                       // 1-based, counts burn-in steps
    std::vector<double> r_prime;             // per stock
    std::vector<double> herding_degree;      // D_I per stock
    std::vector<long long> i_groups;         // G_I per stock
    std::vector<long long> i_groups_sector;  // N_I_j
    long long i_groups_market = 0;           // N_I_M
    std::vector<long long> s_groups;         // G_S_j
    std::vector<long long> m_groups;         // G_M_j
    long long m_groups_total = 0;
    std::vector<std::size_t> igroup_offset;  // per stock, offset into its sector block
    std::vector<std::vector<std::uint32_t>> s_of_igroup; // per sector, size N_I_j
    std::vector<std::vector<std::uint32_t>> m_of_sgroup; // per sector, size G_S_j
    std::vector<int> decisions;              // per M-group, one of -1/0/+1
};

/// Day-by-day multi-level herding simulator. All randomness comes from
/// counter-based substreams keyed on (seed, domain, day, index), so the
/// output is identical for any thread count.
class Simulator {
public:
    Simulator(ModelParams params, AgentPopulation population, std::uint64_t seed,
              int threads = 1);
    ~Simulator();

    /// Simulates one day and returns the per-stock integer returns.
    const std::vector<long long>& step_day();

    const DayState& day_state() const { return state_; }
    const ModelParams& params() const { return params_; }
    const AgentPopulation& population() const { return population_; }
    long long current_day() const { return state_.day; }

private:
    void form_stock_level();
    void form_upper_levels();
    void accumulate_returns();

    ModelParams params_;
    AgentPopulation population_;
    std::uint64_t seed_;
    ThreadPool pool_;
    std::vector<DispersionScratch> scratch_; // one per pool partition

    std::vector<double> history_;  // n rows of L slots, ring per stock
    std::size_t ring_pos_ = 0;     // slot that day t writes (t-1 mod L)
    DayState state_;
    std::vector<long long> returns_;
};

struct SimOutput {
    ReturnPanel panel;            // kind = simulated_count, T_out rows
    std::uint64_t seed = 0;
    int threads = 1;
    double wall_seconds = 0.0;
    long long steps = 0;          // burn_in + T_out
};

/// Runs burn_in + T_out steps from the all-zero initial history, discarding
/// the first burn_in rows. Stocks are named S000.. and sectors are contiguous
/// blocks of n/n_sec stocks named sector1..
SimOutput run_simulation(const ModelParams& params, std::uint64_t seed, int threads = 1,
                         PopulationMode mode = PopulationMode::random);

} // namespace herdlab
