#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "herdlab/matrix.hpp"

namespace herdlab {

enum class ReturnKind {
    log_empirical,  // ln(Y(t)/Y(t-1)) of a price panel
    simulated_count // integer demand-minus-supply from the simulator
};

/// Sector manifest shared by all panel types. Sector indices are contiguous,
/// assigned in first-appearance order of the labels in the sectors file.
struct SectorMap {
    std::vector<std::string> names;  // index -> label
    std::vector<int> of_stock;       // stock column -> sector index

    int n_sec() const { return static_cast<int>(names.size()); }
    std::vector<int> counts() const;
    /// Stock columns belonging to sector j.
    std::vector<std::size_t> members(int j) const;
};

/// Complete daily closing-price table: T dates x n tickers, all cells present
/// and strictly positive, dates strictly increasing.
struct PricePanel {
    std::vector<std::string> dates;
    std::vector<std::string> tickers;
    SectorMap sectors;
    Matrix prices; // T x n

    std::size_t days() const { return prices.rows(); }
    std::size_t stocks() const { return prices.cols(); }
};

struct ReturnPanel {
    std::vector<std::string> tickers;
    SectorMap sectors;
    Matrix returns; // T x n
    ReturnKind kind = ReturnKind::log_empirical;

    std::size_t days() const { return returns.rows(); }
    std::size_t stocks() const { return returns.cols(); }
};

/// Per-stock standardized returns: zero mean, unit population variance.
struct NormalizedPanel {
    std::vector<std::string> tickers;
    SectorMap sectors;
    Matrix r; // T x n
    std::vector<double> mean;
    std::vector<double> sigma;

    std::size_t days() const { return r.rows(); }
    std::size_t stocks() const { return r.cols(); }
};

struct LoadOptions {
    /// Drop any date row with a missing cell before validation instead of
    /// rejecting the panel.
    bool intersect_dates = false;
};

/// Loads and validates a price panel.
///
/// prices CSV: header "date,<ticker1>,...,<tickerN>", ISO-8601 dates, one row
/// per trading day. sectors CSV: header "ticker,sector". Throws
/// ValidationError naming the offending row/column on any defect.
PricePanel load_price_panel(const std::filesystem::path& prices_file,
                            const std::filesystem::path& sectors_file,
                            const LoadOptions& opts = {});

/// Logarithmic returns ln(Y(t)/Y(t-1)); output has T-1 rows.
ReturnPanel log_returns(const PricePanel& panel);

/// Standardizes each stock to zero mean and unit population (divide-by-T)
/// standard deviation. Throws CalibrationError naming the ticker if a stock
/// has zero variance.
NormalizedPanel normalize(const ReturnPanel& panel);

void write_prices_csv(const PricePanel& panel, const std::filesystem::path& file);
void write_sectors_csv(const std::vector<std::string>& tickers, const SectorMap& sectors,
                       const std::filesystem::path& file);

/// returns CSV: header "t,<ticker1>,...", row index t from 1. Simulated-count
/// panels serialize as integers, empirical ones with full precision.
void write_returns_csv(const ReturnPanel& panel, const std::filesystem::path& file);
ReturnPanel read_returns_csv(const std::filesystem::path& returns_file,
                             const std::filesystem::path& sectors_file);

} // namespace herdlab
