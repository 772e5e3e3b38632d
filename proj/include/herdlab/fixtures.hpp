#pragma once

#include <cstdint>
#include <string>

#include "herdlab/panel.hpp"

namespace herdlab {

/// Synthetic price panels for testing the pipeline without redistributable
/// market data. nyse_like / hkse_like mix a market factor, per-sector factors
/// and idiosyncratic noise with loadings tuned so the calibrated co-movement
/// degrees land near the respective targets; noise is fully independent.
enum class FixtureKind { nyse_like, hkse_like, noise };

struct FixtureSpec {
    FixtureKind kind = FixtureKind::nyse_like;
    std::uint64_t seed = 1;
    /// Price rows to emit; 0 picks the kind's default (4286 / 2146 / 4001).
    std::size_t days = 0;
    int stocks_per_sector = 30;
};

FixtureKind parse_fixture_kind(const std::string& name);

PricePanel make_fixture(const FixtureSpec& spec);

} // namespace herdlab
