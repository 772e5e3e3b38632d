#include "herdlab/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "herdlab/rng.hpp"

namespace herdlab {

namespace {

struct KindProfile {
    const char* sector_names[5];
    const char* prefixes[5];
    double market_loading;
    double sector_loadings[5];
    std::size_t default_days;
};

// Factor loadings tuned against the calibration pipeline so the co-movement
// degrees of the generated panels land near the published per-market targets.
const KindProfile kNyseLike = {
    {"BasicMaterials", "ConsumerGoods", "IndustrialGoods", "Services", "Utility"},
    {"BM", "CG", "IG", "SV", "UT"},
    0.4266,
    {0.3738, 0.2210, 0.2747, 0.2606, 0.4582},
    4286,
};

const KindProfile kHkseLike = {
    {"RealEstate", "ConglomeratesIndustrial", "MaterialsTechnology", "Services",
     "ConsumerGoods"},
    {"RE", "CO", "MT", "SV", "CG"},
    0.3723,
    {0.3283, 0.2917, 0.2008, 0.1939, 0.1374},
    2146,
};

const KindProfile kNoise = {
    {"NoiseA", "NoiseB", "NoiseC", "NoiseD", "NoiseE"},
    {"NA", "NB", "NC", "ND", "NE"},
    0.0,
    {0.0, 0.0, 0.0, 0.0, 0.0},
    4001,
};

const KindProfile& profile_for(FixtureKind kind) {
    switch (kind) {
        case FixtureKind::nyse_like: return kNyseLike;
        case FixtureKind::hkse_like: return kHkseLike;
        case FixtureKind::noise: return kNoise;
    }
    throw std::invalid_argument("unknown fixture kind");
}

struct Date {
    int year, month, day;
};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : lengths[m - 1];
}

int day_of_week(const Date& d) {
    // Sakamoto: 0 = Sunday.
    static const int offsets[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
    int y = d.year - (d.month < 3 ? 1 : 0);
    return (y + y / 4 - y / 100 + y / 400 + offsets[d.month - 1] + d.day) % 7;
}

void advance_to_next_weekday(Date& d) {
    do {
        if (++d.day > days_in_month(d.year, d.month)) {
            d.day = 1;
            if (++d.month > 12) {
                d.month = 1;
                ++d.year;
            }
        }
    } while (day_of_week(d) == 0 || day_of_week(d) == 6);
}

std::string format_date(const Date& d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

} // namespace

FixtureKind parse_fixture_kind(const std::string& name) {
    if (name == "nyse-like") return FixtureKind::nyse_like;
    if (name == "hkse-like") return FixtureKind::hkse_like;
    if (name == "noise") return FixtureKind::noise;
    throw std::invalid_argument("unknown fixture kind '" + name +
                                "' (expected nyse-like, hkse-like or noise)");
}

PricePanel make_fixture(const FixtureSpec& spec) {
    if (spec.stocks_per_sector < 1)
        throw std::invalid_argument("fixture needs at least one stock per sector");
    const KindProfile& profile = profile_for(spec.kind);
    const std::size_t days = spec.days > 0 ? spec.days : profile.default_days;
    if (days < 2) throw std::invalid_argument("fixture needs at least two price rows");

    constexpr int kSectors = 5;
    const int per_sector = spec.stocks_per_sector;
    const std::size_t n = static_cast<std::size_t>(kSectors) * per_sector;

    PricePanel panel;
    panel.sectors.of_stock.resize(n);
    char buf[32];
    for (int j = 0; j < kSectors; ++j) {
        panel.sectors.names.emplace_back(profile.sector_names[j]);
        for (int s = 0; s < per_sector; ++s) {
            std::snprintf(buf, sizeof buf, "%s%02d", profile.prefixes[j], s + 1);
            panel.tickers.emplace_back(buf);
            panel.sectors.of_stock[static_cast<std::size_t>(j) * per_sector + s] = j;
        }
    }

    double idio[kSectors];
    const double a = profile.market_loading;
    for (int j = 0; j < kSectors; ++j) {
        double b = profile.sector_loadings[j];
        double rest = 1.0 - a * a - b * b;
        if (!(rest > 0.0)) throw std::invalid_argument("fixture loadings exceed unit variance");
        idio[j] = std::sqrt(rest);
    }

    constexpr double kVol = 0.015;
    constexpr double kDrift = 0.0002;

    panel.prices = Matrix(days, n);
    std::vector<double> level(n);
    for (std::size_t i = 0; i < n; ++i) {
        level[i] = 20.0 + static_cast<double>((i * 7) % 90);
        panel.prices(0, i) = level[i];
    }

    RngStream rng = substream(spec.seed, RngDomain::fixture,
                              static_cast<std::uint64_t>(spec.kind));
    for (std::size_t t = 1; t < days; ++t) {
        double market = rng.next_gaussian();
        double sector[kSectors];
        for (int j = 0; j < kSectors; ++j) sector[j] = rng.next_gaussian();
        for (std::size_t i = 0; i < n; ++i) {
            int j = panel.sectors.of_stock[i];
            double z = a * market + profile.sector_loadings[j] * sector[j] +
                       idio[j] * rng.next_gaussian();
            level[i] *= std::exp(kDrift + kVol * z);
            panel.prices(t, i) = level[i];
        }
    }

    Date date{1990, 1, 2};
    panel.dates.reserve(days);
    panel.dates.push_back(format_date(date));
    for (std::size_t t = 1; t < days; ++t) {
        advance_to_next_weekday(date);
        panel.dates.push_back(format_date(date));
    }
    return panel;
}

} // namespace herdlab
