#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "herdlab/calibration.hpp"
#include "herdlab/errors.hpp"
#include "herdlab/fixtures.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace herdlab;

namespace {

NormalizedPanel panel_from_columns(const std::vector<std::vector<double>>& columns,
                                   std::vector<int> sector_of = {}) {
    ReturnPanel p;
    const std::size_t n = columns.size(), T = columns[0].size();
    p.returns = Matrix(T, n);
    for (std::size_t i = 0; i < n; ++i) {
        p.tickers.push_back("T" + std::to_string(i));
        for (std::size_t t = 0; t < T; ++t) p.returns(t, i) = columns[i][t];
    }
    if (sector_of.empty()) sector_of.assign(n, 0);
    int n_sec = *std::max_element(sector_of.begin(), sector_of.end()) + 1;
    for (int j = 0; j < n_sec; ++j) p.sectors.names.push_back("G" + std::to_string(j));
    p.sectors.of_stock = std::move(sector_of);
    return normalize(p);
}

} // namespace

TEST_CASE("horizon weights: closed forms at tiny L") {
    SUBCASE("L = 1") {
        auto w = horizon_weights(1);
        CHECK(w.xi == std::vector<double>{1.0});
        CHECK(w.k == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(w.kernel[0] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("L = 2 against direct evaluation") {
        auto w = horizon_weights(2);
        double ratio = std::pow(2.0, -1.12);
        double xi1 = 1.0 / (1.0 + ratio);
        CHECK(w.xi[0] == doctest::Approx(xi1).epsilon(1e-14));
        CHECK(w.xi[1] == doctest::Approx(1.0 - xi1).epsilon(1e-14));
        CHECK(w.xi[0] == doctest::Approx(0.68488).epsilon(1e-4));
        CHECK(w.xi[1] == doctest::Approx(0.31512).epsilon(1e-4));
        CHECK(w.k == doctest::Approx(1.0 / (1.0 + w.xi[1])).epsilon(1e-14));
        CHECK(w.k == doctest::Approx(0.76039).epsilon(1e-4));
    }
    SUBCASE("L < 1 rejected") { CHECK_THROWS_AS(horizon_weights(0), std::invalid_argument); }
}

TEST_CASE("horizon weights: normalization identities for every L up to 2000") {
    for (int L = 1; L <= 2000; ++L) {
        auto w = horizon_weights(L);
        long double mass = 0.0L, horizon_mean = 0.0L;
        bool decreasing = true;
        for (int l = 1; l <= L; ++l) {
            mass += w.xi[l - 1];
            horizon_mean += static_cast<long double>(l) * w.xi[l - 1];
            if (l > 1 && w.xi[l - 1] >= w.xi[l - 2]) decreasing = false;
        }
        bool ok = std::fabs(static_cast<double>(mass) - 1.0) < 1e-12 &&
                  std::fabs(w.k * static_cast<double>(horizon_mean) - 1.0) < 1e-12 &&
                  decreasing;
        if (!ok) { // report only failures to keep assertion counts sane
            CAPTURE(L);
            CHECK(ok);
        }
    }
    CHECK(true);
}

TEST_CASE("k matches the double-sum normalizer") {
    // The double sum sum_l sum_{m=l..L} xi_m reindexes to sum_m m*xi_m;
    // evaluated verbatim here as an O(L^2) cross-check.
    for (int L : {1, 2, 3, 7, 10, 100, 531, 1000}) {
        auto w = horizon_weights(L);
        long double double_sum = 0.0L;
        for (int l = 1; l <= L; ++l)
            for (int m = l; m <= L; ++m) double_sum += w.xi[m - 1];
        CHECK(std::fabs(w.k * static_cast<double>(double_sum) - 1.0) < 1e-12);
    }
}

TEST_CASE("94 percent of horizon weight sits below 500 days at L = 1000") {
    auto w = horizon_weights(1000);
    double below = 0.0;
    for (int l = 1; l < 500; ++l) below += w.xi[l - 1];
    CHECK(below == doctest::Approx(0.94).epsilon(0.006));
}

TEST_CASE("weighted return basics") {
    auto w = horizon_weights(2);
    SUBCASE("zero history") {
        std::vector<double> h{0.0, 0.0};
        CHECK(weighted_return(h, w) == 0.0);
    }
    SUBCASE("constant history is a fixed point") {
        for (int L : {1, 2, 5, 50}) {
            auto wl = horizon_weights(L);
            std::vector<double> h(L, 3.25);
            CHECK(weighted_return(h, wl) == doctest::Approx(3.25).epsilon(1e-12));
        }
    }
    SUBCASE("L = 2 hand expansion") {
        std::vector<double> h{1.0, 0.0}; // R(t-1) = 1, R(t) = 0
        CHECK(weighted_return(h, w) == doctest::Approx(w.k * w.xi[1]).epsilon(1e-14));
        CHECK(weighted_return(h, w) == doctest::Approx(0.23962).epsilon(1e-4));
    }
    SUBCASE("short history counts as zero-padded") {
        auto wl = horizon_weights(5);
        std::vector<double> recent{2.0};
        std::vector<double> padded{0.0, 0.0, 0.0, 0.0, 2.0};
        CHECK(weighted_return(recent, wl) == weighted_return(padded, wl));
    }
    SUBCASE("over-long history rejected") {
        std::vector<double> h{1.0, 2.0, 3.0};
        CHECK_THROWS_AS(weighted_return(h, w), std::invalid_argument);
    }
}

TEST_CASE("weighted return equals the double-sum oracle on random histories") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    std::uniform_int_distribution<int> horizon(1, 60);
    for (int rep = 0; rep < 300; ++rep) {
        int L = horizon(rng);
        auto w = horizon_weights(L);
        std::uniform_int_distribution<int> len(0, L);
        std::vector<double> h(len(rng));
        for (auto& v : h) v = value(rng);
        double fast = weighted_return(h, w);
        double slow = oracle::weighted_return_double_sum(h, w.xi, w.k);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
    }
}

TEST_CASE("weighted return is bounded and linear") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    auto w = horizon_weights(40);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x(40), y(40);
        double bound = 0.0;
        for (int i = 0; i < 40; ++i) {
            x[i] = value(rng);
            y[i] = value(rng);
            bound = std::max(bound, std::fabs(x[i]));
        }
        CHECK(std::fabs(weighted_return(x, w)) <= bound + 1e-12);

        double a = value(rng), b = value(rng);
        std::vector<double> mix(40);
        for (int i = 0; i < 40; ++i) mix[i] = a * x[i] + b * y[i];
        double lhs = weighted_return(mix, w);
        double rhs = a * weighted_return(x, w) + b * weighted_return(y, w);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("daily trend amplitudes") {
    SUBCASE("all rising") {
        auto s = daily_trend_amplitudes(std::vector<double>{1.0, 1.0});
        CHECK(s.v_plus == 1.0);
        CHECK(s.v_minus == 0.0);
        CHECK(s.v_dom == 1.0);
        CHECK(s.v_non == 0.0);
        CHECK(s.zeta == 1.0);
    }
    SUBCASE("tie goes to the rising trend") {
        auto s = daily_trend_amplitudes(std::vector<double>{1.0, -1.0});
        CHECK(s.v_plus == 0.5);
        CHECK(s.v_minus == 0.5);
        CHECK(s.v_dom == 0.5);
        CHECK(s.zeta == 0.5);
    }
    SUBCASE("zeros join neither trend") {
        auto s = daily_trend_amplitudes(std::vector<double>{2.0, -1.0, 0.0});
        CHECK(s.v_plus == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
        CHECK(s.v_minus == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(s.zeta == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
}

TEST_CASE("co-movement degree") {
    SUBCASE("one shared series gives H = 1") {
        std::vector<double> base{0.3, -1.2, 0.8, 2.0, -0.5, -1.4, 0.9, 1.1, -0.6, 0.7};
        auto panel = panel_from_columns({base, base, base});
        CHECK(co_movement_market(panel) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("column permutation leaves H unchanged") {
        std::mt19937_64 rng(21);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<std::vector<double>> cols(6, std::vector<double>(120));
        for (auto& c : cols)
            for (auto& v : c) v = noise(rng);
        auto panel = panel_from_columns(cols);
        double h = co_movement_market(panel);
        std::shuffle(cols.begin(), cols.end(), rng);
        auto shuffled = panel_from_columns(cols);
        CHECK(co_movement_market(shuffled) == doctest::Approx(h).epsilon(1e-12));
        CHECK(h > 0.0);
        CHECK(h < 1.0);
    }
    SUBCASE("i.i.d. noise matches the Monte-Carlo oracle within 3 standard errors") {
        const std::size_t stocks = 30, days = 2000;
        std::mt19937_64 rng(1234);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<std::vector<double>> cols(stocks, std::vector<double>(days));
        for (auto& c : cols)
            for (auto& v : c) v = noise(rng);
        auto panel = panel_from_columns(cols);
        double h = co_movement_market(panel);

        auto o = oracle::comovement_iid_oracle(stocks, 1000000, 4321);
        CHECK(std::fabs(h - o.h()) <= 3.0 * o.stderr_for(days));
    }
    SUBCASE("empty scope is rejected") {
        std::vector<double> base{1.0, -1.0, 0.5};
        auto panel = panel_from_columns({base});
        CHECK_THROWS_AS(co_movement_degree(panel, std::vector<std::size_t>{}),
                        std::invalid_argument);
    }
    SUBCASE("H is bounded by <zeta>*<v_dom> and the peak day activity") {
        std::mt19937_64 rng(77);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (int rep = 0; rep < 25; ++rep) {
            std::size_t n = 2 + rep % 7, T = 30 + rep * 3;
            std::vector<std::vector<double>> cols(n, std::vector<double>(T));
            std::vector<double> common(T);
            for (auto& v : common) v = noise(rng);
            for (auto& c : cols)
                for (std::size_t t = 0; t < T; ++t)
                    c[t] = 0.5 * common[t] + noise(rng);
            auto panel = panel_from_columns(cols);
            double h = co_movement_market(panel);

            double zeta_mean = 0.0, dom_mean = 0.0, peak = 0.0;
            std::vector<double> day(n);
            for (std::size_t t = 0; t < T; ++t) {
                double sq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    day[i] = panel.r(t, i);
                    sq += day[i] * day[i];
                }
                auto s = daily_trend_amplitudes(day);
                zeta_mean += s.zeta;
                dom_mean += s.v_dom;
                peak = std::max(peak, sq / static_cast<double>(n));
            }
            zeta_mean /= static_cast<double>(T);
            dom_mean /= static_cast<double>(T);
            CHECK(h >= 0.0);
            CHECK(h <= zeta_mean * dom_mean + 1e-12);
            CHECK(zeta_mean * dom_mean <= peak + 1e-12);
        }
    }
}

TEST_CASE("individual probability") {
    CHECK(std::fabs(individual_probability(0.603, 1.64, 250) - 0.00826) < 1e-5);
    CHECK(individual_probability(0.5, 1.0, 250) == doctest::Approx(0.004).epsilon(1e-12));
    CHECK_THROWS_AS(individual_probability(0.0, 0.0, 250), std::invalid_argument);
    CHECK_THROWS_AS(individual_probability(1.0, 1.0, 250), std::invalid_argument);
    // Excessive turnover pushes p past 0.5.
    CHECK_THROWS_AS(individual_probability(0.9, 300.0, 250), CalibrationError);
}

TEST_CASE("group probability") {
    double p = 0.00826;
    CHECK(group_probability(p, 150, 0.363) == doctest::Approx(0.363).epsilon(0.001 / 0.363));
    CHECK(group_probability(p, 150, 0.306) == doctest::Approx(0.317).epsilon(0.001 / 0.317));
    SUBCASE("vanishes with p") {
        double prev = group_probability(1e-9, 150, 0.363);
        CHECK(prev < 1e-6);
    }
    SUBCASE("strictly increasing in p, n and H_M") {
        CHECK(group_probability(0.009, 150, 0.363) > group_probability(0.008, 150, 0.363));
        CHECK(group_probability(p, 151, 0.363) > group_probability(p, 150, 0.363));
        CHECK(group_probability(p, 150, 0.364) > group_probability(p, 150, 0.363));
    }
    SUBCASE("P above one half is a calibration error") {
        CHECK_THROWS_AS(group_probability(0.4, 150, 0.363), CalibrationError);
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS(group_probability(0.0, 150, 0.363), std::invalid_argument);
        CHECK_THROWS_AS(group_probability(0.01, 150, 0.0), std::invalid_argument);
    }
}

TEST_CASE("calibrate wires the pieces together") {
    SUBCASE("identical series in every sector fail the H_j > H_M check") {
        std::vector<double> base{0.3, -1.2, 0.8, 2.0, -0.5, -1.4, 0.9, 1.1, -0.6, 0.7};
        auto panel = panel_from_columns({base, base, base, base}, {0, 0, 1, 1});
        CHECK_THROWS_AS(calibrate(panel), CalibrationError);
    }
    SUBCASE("unequal sector sizes are rejected") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<std::vector<double>> cols(5, std::vector<double>(50));
        for (auto& c : cols)
            for (auto& v : c) v = noise(rng);
        auto panel = panel_from_columns(cols, {0, 0, 0, 1, 1});
        CHECK_THROWS_WITH_AS(calibrate(panel), doctest::Contains("same number"),
                             CalibrationError);
    }
    SUBCASE("fixture panel calibrates with sane outputs") {
        FixtureSpec spec;
        spec.kind = FixtureKind::nyse_like;
        spec.days = 1600;
        auto prices = make_fixture(spec);
        auto panel = normalize(log_returns(prices));
        CalibrationConfig cfg;
        auto params = calibrate(panel, cfg);
        CHECK(params.n == 150);
        CHECK(params.n_sec == 5);
        CHECK(params.T_out == 1599);
        CHECK(params.co.market > 0.2);
        CHECK(params.co.market < 0.5);
        for (double h : params.co.sector) CHECK(h > params.co.market);
        CHECK(params.P > 0.2);
        CHECK(params.P < 0.5);
        CHECK(params.p == 0.00826);
        SUBCASE("p chain override recomputes P") {
            CalibrationConfig chain = cfg;
            chain.institutional_fraction = 0.603;
            auto params2 = calibrate(panel, chain);
            CHECK(params2.p == doctest::Approx(0.0082619).epsilon(1e-4));
            CHECK(params2.P != params.P);
        }
    }
}

TEST_CASE("params JSON round-trips") {
    FixtureSpec spec;
    spec.kind = FixtureKind::hkse_like;
    spec.days = 900;
    auto panel = normalize(log_returns(make_fixture(spec)));
    CalibrationConfig cfg;
    cfg.max_horizon = 64;
    cfg.agents = 3000;
    auto params = calibrate(panel, cfg);

    testutil::TempDir dir;
    write_params_json(params, dir / "params.json");
    auto loaded = load_params_json(dir / "params.json");
    CHECK(loaded.n == params.n);
    CHECK(loaded.n_sec == params.n_sec);
    CHECK(loaded.agents == params.agents);
    CHECK(loaded.weights.max_horizon == params.weights.max_horizon);
    CHECK(loaded.co.market == params.co.market);
    for (int j = 0; j < params.n_sec; ++j)
        CHECK(loaded.co.sector[j] == params.co.sector[j]);
    CHECK(loaded.p == params.p);
    CHECK(loaded.P == params.P);
    CHECK(loaded.T_out == params.T_out);
    CHECK(loaded.burn_in == params.burn_in);
}
