#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "herdlab/calibration.hpp"
#include "herdlab/fixtures.hpp"
#include "herdlab/manifest.hpp"
#include "herdlab/panel.hpp"
#include "test_util.hpp"

using namespace herdlab;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(HERDLAB_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& file) {
    return nlohmann::json::parse(testutil::read_file(file));
}

/// Small calibrated setup shared by the CLI cases: fixture panel + params.
struct CliSandbox {
    testutil::TempDir dir;
    fs::path prices, sectors, params;

    CliSandbox() {
        FixtureSpec spec;
        spec.kind = FixtureKind::nyse_like;
        spec.days = 500;
        auto panel = make_fixture(spec);
        prices = dir / "prices.csv";
        sectors = dir / "sectors.csv";
        params = dir / "params.json";
        write_prices_csv(panel, prices);
        write_sectors_csv(panel.tickers, panel.sectors, sectors);

        // Keep the simulation small: few agents, short horizon.
        auto normalized = normalize(log_returns(panel));
        CalibrationConfig cfg;
        cfg.agents = 3000;
        cfg.max_horizon = 50;
        cfg.burn_in = 100;
        cfg.T_out = 120;
        write_params_json(calibrate(normalized, cfg), params);
    }
};

} // namespace

TEST_CASE("cli: fixtures then calibrate") {
    testutil::TempDir dir;
    CHECK(run_cli("fixtures --kind nyse-like --days 400 --seed 3 --out " +
                  (dir / "fix").string()) == 0);
    CHECK(fs::exists(dir / "fix" / "prices.csv"));
    CHECK(fs::exists(dir / "fix" / "sectors.csv"));
    CHECK(fs::exists(dir / "fix" / "fixtures_manifest.json"));

    fs::path params = dir / "params.json";
    CHECK(run_cli("calibrate --prices " + (dir / "fix" / "prices.csv").string() +
                  " --sectors " + (dir / "fix" / "sectors.csv").string() + " --N 2000 --L 30" +
                  " --out " + params.string()) == 0);
    auto j = read_json(params);
    CHECK(j["n"] == 150);
    CHECK(j["n_sec"] == 5);
    CHECK(j["L"] == 30);
    CHECK(j["N"] == 2000);
    CHECK(j["H"].size() == 5);
    double H_M = j["H_M"].get<double>();
    for (auto& h : j["H"]) CHECK(h.get<double>() > H_M);
    CHECK(j["P"].get<double>() > 0.0);
    CHECK(j["T_out"] == 399);
    CHECK(fs::exists(dir / "params.summary.txt"));

    SUBCASE("--p override recomputes P") {
        fs::path params2 = dir / "params2.json";
        CHECK(run_cli("calibrate --prices " + (dir / "fix" / "prices.csv").string() +
                      " --sectors " + (dir / "fix" / "sectors.csv").string() +
                      " --N 2000 --L 30 --p 0.004 --out " + params2.string()) == 0);
        auto j2 = read_json(params2);
        CHECK(j2["p"] == 0.004);
        CHECK(j2["P"].get<double>() < j["P"].get<double>());
        CHECK(j2["H_M"] == j["H_M"]);
    }
}

TEST_CASE("cli: simulate is reproducible and validates flags") {
    CliSandbox box;
    fs::path run1 = box.dir / "run1", run2 = box.dir / "run2";
    std::string base = "simulate --params " + box.params.string() + " --seed 1 --days 80";
    CHECK(run_cli(base + " --out " + run1.string()) == 0);
    CHECK(run_cli(base + " --out " + run2.string()) == 0);
    CHECK(file_digest(run1 / "returns.csv") == file_digest(run2 / "returns.csv"));

    auto manifest = read_json(run1 / "manifest.json");
    CHECK(manifest["seed"] == 1);
    REQUIRE(manifest["outputs"].contains("returns.csv"));
    CHECK(manifest["outputs"]["returns.csv"].get<std::string>() ==
          file_digest(run1 / "returns.csv"));

    auto panel = read_returns_csv(run1 / "returns.csv", run1 / "sectors.csv");
    CHECK(panel.days() == 80);
    CHECK(panel.stocks() == 150);
    CHECK(panel.kind == ReturnKind::simulated_count);

    SUBCASE("different seed changes the digest") {
        fs::path run3 = box.dir / "run3";
        CHECK(run_cli("simulate --params " + box.params.string() +
                      " --seed 2 --days 80 --out " + run3.string()) == 0);
        CHECK(file_digest(run3 / "returns.csv") != file_digest(run1 / "returns.csv"));
    }
    SUBCASE("zero days is a usage error") {
        CHECK(run_cli("simulate --params " + box.params.string() + " --days 0 --out " +
                      (box.dir / "bad").string()) == 1);
    }
    SUBCASE("missing params file is an input error") {
        CHECK(run_cli("simulate --params " + (box.dir / "nope.json").string() + " --out " +
                      (box.dir / "bad").string()) == 6);
    }
}

TEST_CASE("cli: analyze emits report and plot files") {
    CliSandbox box;
    fs::path run = box.dir / "run";
    REQUIRE(run_cli("simulate --params " + box.params.string() + " --seed 4 --out " +
                    run.string()) == 0);
    fs::path out = box.dir / "analysis";
    CHECK(run_cli("analyze --returns " + (run / "returns.csv").string() + " --sectors " +
                  (run / "sectors.csv").string() + " --max-lag 20 --out " + out.string()) == 0);

    auto report = read_json(out / "report.json");
    CHECK(report["n"] == 150);
    CHECK(report["eigenvalues"].size() == 150);
    double trace = 0.0;
    for (auto& v : report["eigenvalues"]) trace += v.get<double>();
    CHECK(trace == doctest::Approx(150.0).epsilon(1e-6));
    CHECK(report["top_vectors"].size() == 3);
    CHECK(report["A"].size() == 21);
    CHECK(report["A"][0].get<double>() == doctest::Approx(1.0));
    CHECK(fs::exists(out / "A.csv"));
    CHECK(fs::exists(out / "eigvec_0.csv"));
    CHECK(fs::exists(out / "eigvec_2.csv"));
    CHECK(fs::exists(out / "eighist.csv"));

    SUBCASE("json format writes the report only") {
        fs::path only = box.dir / "json-only";
        CHECK(run_cli("analyze --returns " + (run / "returns.csv").string() + " --sectors " +
                      (run / "sectors.csv").string() + " --format json --out " +
                      only.string()) == 0);
        CHECK(fs::exists(only / "report.json"));
        CHECK(!fs::exists(only / "A.csv"));
    }
}

TEST_CASE("cli: analyze a two-stock toy panel") {
    testutil::TempDir dir;
    testutil::write_file(dir / "r.csv", "t,X,Y\n1,0.5,-0.5\n2,-1,1\n3,2,-2\n4,0.25,1.5\n"
                                        "5,-0.75,0.25\n6,1.25,-1\n");
    testutil::write_file(dir / "s.csv", "ticker,sector\nX,A\nY,B\n");
    fs::path out = dir / "toy";
    CHECK(run_cli("analyze --returns " + (dir / "r.csv").string() + " --sectors " +
                  (dir / "s.csv").string() + " --max-lag 2 --out " + out.string()) == 0);
    auto report = read_json(out / "report.json");
    REQUIRE(report["eigenvalues"].size() == 2);
    double sum = report["eigenvalues"][0].get<double>() + report["eigenvalues"][1].get<double>();
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("cli: pipeline end to end with seed aggregation") {
    CliSandbox box;
    fs::path out = box.dir / "pipe";
    CHECK(run_cli("pipeline --prices " + box.prices.string() + " --sectors " +
                  box.sectors.string() +
                  " --N 3000 --L 50 --burn-in 100 --days 120 --seeds 1..3 --max-lag 20 --out " +
                  out.string()) == 0);
    CHECK(fs::exists(out / "params.json"));
    CHECK(fs::exists(out / "empirical" / "report.json"));
    for (int seed = 1; seed <= 3; ++seed) {
        fs::path seed_dir = out / ("seed-" + std::to_string(seed));
        CHECK(fs::exists(seed_dir / "returns.csv"));
        CHECK(fs::exists(seed_dir / "report.json"));
    }
    auto agg = read_json(out / "aggregate.json");
    CHECK(agg["seeds"].size() == 3);
    CHECK(agg["stats"]["lambda0"]["values"].size() == 3);
    CHECK(agg["stats"]["lambda0"]["mean"].get<double>() > 0.0);

    SUBCASE("missing sectors file fails in the first stage") {
        CHECK(run_cli("pipeline --prices " + box.prices.string() + " --sectors " +
                      (box.dir / "missing.csv").string() + " --out " +
                      (box.dir / "pipe2").string()) == 6);
    }
}

TEST_CASE("cli: usage errors") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("simulate") == 1);              // missing --params
    CHECK(run_cli("fixtures --kind sp500") == 1); // bad enum value
}
