// herdlab: calibrate, simulate and analyze the multi-level herding market
// model from daily price panels.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "herdlab/calibration.hpp"
#include "herdlab/engine.hpp"
#include "herdlab/errors.hpp"
#include "herdlab/fixtures.hpp"
#include "herdlab/manifest.hpp"
#include "herdlab/panel.hpp"
#include "herdlab/spectral.hpp"

namespace fs = std::filesystem;
using namespace herdlab;

namespace {

// Exit codes, also listed in the README:
//   0 success, 1 usage error, 2 input validation error, 3 calibration error,
//   4 simulation error, 5 numerical/analysis error, 6 I/O error.
enum ExitCode {
    kOk = 0,
    kUsage = 1,
    kValidation = 2,
    kCalibration = 3,
    kEngine = 4,
    kNumeric = 5,
    kIo = 6,
};

fs::path default_out_dir() {
    if (const char* env = std::getenv("HERDLAB_OUT")) return fs::path(env);
    return fs::path(".");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    auto range_pos = spec.find("..");
    if (range_pos != std::string::npos) {
        std::uint64_t lo = std::stoull(spec.substr(0, range_pos));
        std::uint64_t hi = std::stoull(spec.substr(range_pos + 2));
        if (hi < lo) throw std::invalid_argument("seed range is empty: " + spec);
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t comma = spec.find(',', start);
        std::string tok = spec.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw std::invalid_argument("no seeds in '" + spec + "'");
    return seeds;
}

struct CalibrateFlags {
    std::string prices, sectors;
    long long agents = 600000;
    int max_horizon = 1000;
    double exponent = 1.12;
    double p = 0.00826;
    std::optional<double> institutional;
    double turnover = 1.64;
    int days_per_year = 250;
    int burn_in = 10000;
    int days = 0;
    bool intersect_dates = false;

    void attach(CLI::App* cmd, bool require_inputs = true) {
        auto* po = cmd->add_option("--prices", prices, "prices CSV (date,<ticker>,... )");
        auto* so = cmd->add_option("--sectors", sectors, "sectors CSV (ticker,sector)");
        if (require_inputs) {
            po->required();
            so->required();
        }
        cmd->add_option("--N", agents, "agent count")->check(CLI::PositiveNumber);
        cmd->add_option("--L", max_horizon, "maximum investment horizon, days")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--exponent", exponent, "horizon power-law exponent")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--p", p, "individual daily buy (= sell) probability");
        cmd->add_option("--institutional", institutional,
                        "institutional holdings fraction; derives p together with "
                        "--turnover and --days-per-year");
        cmd->add_option("--turnover", turnover, "yearly turnover of individually held shares");
        cmd->add_option("--days-per-year", days_per_year, "trading days per year")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--burn-in", burn_in, "discarded leading simulation steps")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--days", days, "output series length (default: panel length)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_flag("--intersect-dates", intersect_dates,
                      "drop dates with missing cells instead of rejecting the panel");
    }

    CalibrationConfig config() const {
        CalibrationConfig cfg;
        cfg.agents = agents;
        cfg.max_horizon = max_horizon;
        cfg.exponent = exponent;
        cfg.p = p;
        cfg.institutional_fraction = institutional;
        cfg.yearly_turnover = turnover;
        cfg.trading_days_per_year = days_per_year;
        cfg.burn_in = burn_in;
        cfg.T_out = days;
        return cfg;
    }
};

/// Reruns fn with stage-tagged error messages, preserving the error type so
/// exit codes stay meaningful.
template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) {
    auto tag = [&](const char* what) { return std::string(stage) + ": " + what; };
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(tag(e.what()));
    } catch (const CalibrationError& e) {
        throw CalibrationError(tag(e.what()));
    } catch (const EngineError& e) {
        throw EngineError(tag(e.what()));
    } catch (const NumericError& e) {
        throw NumericError(tag(e.what()));
    } catch (const IoError& e) {
        throw IoError(tag(e.what()));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(tag(e.what()));
    }
}

ModelParams run_calibration(const CalibrateFlags& flags, const fs::path& params_out,
                            std::ostream& out_stream) {
    auto wall0 = std::chrono::steady_clock::now();
    LoadOptions load_opts;
    load_opts.intersect_dates = flags.intersect_dates;
    PricePanel prices = load_price_panel(flags.prices, flags.sectors, load_opts);
    NormalizedPanel normalized = normalize(log_returns(prices));
    ModelParams params = calibrate(normalized, flags.config());
    write_params_json(params, params_out);

    std::ostringstream summary;
    summary << "calibrated " << prices.stocks() << " stocks, " << prices.days()
            << " price rows, " << params.n_sec << " sectors\n";
    summary << "  H_M = " << params.co.market << '\n';
    for (int j = 0; j < params.n_sec; ++j)
        summary << "  H_" << (j + 1) << " (" << prices.sectors.names[j]
                << ") = " << params.co.sector[j] << '\n';
    summary << "  p = " << params.p << ", P = " << params.P << '\n';
    summary << "  N = " << params.agents << ", L = " << params.weights.max_horizon
            << ", burn_in = " << params.burn_in << ", T_out = " << params.T_out << '\n';
    summary << "params written to " << params_out.string() << '\n';
    out_stream << summary.str();
    fs::path summary_file = params_out;
    summary_file.replace_extension(".summary.txt");
    std::ofstream sf(summary_file);
    if (!sf) throw IoError("cannot write calibration summary: " + summary_file.string());
    sf << summary.str();

    RunManifest manifest;
    manifest.command = "calibrate";
    manifest.config = {{"prices", flags.prices},
                       {"sectors", flags.sectors},
                       {"N", flags.agents},
                       {"L", flags.max_horizon},
                       {"exponent", flags.exponent},
                       {"p", params.p},
                       {"burn_in", flags.burn_in}};
    manifest.add_input(flags.prices);
    manifest.add_input(flags.sectors);
    manifest.add_output(params_out);
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    manifest.write(params_out.parent_path() / "calibrate_manifest.json");
    return params;
}

struct SimulateFlags {
    std::uint64_t seed = 1;
    int days = -1;    // <0: keep the params value
    int burn_in = -1; // <0: keep the params value
    std::string population_mode = "random";
    int threads = 1;

    /// standalone = false leaves --days/--burn-in to the calibrate flags of a
    /// combined command.
    void attach(CLI::App* cmd, bool standalone = true) {
        cmd->add_option("--seed", seed, "master RNG seed");
        if (standalone) {
            cmd->add_option("--days", days, "output series length override");
            cmd->add_option("--burn-in", burn_in, "burn-in override");
        }
        cmd->add_option("--population-mode", population_mode, "random | uniform")
            ->check(CLI::IsMember({"random", "uniform"}));
        cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    PopulationMode mode() const {
        return population_mode == "uniform" ? PopulationMode::uniform : PopulationMode::random;
    }
};

SimOutput run_simulate(ModelParams params, const SimulateFlags& flags, const fs::path& out_dir,
                       const fs::path& params_file) {
    if (flags.days >= 0) {
        if (flags.days < 1) throw std::invalid_argument("--days must be >= 1");
        params.T_out = flags.days;
    }
    if (flags.burn_in >= 0) params.burn_in = flags.burn_in;
    ensure_dir(out_dir);

    SimOutput out = run_simulation(params, flags.seed, flags.threads, flags.mode());
    fs::path returns_file = out_dir / "returns.csv";
    fs::path sectors_file = out_dir / "sectors.csv";
    write_returns_csv(out.panel, returns_file);
    write_sectors_csv(out.panel.tickers, out.panel.sectors, sectors_file);

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.seed = flags.seed;
    manifest.config = {{"days", params.T_out},
                       {"burn_in", params.burn_in},
                       {"population_mode", flags.population_mode},
                       {"threads", flags.threads}};
    if (!params_file.empty()) manifest.add_input(params_file);
    manifest.add_output(returns_file);
    manifest.add_output(sectors_file);
    manifest.wall_seconds = out.wall_seconds;
    manifest.write(out_dir / "manifest.json");
    return out;
}

struct AnalyzeFlags {
    std::string returns_file, prices_file, sectors;
    std::size_t max_lag = 100;
    int bins = 50;
    int threads = 1;
    std::string format = "both";

    /// standalone = false registers only the observable knobs; inputs and
    /// threading come from the surrounding command's other flag sets.
    void attach(CLI::App* cmd, bool standalone = true) {
        if (standalone) {
            auto* ro = cmd->add_option("--returns", returns_file, "returns CSV to analyze");
            auto* po = cmd->add_option("--prices", prices_file,
                                       "price CSV to analyze (log returns are taken first)");
            cmd->add_option("--sectors", sectors, "sectors CSV")->required();
            ro->excludes(po);
            cmd->add_option("--threads", threads, "worker threads")
                ->check(CLI::PositiveNumber);
        }
        cmd->add_option("--max-lag", max_lag, "volatility autocorrelation lags");
        cmd->add_option("--bins", bins, "eigenvalue histogram bins")->check(CLI::PositiveNumber);
        cmd->add_option("--format", format, "output artifacts: csv | json | both")
            ->check(CLI::IsMember({"csv", "json", "both"}));
    }
};

SpectralReport run_analyze(const AnalyzeFlags& flags, const fs::path& out_dir) {
    auto wall0 = std::chrono::steady_clock::now();
    ReturnPanel panel;
    if (!flags.returns_file.empty()) {
        panel = read_returns_csv(flags.returns_file, flags.sectors);
    } else if (!flags.prices_file.empty()) {
        panel = log_returns(load_price_panel(flags.prices_file, flags.sectors));
    } else {
        throw std::invalid_argument("analyze needs --returns or --prices");
    }
    AnalysisOptions opts;
    opts.max_lag = flags.max_lag;
    opts.histogram_bins = flags.bins;
    opts.threads = flags.threads;
    SpectralReport report = analyze_panel(panel, opts);

    ensure_dir(out_dir);
    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config = {{"max_lag", flags.max_lag},
                       {"bins", flags.bins},
                       {"format", flags.format}};
    if (!flags.returns_file.empty()) manifest.add_input(flags.returns_file);
    if (!flags.prices_file.empty()) manifest.add_input(flags.prices_file);
    manifest.add_input(flags.sectors);

    if (flags.format != "csv") {
        write_report_json(report, out_dir / "report.json");
        manifest.add_output(out_dir / "report.json");
    }
    if (flags.format != "json") {
        write_report_csvs(report, out_dir);
        manifest.add_output(out_dir / "A.csv");
        manifest.add_output(out_dir / "eighist.csv");
        for (std::size_t k = 0; k < report.top_vectors; ++k)
            manifest.add_output(out_dir / ("eigvec_" + std::to_string(k) + ".csv"));
    }
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    manifest.write(out_dir / "analyze_manifest.json");
    return report;
}

struct SeedStats {
    double lambda0, lambda1, lambda2, lambda3;
    double ratio1;
    double a_head, a_tail;
};

SeedStats collect_stats(const SpectralReport& report) {
    SeedStats s{};
    const auto& ev = report.spectrum.eigenvalues;
    s.lambda0 = ev.size() > 0 ? ev[0] : 0.0;
    s.lambda1 = ev.size() > 1 ? ev[1] : 0.0;
    s.lambda2 = ev.size() > 2 ? ev[2] : 0.0;
    s.lambda3 = ev.size() > 3 ? ev[3] : 0.0;
    s.ratio1 = report.top_scores.size() > 1 ? report.top_scores[1].ratio : 0.0;
    double head = 0.0, tail = 0.0;
    int head_n = 0, tail_n = 0;
    for (std::size_t lag = 1; lag < report.autocorr.size(); ++lag) {
        if (lag <= 10) {
            head += report.autocorr[lag];
            ++head_n;
        }
        if (lag >= 41 && lag <= 50) {
            tail += report.autocorr[lag];
            ++tail_n;
        }
    }
    s.a_head = head_n ? head / head_n : 0.0;
    s.a_tail = tail_n ? tail / tail_n : 0.0;
    return s;
}

nlohmann::ordered_json aggregate_stat(const std::vector<double>& values) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    double stddev = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1))
                                      : 0.0;
    return {{"mean", mean}, {"std", stddev}, {"values", values}};
}

int run_pipeline(const CalibrateFlags& cal, const SimulateFlags& sim, const AnalyzeFlags& ana,
                 const std::vector<std::uint64_t>& seeds, const fs::path& out_dir) {
    ensure_dir(out_dir);
    ModelParams params = with_stage("pipeline stage calibrate", [&] {
        return run_calibration(cal, out_dir / "params.json", std::cout);
    });

    // Observables of the input panel itself, through the same analysis path.
    with_stage("pipeline stage analyze (empirical)", [&] {
        AnalyzeFlags empirical = ana;
        empirical.prices_file = cal.prices;
        empirical.returns_file.clear();
        empirical.sectors = cal.sectors;
        SpectralReport report = run_analyze(empirical, out_dir / "empirical");
        std::cout << "empirical lambda0 = " << report.spectrum.eigenvalues[0] << '\n';
        return 0;
    });

    std::vector<SeedStats> stats;
    for (std::uint64_t seed : seeds) {
        SimulateFlags per_seed = sim;
        per_seed.seed = seed;
        fs::path seed_dir = out_dir / ("seed-" + std::to_string(seed));
        with_stage("pipeline stage simulate", [&] {
            return run_simulate(params, per_seed, seed_dir, out_dir / "params.json");
        });
        AnalyzeFlags per_seed_ana = ana;
        per_seed_ana.returns_file = (seed_dir / "returns.csv").string();
        per_seed_ana.prices_file.clear();
        per_seed_ana.sectors = (seed_dir / "sectors.csv").string();
        SpectralReport report = with_stage("pipeline stage analyze",
                                           [&] { return run_analyze(per_seed_ana, seed_dir); });
        stats.push_back(collect_stats(report));
        std::cout << "seed " << seed << ": lambda0 = " << stats.back().lambda0
                  << ", lambda1 = " << stats.back().lambda1
                  << ", lambda2 = " << stats.back().lambda2 << '\n';
    }

    auto values = [&](double SeedStats::*field) {
        std::vector<double> v;
        for (const auto& s : stats) v.push_back(s.*field);
        return v;
    };
    nlohmann::ordered_json agg;
    agg["seeds"] = seeds;
    agg["stats"] = {{"lambda0", aggregate_stat(values(&SeedStats::lambda0))},
                    {"lambda1", aggregate_stat(values(&SeedStats::lambda1))},
                    {"lambda2", aggregate_stat(values(&SeedStats::lambda2))},
                    {"lambda3", aggregate_stat(values(&SeedStats::lambda3))},
                    {"lambda1_dominance_ratio", aggregate_stat(values(&SeedStats::ratio1))},
                    {"A_mean_lags_1_10", aggregate_stat(values(&SeedStats::a_head))},
                    {"A_mean_lags_41_50", aggregate_stat(values(&SeedStats::a_tail))}};
    std::ofstream agg_out(out_dir / "aggregate.json");
    if (!agg_out) throw IoError("cannot write aggregate report");
    agg_out << agg.dump(2) << '\n';
    std::cout << "pipeline outputs in " << out_dir.string() << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-level herding market model toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::string out_arg;
    app.add_option("--out", out_arg, "output directory (default: $HERDLAB_OUT or .)")
        ->envname("HERDLAB_OUT");

    auto* cal_cmd = app.add_subcommand("calibrate", "compute model parameters from a price panel");
    CalibrateFlags cal_flags;
    cal_flags.attach(cal_cmd);
    std::string params_out = "params.json";
    cal_cmd->add_option("--out", params_out, "params JSON path");

    auto* sim_cmd = app.add_subcommand("simulate", "run the herding simulation");
    SimulateFlags sim_flags;
    sim_flags.attach(sim_cmd);
    std::string params_in;
    sim_cmd->add_option("--params", params_in, "params JSON from calibrate")->required();
    std::string sim_out;
    sim_cmd->add_option("--out", sim_out, "output directory");

    auto* ana_cmd = app.add_subcommand("analyze", "spectral and volatility observables");
    AnalyzeFlags ana_flags;
    ana_flags.attach(ana_cmd);
    std::string ana_out;
    ana_cmd->add_option("--out", ana_out, "output directory");

    auto* pipe_cmd = app.add_subcommand("pipeline", "calibrate, simulate and analyze end to end");
    CalibrateFlags pipe_cal;
    pipe_cal.attach(pipe_cmd);
    SimulateFlags pipe_sim;
    pipe_sim.attach(pipe_cmd, /*standalone=*/false);
    AnalyzeFlags pipe_ana;
    pipe_ana.attach(pipe_cmd, /*standalone=*/false);
    std::string seeds_spec;
    pipe_cmd->add_option("--seeds", seeds_spec, "seed list: 1..5 or 1,2,3 (default: --seed)");
    std::string pipe_out;
    pipe_cmd->add_option("--out", pipe_out, "output directory");

    auto* fix_cmd = app.add_subcommand("fixtures", "generate a synthetic price panel");
    std::string fix_kind = "nyse-like";
    fix_cmd->add_option("--kind", fix_kind, "nyse-like | hkse-like | noise")
        ->check(CLI::IsMember({"nyse-like", "hkse-like", "noise"}));
    std::uint64_t fix_seed = 1;
    fix_cmd->add_option("--seed", fix_seed, "generation seed");
    std::size_t fix_days = 0;
    fix_cmd->add_option("--days", fix_days, "price rows (default per kind)");
    int fix_per_sector = 30;
    fix_cmd->add_option("--stocks-per-sector", fix_per_sector, "stocks per sector")
        ->check(CLI::PositiveNumber);
    std::string fix_out;
    fix_cmd->add_option("--out", fix_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto out_dir = [&](const std::string& sub_arg) {
        if (!sub_arg.empty()) return fs::path(sub_arg);
        if (!out_arg.empty()) return fs::path(out_arg);
        return default_out_dir();
    };

    try {
        if (cal_cmd->parsed()) {
            fs::path out = params_out;
            if (out.has_parent_path()) ensure_dir(out.parent_path());
            run_calibration(cal_flags, out, std::cout);
        } else if (sim_cmd->parsed()) {
            ModelParams params = load_params_json(params_in);
            SimOutput out = run_simulate(params, sim_flags, out_dir(sim_out), params_in);
            std::cout << "simulated " << out.panel.days() << " days x " << out.panel.stocks()
                      << " stocks in " << out.wall_seconds << " s (seed " << out.seed << ")\n";
        } else if (ana_cmd->parsed()) {
            SpectralReport report = run_analyze(ana_flags, out_dir(ana_out));
            std::cout << "lambda0 = " << report.spectrum.eigenvalues[0];
            if (report.spectrum.size() > 2)
                std::cout << ", lambda1 = " << report.spectrum.eigenvalues[1]
                          << ", lambda2 = " << report.spectrum.eigenvalues[2];
            std::cout << '\n';
        } else if (pipe_cmd->parsed()) {
            std::vector<std::uint64_t> seeds =
                seeds_spec.empty() ? std::vector<std::uint64_t>{pipe_sim.seed}
                                   : parse_seed_list(seeds_spec);
            pipe_ana.threads = pipe_sim.threads;
            return run_pipeline(pipe_cal, pipe_sim, pipe_ana, seeds, out_dir(pipe_out));
        } else if (fix_cmd->parsed()) {
            FixtureSpec spec;
            spec.kind = parse_fixture_kind(fix_kind);
            spec.seed = fix_seed;
            spec.days = fix_days;
            spec.stocks_per_sector = fix_per_sector;
            PricePanel panel = make_fixture(spec);
            fs::path dir = out_dir(fix_out);
            ensure_dir(dir);
            write_prices_csv(panel, dir / "prices.csv");
            write_sectors_csv(panel.tickers, panel.sectors, dir / "sectors.csv");
            RunManifest manifest;
            manifest.command = "fixtures";
            manifest.seed = fix_seed;
            manifest.config = {{"kind", fix_kind},
                               {"days", panel.days()},
                               {"stocks_per_sector", fix_per_sector}};
            manifest.add_output(dir / "prices.csv");
            manifest.add_output(dir / "sectors.csv");
            manifest.write(dir / "fixtures_manifest.json");
            std::cout << "fixture panel: " << panel.days() << " days x " << panel.stocks()
                      << " stocks in " << dir.string() << '\n';
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kValidation;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << '\n';
        return kCalibration;
    } catch (const EngineError& e) {
        std::cerr << "simulation error: " << e.what() << '\n';
        return kEngine;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kOk;
}
