#include "herdlab/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "herdlab/csv.hpp"
#include "herdlab/errors.hpp"

namespace herdlab {

std::vector<int> SectorMap::counts() const {
    std::vector<int> c(names.size(), 0);
    for (int j : of_stock) ++c[j];
    return c;
}

std::vector<std::size_t> SectorMap::members(int j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < of_stock.size(); ++i)
        if (of_stock[i] == j) out.push_back(i);
    return out;
}

namespace {

SectorMap load_sector_map(const std::filesystem::path& sectors_file,
                          const std::vector<std::string>& tickers) {
    auto lines = csv::read_lines(sectors_file);
    if (lines.empty()) throw ValidationError("sectors file is empty: " + sectors_file.string());
    auto header = csv::split(lines[0]);
    if (header.size() != 2 || header[0] != "ticker" || header[1] != "sector")
        throw ValidationError("sectors file must have header 'ticker,sector': " +
                              sectors_file.string());

    std::unordered_map<std::string, std::string> sector_label;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        auto fields = csv::split(lines[row]);
        if (fields.size() != 2)
            throw ValidationError("sectors file row " + std::to_string(row + 1) +
                                  ": expected 2 fields, got " + std::to_string(fields.size()));
        std::string ticker(fields[0]);
        std::string label(fields[1]);
        if (ticker.empty())
            throw ValidationError("sectors file row " + std::to_string(row + 1) +
                                  ": empty ticker");
        if (label.empty())
            throw ValidationError("sectors file row " + std::to_string(row + 1) +
                                  ": empty sector label for ticker '" + ticker + "'");
        if (!sector_label.emplace(ticker, label).second)
            throw ValidationError("sectors file: duplicate ticker '" + ticker + "'");
    }

    std::unordered_map<std::string, bool> known;
    for (const auto& t : tickers) known[t] = true;
    for (const auto& [ticker, label] : sector_label)
        if (!known.count(ticker))
            throw ValidationError("sectors file: ticker '" + ticker +
                                  "' does not appear in the price panel");

    SectorMap map;
    std::unordered_map<std::string, int> index_of_label;
    map.of_stock.resize(tickers.size());
    // Manifest order: first appearance of each label walking the sectors file
    // rows is not stable across hash maps, so use the ticker order of the
    // price header, which is the canonical stock order everywhere else.
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        auto it = sector_label.find(tickers[i]);
        if (it == sector_label.end())
            throw ValidationError("ticker '" + tickers[i] + "' has no sector assignment");
        auto [pos, inserted] = index_of_label.emplace(it->second, map.names.size());
        if (inserted) map.names.push_back(it->second);
        map.of_stock[i] = pos->second;
    }
    return map;
}

} // namespace

PricePanel load_price_panel(const std::filesystem::path& prices_file,
                            const std::filesystem::path& sectors_file,
                            const LoadOptions& opts) {
    auto lines = csv::read_lines(prices_file);
    if (lines.size() < 2)
        throw ValidationError("price panel needs a header and at least one row: " +
                              prices_file.string());
    auto header = csv::split(lines[0]);
    if (header.size() < 2 || header[0] != "date")
        throw ValidationError("price panel header must be 'date,<ticker>,...': " +
                              prices_file.string());

    PricePanel panel;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty())
            throw ValidationError("price panel header: empty ticker in column " +
                                  std::to_string(c + 1));
        panel.tickers.emplace_back(header[c]);
    }
    const std::size_t n = panel.tickers.size();

    std::vector<std::vector<double>> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        auto fields = csv::split(lines[li]);
        if (opts.intersect_dates) {
            bool incomplete = fields.size() != n + 1 ||
                              std::any_of(fields.begin(), fields.end(),
                                          [](std::string_view f) { return f.empty(); });
            if (incomplete) continue;
        }
        if (fields.size() != n + 1)
            throw ValidationError("price panel row " + std::to_string(li + 1) + ": expected " +
                                  std::to_string(n + 1) + " fields, got " +
                                  std::to_string(fields.size()));
        std::string date(fields[0]);
        if (!csv::is_iso_date(date))
            throw ValidationError("price panel row " + std::to_string(li + 1) +
                                  ": unparseable date '" + date + "'");
        std::vector<double> row(n);
        for (std::size_t c = 0; c < n; ++c) {
            std::string_view f = fields[c + 1];
            if (f.empty())
                throw ValidationError("price panel: missing cell at date " + date +
                                      ", ticker " + panel.tickers[c]);
            double v;
            if (!csv::parse_double(f, v))
                throw ValidationError("price panel: unparseable price at date " + date +
                                      ", ticker " + panel.tickers[c] + ": '" + std::string(f) +
                                      "'");
            if (!(v > 0.0) || !std::isfinite(v))
                throw ValidationError("price panel: non-positive price at date " + date +
                                      ", ticker " + panel.tickers[c]);
            row[c] = v;
        }
        if (!panel.dates.empty() && date <= panel.dates.back())
            throw ValidationError("price panel: dates not strictly increasing at row " +
                                  std::to_string(li + 1) + " (" + date + ")");
        panel.dates.push_back(std::move(date));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ValidationError("price panel has no usable rows: " + prices_file.string());

    panel.prices = Matrix(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < n; ++c) panel.prices(r, c) = rows[r][c];

    panel.sectors = load_sector_map(sectors_file, panel.tickers);
    return panel;
}

ReturnPanel log_returns(const PricePanel& panel) {
    if (panel.days() < 2)
        throw ValidationError("log returns need at least two price rows");
    ReturnPanel out;
    out.tickers = panel.tickers;
    out.sectors = panel.sectors;
    out.kind = ReturnKind::log_empirical;
    const std::size_t T = panel.days() - 1, n = panel.stocks();
    out.returns = Matrix(T, n);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < n; ++i)
            out.returns(t, i) = std::log(panel.prices(t + 1, i) / panel.prices(t, i));
    return out;
}

NormalizedPanel normalize(const ReturnPanel& panel) {
    const std::size_t T = panel.days(), n = panel.stocks();
    if (T < 2) throw ValidationError("normalization needs at least two return rows");
    NormalizedPanel out;
    out.tickers = panel.tickers;
    out.sectors = panel.sectors;
    out.r = Matrix(T, n);
    out.mean.resize(n);
    out.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double v = panel.returns(t, i);
            sum += v;
            sum2 += v * v;
        }
        double mean = sum / static_cast<double>(T);
        // Population variance <R^2> - <R>^2, computed in centered form for accuracy.
        double var = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double d = panel.returns(t, i) - mean;
            var += d * d;
        }
        var /= static_cast<double>(T);
        if (!(var > 0.0))
            throw CalibrationError("stock '" + panel.tickers[i] +
                                   "' has zero return variance; cannot normalize");
        double sigma = std::sqrt(var);
        out.mean[i] = mean;
        out.sigma[i] = sigma;
        for (std::size_t t = 0; t < T; ++t) out.r(t, i) = (panel.returns(t, i) - mean) / sigma;
    }
    return out;
}

void write_prices_csv(const PricePanel& panel, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write file: " + file.string());
    out << "date";
    for (const auto& t : panel.tickers) out << ',' << t;
    out << '\n';
    for (std::size_t r = 0; r < panel.days(); ++r) {
        out << panel.dates[r];
        for (std::size_t c = 0; c < panel.stocks(); ++c)
            out << ',' << csv::format_full(panel.prices(r, c));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + file.string());
}

void write_sectors_csv(const std::vector<std::string>& tickers, const SectorMap& sectors,
                       const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write file: " + file.string());
    out << "ticker,sector\n";
    for (std::size_t i = 0; i < tickers.size(); ++i)
        out << tickers[i] << ',' << sectors.names[sectors.of_stock[i]] << '\n';
    if (!out) throw IoError("write failed: " + file.string());
}

void write_returns_csv(const ReturnPanel& panel, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write file: " + file.string());
    out << 't';
    for (const auto& t : panel.tickers) out << ',' << t;
    out << '\n';
    const bool integer = panel.kind == ReturnKind::simulated_count;
    for (std::size_t r = 0; r < panel.days(); ++r) {
        out << (r + 1);
        for (std::size_t c = 0; c < panel.stocks(); ++c) {
            double v = panel.returns(r, c);
            if (integer)
                out << ',' << static_cast<long long>(v);
            else
                out << ',' << csv::format_full(v);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + file.string());
}

ReturnPanel read_returns_csv(const std::filesystem::path& returns_file,
                             const std::filesystem::path& sectors_file) {
    auto lines = csv::read_lines(returns_file);
    if (lines.size() < 2)
        throw ValidationError("returns file needs a header and at least one row: " +
                              returns_file.string());
    auto header = csv::split(lines[0]);
    if (header.size() < 2 || header[0] != "t")
        throw ValidationError("returns file header must be 't,<ticker>,...': " +
                              returns_file.string());

    ReturnPanel panel;
    for (std::size_t c = 1; c < header.size(); ++c) panel.tickers.emplace_back(header[c]);
    const std::size_t n = panel.tickers.size();
    const std::size_t T = lines.size() - 1;
    panel.returns = Matrix(T, n);
    bool all_integer = true;
    for (std::size_t r = 0; r < T; ++r) {
        auto fields = csv::split(lines[r + 1]);
        if (fields.size() != n + 1)
            throw ValidationError("returns file row " + std::to_string(r + 2) + ": expected " +
                                  std::to_string(n + 1) + " fields, got " +
                                  std::to_string(fields.size()));
        for (std::size_t c = 0; c < n; ++c) {
            double v;
            if (!csv::parse_double(fields[c + 1], v) || !std::isfinite(v))
                throw ValidationError("returns file row " + std::to_string(r + 2) +
                                      ", ticker " + panel.tickers[c] + ": bad value '" +
                                      std::string(fields[c + 1]) + "'");
            panel.returns(r, c) = v;
            if (v != std::floor(v)) all_integer = false;
        }
    }
    panel.kind = all_integer ? ReturnKind::simulated_count : ReturnKind::log_empirical;
    panel.sectors = load_sector_map(sectors_file, panel.tickers);
    return panel;
}

} // namespace herdlab
