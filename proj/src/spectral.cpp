#include "herdlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "herdlab/csv.hpp"
#include "herdlab/errors.hpp"
#include "herdlab/thread_pool.hpp"

namespace herdlab {

Matrix cross_correlation(const NormalizedPanel& panel) {
    const std::size_t T = panel.days(), n = panel.stocks();
    if (T < 2) throw std::invalid_argument("cross-correlation needs at least two days");
    Matrix C(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            long double acc = 0.0L;
            for (std::size_t t = 0; t < T; ++t)
                acc += static_cast<long double>(panel.r(t, i)) * panel.r(t, j);
            double v = static_cast<double>(acc / T);
            C(i, j) = v;
            C(j, i) = v;
        }
    }
    return C;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
    const std::size_t n = a.rows();
    long double acc = 0.0L;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) acc += static_cast<long double>(a(p, q)) * a(p, q);
    return std::sqrt(static_cast<double>(2.0L * acc));
}

double frobenius_norm(const Matrix& a) {
    long double acc = 0.0L;
    for (double v : a.data()) acc += static_cast<long double>(v) * v;
    return std::sqrt(static_cast<double>(acc));
}

} // namespace

Spectrum eigendecompose(const Matrix& symmetric) {
    const std::size_t n = symmetric.rows();
    if (n == 0 || symmetric.cols() != n)
        throw std::invalid_argument("eigendecomposition needs a square matrix");
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
            if (std::fabs(symmetric(p, q) - symmetric(q, p)) >
                1e-12 * std::max(1.0, std::fabs(symmetric(p, q))))
                throw std::invalid_argument("matrix is not symmetric");

    Matrix a = symmetric;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double tol = 1e-12 * std::max(1.0, frobenius_norm(a));
    constexpr int kMaxSweeps = 60;
    bool converged = off_diagonal_norm(a) <= tol;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::fabs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    double arp = a(r, p), arq = a(r, q);
                    a(r, p) = arp - s * (arq + tau * arp);
                    a(p, r) = a(r, p);
                    a(r, q) = arq + s * (arp - tau * arq);
                    a(q, r) = a(r, q);
                }
                for (std::size_t r = 0; r < n; ++r) {
                    double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + tau * vrp);
                    v(r, q) = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        converged = off_diagonal_norm(a) <= tol;
    }
    if (!converged)
        throw NumericError("Jacobi eigendecomposition did not converge within 60 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    Spectrum out;
    out.eigenvalues.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t src = order[k];
        out.eigenvalues[k] = a(src, src);
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += v(r, src);
        double sign = sum < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = sign * v(r, src);
    }
    return out;
}

SectorScores sector_dominance(const Spectrum& spectrum, const SectorMap& sectors,
                              std::size_t k) {
    const std::size_t n = spectrum.vectors.rows();
    if (k >= spectrum.vectors.cols() || k >= spectrum.eigenvalues.size())
        throw std::invalid_argument("eigenvector index out of range");
    if (sectors.of_stock.size() != n)
        throw std::invalid_argument("sector map does not match the spectrum size");

    SectorScores out;
    const int n_sec = sectors.n_sec();
    out.mean_abs.assign(n_sec, 0.0);
    std::vector<int> counts(n_sec, 0);
    for (std::size_t i = 0; i < n; ++i) {
        out.mean_abs[sectors.of_stock[i]] += std::fabs(spectrum.component(i, k));
        ++counts[sectors.of_stock[i]];
    }
    for (int j = 0; j < n_sec; ++j)
        if (counts[j] > 0) out.mean_abs[j] /= counts[j];

    out.dominant = static_cast<int>(
        std::max_element(out.mean_abs.begin(), out.mean_abs.end()) - out.mean_abs.begin());
    double rest = 0.0;
    for (int j = 0; j < n_sec; ++j)
        if (j != out.dominant) rest += out.mean_abs[j];
    if (n_sec > 1) rest /= (n_sec - 1);
    out.ratio = rest > 0.0 ? out.mean_abs[out.dominant] / rest
                           : std::numeric_limits<double>::infinity();
    return out;
}

EigenvalueHistogram eigenvalue_histogram(const Spectrum& spectrum, int bins) {
    if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
    if (spectrum.size() == 0) throw std::invalid_argument("empty spectrum");

    EigenvalueHistogram out;
    const double top = std::max(spectrum.eigenvalues.front(), 0.0);
    const double hi = top > 0.0 ? top * 1.05 : 1.0;
    const double width = hi / bins;
    out.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) out.edges[b] = width * b;
    out.density.assign(bins, 0.0);
    for (double lambda : spectrum.eigenvalues) {
        int b = static_cast<int>(std::floor(lambda / width));
        b = std::clamp(b, 0, bins - 1);
        out.density[b] += 1.0;
    }
    const double mass = static_cast<double>(spectrum.size()) * width;
    for (auto& d : out.density) d /= mass;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, spectrum.size()); ++k)
        out.top.push_back(spectrum.eigenvalues[k]);
    return out;
}

std::vector<double> volatility_autocorrelation(const NormalizedPanel& panel,
                                               std::size_t max_lag, int threads) {
    const std::size_t T = panel.days(), n = panel.stocks();
    if (max_lag >= T)
        throw std::invalid_argument("max lag must be smaller than the series length");

    Matrix per_stock(n, max_lag + 1);
    ThreadPool pool(threads);
    std::vector<std::string> failures(n);
    pool.parallel_for(n, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> absr(T);
        for (std::size_t i = begin; i < end; ++i) {
            long double s1 = 0.0L, s2 = 0.0L;
            for (std::size_t t = 0; t < T; ++t) {
                absr[t] = std::fabs(panel.r(t, i));
                s1 += absr[t];
                s2 += absr[t] * absr[t];
            }
            const double mean = static_cast<double>(s1 / T);
            const double base = static_cast<double>(s2 / T) - mean * mean;
            if (!(base > 0.0)) {
                failures[i] = panel.tickers[i];
                continue;
            }
            for (std::size_t lag = 0; lag <= max_lag; ++lag) {
                long double acc = 0.0L;
                const std::size_t pairs = T - lag;
                for (std::size_t t = 0; t < pairs; ++t)
                    acc += static_cast<long double>(absr[t]) * absr[t + lag];
                double cov = static_cast<double>(acc / pairs) - mean * mean;
                per_stock(i, lag) = cov / base;
            }
        }
    });
    for (const auto& ticker : failures)
        if (!ticker.empty())
            throw ValidationError("stock '" + ticker +
                                  "' has constant volatility; autocorrelation undefined");

    std::vector<double> out(max_lag + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        long double acc = 0.0L;
        for (std::size_t i = 0; i < n; ++i) acc += per_stock(i, lag);
        out[lag] = static_cast<double>(acc / n);
    }
    return out;
}

SpectralReport analyze_panel(const ReturnPanel& panel, const AnalysisOptions& opts) {
    NormalizedPanel normalized = normalize(panel);
    SpectralReport report;
    report.n = panel.stocks();
    report.days = panel.days();
    report.kind = panel.kind;
    report.sectors = panel.sectors;
    report.spectrum = eigendecompose(cross_correlation(normalized));
    report.top_vectors = std::min(opts.top_vectors, report.n);
    for (std::size_t k = 0; k < report.top_vectors; ++k)
        report.top_scores.push_back(sector_dominance(report.spectrum, panel.sectors, k));
    report.histogram = eigenvalue_histogram(report.spectrum, opts.histogram_bins);
    std::size_t lag = std::min(opts.max_lag, panel.days() - 1);
    report.autocorr = volatility_autocorrelation(normalized, lag, opts.threads);
    return report;
}

void write_report_json(const SpectralReport& report, const std::filesystem::path& file) {
    nlohmann::ordered_json j;
    j["n"] = report.n;
    j["days"] = report.days;
    j["kind"] = report.kind == ReturnKind::simulated_count ? "simulated-count" : "log-empirical";
    j["eigenvalues"] = report.spectrum.eigenvalues;
    auto vectors = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < report.top_vectors; ++k) {
        nlohmann::ordered_json entry;
        entry["lambda"] = report.spectrum.eigenvalues[k];
        std::vector<double> components(report.n);
        for (std::size_t i = 0; i < report.n; ++i) components[i] = report.spectrum.component(i, k);
        entry["components"] = components;
        vectors.push_back(std::move(entry));
    }
    j["top_vectors"] = std::move(vectors);
    auto scores = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < report.top_scores.size(); ++k) {
        nlohmann::ordered_json entry;
        entry["vector"] = k;
        entry["scores"] = report.top_scores[k].mean_abs;
        entry["dominant_sector"] = report.top_scores[k].dominant;
        entry["dominant_sector_name"] =
            report.sectors.names.empty() ? "" : report.sectors.names[report.top_scores[k].dominant];
        entry["ratio"] = report.top_scores[k].ratio;
        scores.push_back(std::move(entry));
    }
    j["sector_scores"] = std::move(scores);
    j["histogram"] = {{"edges", report.histogram.edges},
                      {"density", report.histogram.density},
                      {"top", report.histogram.top}};
    j["A"] = report.autocorr;

    std::ofstream out(file);
    if (!out) throw IoError("cannot write file: " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + file.string());
}

void write_report_csvs(const SpectralReport& report, const std::filesystem::path& dir) {
    {
        std::ofstream out(dir / "A.csv");
        if (!out) throw IoError("cannot write A.csv in " + dir.string());
        out << "lag,value\n";
        for (std::size_t lag = 0; lag < report.autocorr.size(); ++lag)
            out << lag << ',' << csv::format_full(report.autocorr[lag]) << '\n';
    }
    for (std::size_t k = 0; k < report.top_vectors; ++k) {
        std::ofstream out(dir / ("eigvec_" + std::to_string(k) + ".csv"));
        if (!out) throw IoError("cannot write eigvec csv in " + dir.string());
        out << "stock,abs_component,sector\n";
        for (std::size_t i = 0; i < report.n; ++i)
            out << i << ',' << csv::format_full(std::fabs(report.spectrum.component(i, k)))
                << ',' << report.sectors.names[report.sectors.of_stock[i]] << '\n';
    }
    {
        std::ofstream out(dir / "eighist.csv");
        if (!out) throw IoError("cannot write eighist.csv in " + dir.string());
        out << "bin_center,density\n";
        for (std::size_t b = 0; b < report.histogram.density.size(); ++b) {
            double center = 0.5 * (report.histogram.edges[b] + report.histogram.edges[b + 1]);
            out << csv::format_full(center) << ',' << csv::format_full(report.histogram.density[b])
                << '\n';
        }
    }
}

} // namespace herdlab
