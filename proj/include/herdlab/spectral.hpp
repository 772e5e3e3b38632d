#pragma once

#include <filesystem>
#include <vector>

#include "herdlab/matrix.hpp"
#include "herdlab/panel.hpp"

namespace herdlab {

/// Equal-time cross-correlation matrix C_ij = <r_i(t) r_j(t)> of a
/// normalized panel. Symmetric with unit diagonal by construction.
Matrix cross_correlation(const NormalizedPanel& panel);

struct Spectrum {
    std::vector<double> eigenvalues; // descending
    Matrix vectors;                  // column k = unit eigenvector of eigenvalues[k]

    double component(std::size_t stock, std::size_t k) const { return vectors(stock, k); }
    std::size_t size() const { return eigenvalues.size(); }
};

/// Full eigendecomposition of a real symmetric matrix by cyclic Jacobi
/// rotations, iterated until the off-diagonal Frobenius norm falls below
/// 1e-12 relative to the input norm. Eigenvalues are sorted descending and
/// each eigenvector's sign is fixed so its component sum is non-negative.
/// Throws NumericError if the sweep limit is reached.
Spectrum eigendecompose(const Matrix& symmetric);

struct SectorScores {
    std::vector<double> mean_abs; // mean |u_i| per sector
    int dominant = 0;             // argmax sector
    double ratio = 0.0;           // top score / mean of the other scores
};

/// Sector composition of eigenvector k.
SectorScores sector_dominance(const Spectrum& spectrum, const SectorMap& sectors,
                              std::size_t k);

struct EigenvalueHistogram {
    std::vector<double> edges;   // bins+1 edges over [0, lambda_0 * 1.05]
    std::vector<double> density; // integrates to 1
    std::vector<double> top;     // up to three largest eigenvalues
};

EigenvalueHistogram eigenvalue_histogram(const Spectrum& spectrum, int bins = 50);

/// Average volatility autocorrelation A(t) for lags 0..max_lag. Per stock,
/// A_i(t) = (<|r(t')||r(t'+t)|> - <|r|>^2) / A_i0 over the T-t overlapping
/// pairs, with <|r|> and A_i0 over the full series; A(t) is the mean over
/// stocks. Throws if a stock has constant |r| (A_i0 = 0).
std::vector<double> volatility_autocorrelation(const NormalizedPanel& panel,
                                               std::size_t max_lag, int threads = 1);

struct AnalysisOptions {
    std::size_t max_lag = 100;
    int histogram_bins = 50;
    std::size_t top_vectors = 3;
    int threads = 1;
};

struct SpectralReport {
    std::size_t n = 0;
    std::size_t days = 0;
    ReturnKind kind = ReturnKind::log_empirical;
    Spectrum spectrum;
    std::vector<SectorScores> top_scores; // one per reported top vector
    EigenvalueHistogram histogram;
    std::vector<double> autocorr; // A(0..max_lag)
    std::size_t top_vectors = 3;
    SectorMap sectors;
};

/// Runs the whole observable pipeline on a return panel (empirical or
/// simulated; both normalize the same way).
SpectralReport analyze_panel(const ReturnPanel& panel, const AnalysisOptions& opts = {});

/// report JSON: {n, days, kind, eigenvalues, top_vectors, sector_scores,
/// histogram, A}.
void write_report_json(const SpectralReport& report, const std::filesystem::path& file);

/// Plot-ready CSVs: A.csv (lag,value), eigvec_<k>.csv (stock,abs_component,
/// sector), eighist.csv (bin_center,density).
void write_report_csvs(const SpectralReport& report, const std::filesystem::path& dir);

} // namespace herdlab
