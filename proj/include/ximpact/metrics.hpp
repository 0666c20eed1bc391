// Goodness-of-fit metrics, liquidity, Epps curves, bin-size scans and
// correlation-stratified pair sampling.
#pragma once

#include "ximpact/ingest.hpp"
#include "ximpact/linalg.hpp"
#include "ximpact/moments.hpp"
#include "ximpact/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ximpact {

struct WeightSpec {
    enum class Kind { FullBasket, SingleAsset, InverseCovariance };
    Kind kind = Kind::FullBasket;
    int asset = -1;  // only for SingleAsset

    std::string tag() const;
    static WeightSpec parse(const std::string& tag);
};

// Realize the weight matrix M from training statistics: mean squared daily
// vols for the diagonal weights, mean daily covariance for the inverse one.
Matrix realize_weight(const WeightSpec& spec, const Vector& mean_sigma_sq,
                      const Matrix& mean_sigma_mat, double ridge = kDefaultRidge);

// 1 - sum (dp - dphat)' M (dp - dphat) / sum dp' M dp. May be negative.
template <class DA, class DB, class DM>
double generalized_r2(const Eigen::MatrixBase<DA>& realized,
                      const Eigen::MatrixBase<DB>& predicted,
                      const Eigen::MatrixBase<DM>& weight) {
    if (realized.rows() != predicted.rows() || realized.cols() != predicted.cols())
        throw std::invalid_argument("generalized_r2: dimension mismatch");
    const Matrix err = realized.derived() - predicted.derived();
    const double num = (err * weight.derived()).cwiseProduct(err).sum();
    const double den =
        (realized.derived() * weight.derived()).cwiseProduct(realized.derived()).sum();
    if (!(den > 0.0)) throw std::invalid_argument("generalized_r2: zero realized variance");
    return 1.0 - num / den;
}

struct FitReport {
    double r2 = 0.0;
    double delta_r2 = 0.0;
    ModelKind kind = ModelKind::ML;
    std::string weight_tag;
    std::string segment;       // "in" / "out"
    double tau_seconds = 0.0;
    double y = 1.0;
    long n_bins = 0;
    // Covariates, attached at reference settings.
    Vector f;
    double rho = 0.0;
    Vector liq;
};

// Difference of two fits; rejects mismatched evaluation settings.
double delta_r2(const FitReport& model_fit, const FitReport& diag_fit);
inline double delta_r2(double r2_model, double r2_diag) { return r2_model - r2_diag; }

// Elementwise liquidity omega_bar * sigma_bar; vols must be at tau_ref.
Vector liquidity(const DailyVols& vols, double tau_ref = 300.0);

struct EppsPoint {
    double tau = 0.0;
    double corr = 0.0;
    bool valid = false;
};

std::vector<EppsPoint> epps_curve(const std::vector<TickRecord>& ticks,
                                  const std::vector<std::string>& assets,
                                  std::pair<int, int> pair, const std::vector<double>& tau_grid,
                                  const TradingCalendar& cal);

struct DaySplit {
    std::vector<int> train_days;
    std::vector<int> test_days;
};

DaySplit chronological_split(int n_days, double train_fraction);

struct ScanEntry {
    double tau = 0.0;
    double r2 = 0.0;
    double r2_diag = 0.0;
    double delta_r2 = 0.0;
    double y = 1.0;
    double y_diag = 1.0;
    long n_eval_bins = 0;
    bool valid = false;
};

struct ScanResult {
    std::vector<ScanEntry> entries;
    double tau_star = 0.0;
    double r2_star = 0.0;
    double tau_star_delta = 0.0;
    double delta_r2_star = 0.0;
    ModelKind kind = ModelKind::ML;
    std::string weight_tag;
    std::string segment;
};

struct ScanOptions {
    ModelKind kind = ModelKind::ML;
    WeightSpec weight;
    VolMode vol_mode = VolMode::SameDay;
    Segment segment = Segment::OutOfSample;
    long min_eval_bins = 100;
    double ridge = kDefaultRidge;
    int workers = 1;
};

// Calibrate Y across training days (per-day moments, pooled closed form).
double calibrate_y_daily(const BinnedPanel& panel, const DailyVols& vols,
                         const StationaryCorrelations& corr, const std::vector<int>& train_days,
                         ModelKind kind, const Matrix& weight, double ridge = kDefaultRidge);

struct SegmentEval {
    double r2 = 0.0;
    long n_bins = 0;
};

// Evaluate pooled R2 over the given days, building a per-day impact matrix
// from the day's vols (SameDay) or the preceding available day's (Lagged).
SegmentEval evaluate_segment(const BinnedPanel& panel, const DailyVols& vols_eval,
                             const StationaryCorrelations& corr, const std::vector<int>& eval_days,
                             ModelKind kind, double y, const Matrix& weight, VolMode vol_mode,
                             double ridge = kDefaultRidge);

// Fill (tau_star, r2_star) and the delta variants from the valid entries;
// ties break toward the smaller tau.
void compute_scan_stars(ScanResult& result);

// For each tau: bin, estimate on train days, calibrate Y, evaluate R2 and
// delta R2 against the diagonal model on the requested segment.
ScanResult scan_bin_sizes(const std::vector<TickRecord>& ticks, const TradingCalendar& cal,
                          const std::vector<std::string>& assets,
                          const std::vector<double>& tau_grid, const DaySplit& split,
                          const ScanOptions& opts);

// |rho| range [0,1] split into equal half-open buckets; the lexicographically
// first pair landing in each occupied bucket is selected.
std::vector<std::pair<int, int>> pair_sampling(const Matrix& rho_dp, int n_buckets);

// 24 log-spaced points from 1 s to 3600 s.
std::vector<double> default_tau_grid();

}  // namespace ximpact
