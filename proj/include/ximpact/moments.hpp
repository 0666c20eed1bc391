// Daily volatilities, stationary correlation matrices and moment reconstruction.
//
// The estimators are uncentered throughout: daily sigma/omega are root mean
// squares, and the correlation matrices are averages of daily-vol-normalized
// second moments. Covariance and response matrices for a day are rebuilt from
// the sandwich products diag(sigma) rho diag(sigma) etc.
#pragma once

#include "ximpact/ingest.hpp"
#include "ximpact/types.hpp"

#include <vector>

namespace ximpact {

struct DailyVols {
    double tau_seconds = 0.0;
    std::vector<int> days;       // calendar day ids with >= 2 bins, ascending
    Matrix sigma;                // days x assets, rms of delta_p per day
    Matrix omega;                // days x assets, rms of flow per day
    Vector sigma_bar;            // per-asset mean of sigma over days
    Vector omega_bar;            // per-asset mean of omega over days
    std::vector<int> excluded_days;

    // Row position of a calendar day id, or -1 when excluded.
    int day_pos(int day_id) const {
        for (std::size_t k = 0; k < days.size(); ++k)
            if (days[k] == day_id) return static_cast<int>(k);
        return -1;
    }
};

struct StationaryCorrelations {
    Matrix rho_dp;   // symmetric, unit diagonal
    Matrix rho_q;    // symmetric, unit diagonal
    Matrix rho_dpq;  // response correlation, not symmetric in general
};

struct MomentSet {
    Matrix Sigma;
    Matrix Omega;
    Matrix R;
};

DailyVols daily_vols(const BinnedPanel& panel);

StationaryCorrelations stationary_correlations(const BinnedPanel& panel, const DailyVols& vols);

// (Sigma, Omega, R) for one day via the sandwich products.
MomentSet reconstruct_moments(const DailyVols& vols, const StationaryCorrelations& corr,
                              int day_pos);

// Plain uncentered sample moments over all bins of the panel.
MomentSet sample_moments(const BinnedPanel& panel);

}  // namespace ximpact
