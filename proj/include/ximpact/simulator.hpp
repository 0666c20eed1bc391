// Synthetic data with planted ground truth.
//
// Two fidelities: bin-level linear panels (delta_p = Lambda* q + eta) and
// tick-level event streams with Poisson arrivals, Markov trade signs, a
// transient impact kernel with optional sigmoidal saturation, and a latent
// common mid-price factor carrying the planted pairwise correlation.
#pragma once

#include "ximpact/ingest.hpp"
#include "ximpact/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ximpact {

struct BinSimConfig {
    int n_assets = 2;
    Matrix lambda_true;     // planted impact matrix
    Matrix omega_true;      // flow covariance, symmetric PSD
    Matrix sigma_eta_true;  // noise covariance, symmetric PSD
    long n_bins = 1000;
    int bins_per_day = 500;
    double tau_seconds = 60.0;
    double p0 = 100.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct PlantedMoments {
    Matrix lambda;
    Matrix omega;
    Matrix sigma;  // Lambda Omega Lambda' + Sigma_eta
};

PlantedMoments planted_moments(const BinSimConfig& cfg);

struct BinSimResult {
    BinnedPanel panel;
    TradingCalendar calendar;
    PlantedMoments truth;
};

BinSimResult simulate_bin_level(const BinSimConfig& cfg);

enum class KernelKind { Exponential, PowerLaw };

struct TickSimConfig {
    int n_assets = 1;
    int days = 5;
    double session_seconds = 23400.0;
    std::vector<double> trade_rate;        // trades per second, per asset
    std::vector<double> sign_persistence;  // lag-1 sign autocorrelation target in [0,1)
    std::vector<double> volume_scale;      // contracts
    std::vector<double> impact_coef;       // currency per contract of kernel-weighted flow
    double rho_star = 0.0;                 // planted pairwise mid-price correlation
    KernelKind kernel = KernelKind::Exponential;
    double kernel_half_life = 60.0;  // seconds
    double powerlaw_beta = 0.7;
    double powerlaw_t0 = 1.0;        // seconds
    int powerlaw_cutoff = 1000;      // events kept per asset
    bool saturation = false;
    std::vector<double> saturation_scale;  // contracts of kernel-weighted flow
    double noise_sigma = 0.02;             // currency per sqrt(second)
    double quote_noise = 0.0;              // currency, added to emitted mids
    double half_spread = 0.005;            // currency
    std::vector<double> p0;                // initial mid per asset
    std::uint64_t seed = 1;

    // Fill per-asset vectors that were left empty and check invariants.
    void normalize();
    void validate() const;
};

struct TickSimResult {
    std::vector<TickRecord> ticks;  // globally time-ordered, per-asset monotone
    TradingCalendar calendar;
    std::vector<std::string> assets;
    double rho_star = 0.0;
};

TickSimResult simulate_ticks(const TickSimConfig& cfg);

struct TickStream {
    std::vector<TickRecord> ticks;
    TradingCalendar calendar;
};

// Emit a tick stream that reproduces the panel exactly when re-binned at the
// panel's own tau: one trade per (bin, asset) carrying the bin flow, plus
// quotes pinning the open price at every grid point.
TickStream materialize_ticks(const BinnedPanel& panel);

}  // namespace ximpact
