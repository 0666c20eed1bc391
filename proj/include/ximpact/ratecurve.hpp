// Interest-rate-curve application: nested explanatory-set R2 tables and the
// two Kyle-matrix normalizations (relative-price and yield units).
#pragma once

#include "ximpact/metrics.hpp"
#include "ximpact/types.hpp"

#include <string>
#include <vector>

namespace ximpact {

enum class InstrumentKind { CashBond, BondFuture };

struct TenorMeta {
    int asset = 0;
    InstrumentKind kind = InstrumentKind::CashBond;
    double tenor_years = 0.0;
    double mean_price = 0.0;  // time-average of p_open
    double notional = 100.0;
};

struct NestedTableOptions {
    ModelKind kind = ModelKind::ML;
    Segment segment = Segment::InSample;
    VolMode vol_mode = VolMode::SameDay;
    double ridge = kDefaultRidge;
    bool calibrate_y = true;  // ignored for in-sample ML (Y = 1 is optimal)
};

// Entry (i, j): R2(I_{sigma_i}) predicting asset i from the explanatory set
// {ordering[0..j]}. Diagonal entries use the own-flow diagonal model only.
Matrix nested_r2_table(const BinnedPanel& panel, const DaySplit& split,
                       const std::vector<int>& ordering, const NestedTableOptions& opts);

// Entries 1e4 * 1e8 * Lambda_ij / (pbar_i pbar_j): relative price change in
// basis points per 100M currency traded.
Matrix normalize_relative(const Matrix& lambda, const std::vector<TenorMeta>& meta);

// Entries -10 * 1e4 * 1e8 * Lambda_ij / (T_i pbar_j T_j): annual-yield change
// in basis points per 100M currency of 10-year-equivalent volume.
Matrix normalize_yield(const Matrix& lambda, const std::vector<TenorMeta>& meta);

// Exact discount price N / (1+r)^T and the short-rate approximation N / (rT).
double zero_coupon_price(double r, double tenor_years, double notional);
double zero_coupon_price_approx(double r, double tenor_years, double notional);

}  // namespace ximpact
