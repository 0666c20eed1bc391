// Shared test fixtures: seeded random matrices and small tick/panel builders.
#pragma once

#include "ximpact/ingest.hpp"
#include "ximpact/simulator.hpp"
#include "ximpact/rng.hpp"
#include "ximpact/types.hpp"

#include <Eigen/QR>

#include <cmath>
#include <utility>
#include <vector>

namespace testsupport {

using ximpact::Index;
using ximpact::Matrix;
using ximpact::Vector;

inline Matrix random_matrix(ximpact::rng::Stream& s, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = s.gaussian();
    return m;
}

// Well-conditioned random SPD matrix.
inline Matrix random_spd(ximpact::rng::Stream& s, Index n, double jitter = 0.5) {
    const Matrix a = random_matrix(s, n, n);
    return a * a.transpose() + jitter * Matrix::Identity(n, n);
}

inline Matrix random_orthogonal(ximpact::rng::Stream& s, Index n) {
    const Matrix a = random_matrix(s, n, n);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    // Fix the sign convention so the result is a deterministic function of a.
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    return q;
}

inline Vector random_positive(ximpact::rng::Stream& s, Index n, double lo = 0.5, double hi = 2.0) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = s.uniform(lo, hi);
    return v;
}

inline Matrix permutation_matrix(const std::vector<int>& perm) {
    const auto n = static_cast<Index>(perm.size());
    Matrix p = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    return p;
}

// Random moment triple with a consistent response matrix.
struct MomentFixture {
    Matrix Sigma, Omega, R;
};

inline MomentFixture random_moments(ximpact::rng::Stream& s, Index n) {
    MomentFixture f;
    f.Omega = random_spd(s, n);
    f.Sigma = random_spd(s, n);
    f.R = random_matrix(s, n, n);
    return f;
}

// One-day calendar helper (times in seconds).
inline ximpact::TradingCalendar one_day(double open_s, double close_s) {
    ximpact::TradingCalendar cal;
    cal.days.push_back({"D0", static_cast<std::int64_t>(open_s * 1e9),
                        static_cast<std::int64_t>(close_s * 1e9)});
    return cal;
}

inline ximpact::TickRecord trade(double t_s, int asset, double price, double qty) {
    ximpact::TickRecord r;
    r.ts_ns = static_cast<std::int64_t>(std::llround(t_s * 1e9));
    r.asset = asset;
    r.kind = ximpact::TickKind::Trade;
    r.price = price;
    r.signed_volume = qty;
    return r;
}

inline ximpact::TickRecord quote(double t_s, int asset, double bid, double ask) {
    ximpact::TickRecord r;
    r.ts_ns = static_cast<std::int64_t>(std::llround(t_s * 1e9));
    r.asset = asset;
    r.kind = ximpact::TickKind::Quote;
    r.bid = bid;
    r.ask = ask;
    return r;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

// Synthetic five-tenor curve: a single parallel-shift factor driven by every
// tenor's flow, local own impact, and liquidity concentrated at the 10-year
// point (asset 2). Tenors 2, 5, 10, 20, 30 years.
struct RateCurveFixture {
    ximpact::BinSimConfig config;
    std::vector<double> tenors = {2.0, 5.0, 10.0, 20.0, 30.0};
};

inline RateCurveFixture rate_curve_fixture(long n_bins = 30000, std::uint64_t seed = 7001) {
    RateCurveFixture fx;
    auto& cfg = fx.config;
    cfg.n_assets = 5;
    Vector loading(5), passthrough(5), local(5), flow_std(5);
    loading << 0.2, 0.5, 1.0, 2.0, 3.0;        // duration-like factor sensitivity
    passthrough << 0.002, 0.004, 0.010, 0.004, 0.002;
    local << 0.010, 0.008, 0.005, 0.008, 0.010;
    flow_std << 1.0, 2.0, 5.0, 2.0, 1.0;       // liquidity peaks at the 10y point
    cfg.lambda_true = loading * passthrough.transpose();
    cfg.lambda_true += Matrix(local.asDiagonal());
    cfg.omega_true = flow_std.cwiseProduct(flow_std).asDiagonal();
    const double factor_noise = 0.03;
    cfg.sigma_eta_true = factor_noise * factor_noise * loading * loading.transpose();
    cfg.sigma_eta_true += 0.02 * 0.02 * Matrix::Identity(5, 5);
    cfg.n_bins = n_bins;
    cfg.bins_per_day = 1500;
    cfg.tau_seconds = 1800.0;
    cfg.seed = seed;
    return fx;
}

}  // namespace testsupport
