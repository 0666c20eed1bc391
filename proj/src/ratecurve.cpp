#include "ximpact/ratecurve.hpp"

#include "ximpact/models.hpp"

#include <cmath>
#include <stdexcept>

namespace ximpact {

namespace {

// Regression coefficients of target on the explanatory flow block: row vector
// c with dphat_i = c q_S. For the Kyle model the square system is built on
// S union {target}; when the target's own flow is not in S its column is
// dropped, so the prediction only ever uses the explanatory flows.
Vector prediction_row(ModelKind kind, const MomentSet& ms, int target,
                      const std::vector<int>& expl, double ridge) {
    const auto k = static_cast<Index>(expl.size());
    if (kind == ModelKind::Diagonal) {
        if (ms.Omega(target, target) <= 0.0)
            throw std::invalid_argument("nested table: zero own-flow variance");
        Vector row = Vector::Zero(k);
        for (Index j = 0; j < k; ++j)
            if (expl[static_cast<std::size_t>(j)] == target)
                row(j) = ms.R(target, target) / ms.Omega(target, target);
        return row;
    }
    if (kind == ModelKind::ML) {
        Matrix omega_s(k, k);
        Vector r_s(k);
        for (Index a = 0; a < k; ++a) {
            r_s(a) = ms.R(target, expl[static_cast<std::size_t>(a)]);
            for (Index b = 0; b < k; ++b)
                omega_s(a, b) = ms.Omega(expl[static_cast<std::size_t>(a)],
                                         expl[static_cast<std::size_t>(b)]);
        }
        return reg_inverse(omega_s, ridge) * r_s;
    }
    // Kyle: build on the universe S u {target}.
    std::vector<int> uni = expl;
    bool has_target = false;
    for (const int a : uni) has_target |= (a == target);
    if (!has_target) uni.push_back(target);
    const auto m = static_cast<Index>(uni.size());
    Matrix sigma_u(m, m), omega_u(m, m);
    Index target_pos = 0;
    for (Index a = 0; a < m; ++a) {
        if (uni[static_cast<std::size_t>(a)] == target) target_pos = a;
        for (Index b = 0; b < m; ++b) {
            sigma_u(a, b) = ms.Sigma(uni[static_cast<std::size_t>(a)], uni[static_cast<std::size_t>(b)]);
            omega_u(a, b) = ms.Omega(uni[static_cast<std::size_t>(a)], uni[static_cast<std::size_t>(b)]);
        }
    }
    const Matrix lam = lambda_kyle(sigma_u, omega_u, 1.0, ridge);
    Vector row = Vector::Zero(k);
    for (Index j = 0; j < k; ++j) row(j) = lam(target_pos, j);
    return row;
}

}  // namespace

Matrix nested_r2_table(const BinnedPanel& panel, const DaySplit& split,
                       const std::vector<int>& ordering, const NestedTableOptions& opts) {
    const int n = panel.n_assets();
    if (static_cast<int>(ordering.size()) != n)
        throw std::invalid_argument("nested_r2_table: ordering must list every asset once");

    const bool in_sample = opts.segment == Segment::InSample;
    const std::vector<int>& eval_days = in_sample ? split.train_days : split.test_days;
    const BinnedPanel train = panel_subset(panel, split.train_days);
    const BinnedPanel eval = panel_subset(panel, eval_days);
    if (train.n_bins() < 2 || eval.n_bins() < 1)
        throw std::invalid_argument("nested_r2_table: empty segment");

    // In-sample uses plain sample moments so the nesting property is exact;
    // out-of-sample uses the stationary-correlation reconstruction per day.
    MomentSet train_ms;
    DailyVols vols_all, vols_train;
    StationaryCorrelations corr;
    if (in_sample) {
        train_ms = sample_moments(train);
    } else {
        vols_train = daily_vols(train);
        corr = stationary_correlations(train, vols_train);
        vols_all = daily_vols(panel);
    }

    Matrix table(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 1; j <= n; ++j) {
            std::vector<int> expl;
            const bool diagonal_cell = ordering[static_cast<std::size_t>(j - 1)] == i;
            if (diagonal_cell) {
                expl = {i};
            } else {
                expl.assign(ordering.begin(), ordering.begin() + j);
            }
            const ModelKind kind = diagonal_cell ? ModelKind::Diagonal : opts.kind;

            double num = 0.0;
            double den = 0.0;
            if (in_sample) {
                Vector row = prediction_row(kind, train_ms, i, expl, opts.ridge);
                if (opts.calibrate_y && kind != ModelKind::ML) {
                    // Closed-form scalar rescale on the training data.
                    double cy_num = 0.0, cy_den = 0.0;
                    for (Index b = 0; b < train.n_bins(); ++b) {
                        double ph = 0.0;
                        for (std::size_t a = 0; a < expl.size(); ++a)
                            ph += row(static_cast<Index>(a)) * train.flow(b, expl[a]);
                        cy_num += train.delta_p(b, i) * ph;
                        cy_den += ph * ph;
                    }
                    if (cy_den > 0.0) row *= cy_num / cy_den;
                }
                for (Index b = 0; b < eval.n_bins(); ++b) {
                    double ph = 0.0;
                    for (std::size_t a = 0; a < expl.size(); ++a)
                        ph += row(static_cast<Index>(a)) * eval.flow(b, expl[a]);
                    const double e = eval.delta_p(b, i) - ph;
                    num += e * e;
                    den += eval.delta_p(b, i) * eval.delta_p(b, i);
                }
            } else {
                // Calibrate Y over training days, then evaluate per eval day.
                double cy_num = 0.0, cy_den = 0.0;
                for (const int day : split.train_days) {
                    const int pos = vols_train.day_pos(day);
                    if (pos < 0) continue;
                    const MomentSet ms = reconstruct_moments(vols_train, corr, pos);
                    Vector row;
                    try {
                        row = prediction_row(kind, ms, i, expl, opts.ridge);
                    } catch (const std::invalid_argument&) {
                        continue;
                    }
                    const auto span = panel.day_spans[static_cast<std::size_t>(day)];
                    for (Index b = span.first; b < span.second; ++b) {
                        double ph = 0.0;
                        for (std::size_t a = 0; a < expl.size(); ++a)
                            ph += row(static_cast<Index>(a)) * panel.flow(b, expl[a]);
                        cy_num += panel.delta_p(b, i) * ph;
                        cy_den += ph * ph;
                    }
                }
                const double y = (opts.calibrate_y && cy_den > 0.0) ? cy_num / cy_den : 1.0;
                for (const int day : eval_days) {
                    const int pos = vols_all.day_pos(day);
                    if (pos < 0) continue;
                    const MomentSet ms = reconstruct_moments(vols_all, corr, pos);
                    Vector row;
                    try {
                        row = prediction_row(kind, ms, i, expl, opts.ridge);
                    } catch (const std::invalid_argument&) {
                        continue;
                    }
                    const auto span = panel.day_spans[static_cast<std::size_t>(day)];
                    for (Index b = span.first; b < span.second; ++b) {
                        double ph = 0.0;
                        for (std::size_t a = 0; a < expl.size(); ++a)
                            ph += y * row(static_cast<Index>(a)) * panel.flow(b, expl[a]);
                        const double e = panel.delta_p(b, i) - ph;
                        num += e * e;
                        den += panel.delta_p(b, i) * panel.delta_p(b, i);
                    }
                }
            }
            if (!(den > 0.0))
                throw std::invalid_argument("nested_r2_table: zero realized variance");
            table(i, j - 1) = 1.0 - num / den;
        }
    }
    return table;
}

Matrix normalize_relative(const Matrix& lambda, const std::vector<TenorMeta>& meta) {
    const Index n = lambda.rows();
    if (static_cast<Index>(meta.size()) != n)
        throw std::invalid_argument("normalize_relative: metadata size mismatch");
    constexpr double kScale = 1e4 * 1e8;  // basis points per 100M currency
    Matrix out(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double pi = meta[static_cast<std::size_t>(i)].mean_price;
            const double pj = meta[static_cast<std::size_t>(j)].mean_price;
            if (!(pi > 0.0) || !(pj > 0.0))
                throw std::invalid_argument("normalize_relative: zero mean price");
            out(i, j) = kScale * lambda(i, j) / (pi * pj);
        }
    }
    return out;
}

Matrix normalize_yield(const Matrix& lambda, const std::vector<TenorMeta>& meta) {
    const Index n = lambda.rows();
    if (static_cast<Index>(meta.size()) != n)
        throw std::invalid_argument("normalize_yield: metadata size mismatch");
    constexpr double kScale = 1e4 * 1e8;  // bp of yield per 100M 10y-equivalent
    Matrix out(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double ti = meta[static_cast<std::size_t>(i)].tenor_years;
            const double tj = meta[static_cast<std::size_t>(j)].tenor_years;
            const double pj = meta[static_cast<std::size_t>(j)].mean_price;
            if (!(ti > 0.0) || !(tj > 0.0))
                throw std::invalid_argument("normalize_yield: zero tenor");
            if (!(pj > 0.0)) throw std::invalid_argument("normalize_yield: zero mean price");
            out(i, j) = -10.0 * kScale * lambda(i, j) / (ti * pj * tj);
        }
    }
    return out;
}

double zero_coupon_price(double r, double tenor_years, double notional) {
    if (r <= -1.0) throw std::invalid_argument("zero_coupon_price: rate must exceed -1");
    if (!(tenor_years > 0.0)) throw std::invalid_argument("zero_coupon_price: tenor must be > 0");
    return notional / std::pow(1.0 + r, tenor_years);
}

double zero_coupon_price_approx(double r, double tenor_years, double notional) {
    if (!(r != 0.0)) throw std::invalid_argument("zero_coupon_price_approx: rate must be nonzero");
    if (!(tenor_years > 0.0))
        throw std::invalid_argument("zero_coupon_price_approx: tenor must be > 0");
    return notional / (r * tenor_years);
}

}  // namespace ximpact
