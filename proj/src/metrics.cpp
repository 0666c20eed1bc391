#include "ximpact/metrics.hpp"

#include "ximpact/log.hpp"
#include "ximpact/models.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ximpact {

std::string WeightSpec::tag() const {
    switch (kind) {
        case Kind::FullBasket: return "basket";
        case Kind::SingleAsset: return "asset:" + std::to_string(asset);
        case Kind::InverseCovariance: return "invcov";
    }
    return "?";
}

WeightSpec WeightSpec::parse(const std::string& tag) {
    WeightSpec spec;
    if (tag == "basket") {
        spec.kind = Kind::FullBasket;
    } else if (tag == "invcov") {
        spec.kind = Kind::InverseCovariance;
    } else if (tag.rfind("asset:", 0) == 0) {
        spec.kind = Kind::SingleAsset;
        spec.asset = std::stoi(tag.substr(6));
    } else {
        throw std::invalid_argument("unknown weight spec: " + tag);
    }
    return spec;
}

Matrix realize_weight(const WeightSpec& spec, const Vector& mean_sigma_sq,
                      const Matrix& mean_sigma_mat, double ridge) {
    const Index n = mean_sigma_sq.size();
    switch (spec.kind) {
        case WeightSpec::Kind::FullBasket: {
            Matrix m = Matrix::Zero(n, n);
            for (Index i = 0; i < n; ++i) {
                if (!(mean_sigma_sq(i) > 0.0))
                    throw std::invalid_argument("realize_weight: zero mean variance");
                m(i, i) = 1.0 / mean_sigma_sq(i);
            }
            return m;
        }
        case WeightSpec::Kind::SingleAsset: {
            if (spec.asset < 0 || spec.asset >= n)
                throw std::invalid_argument("realize_weight: asset index out of range");
            if (!(mean_sigma_sq(spec.asset) > 0.0))
                throw std::invalid_argument("realize_weight: zero mean variance");
            Matrix m = Matrix::Zero(n, n);
            m(spec.asset, spec.asset) = 1.0 / mean_sigma_sq(spec.asset);
            return m;
        }
        case WeightSpec::Kind::InverseCovariance:
            return reg_inverse(mean_sigma_mat, ridge);
    }
    throw std::logic_error("realize_weight: bad kind");
}

double delta_r2(const FitReport& model_fit, const FitReport& diag_fit) {
    if (model_fit.weight_tag != diag_fit.weight_tag || model_fit.segment != diag_fit.segment ||
        model_fit.tau_seconds != diag_fit.tau_seconds)
        throw std::invalid_argument("delta_r2: mismatched evaluation settings");
    if (diag_fit.kind != ModelKind::Diagonal)
        throw std::invalid_argument("delta_r2: baseline is not the diagonal model");
    return model_fit.r2 - diag_fit.r2;
}

Vector liquidity(const DailyVols& vols, double tau_ref) {
    if (std::fabs(vols.tau_seconds - tau_ref) > 1e-9)
        throw std::invalid_argument("liquidity: vols computed at tau " +
                                    std::to_string(vols.tau_seconds) + ", expected " +
                                    std::to_string(tau_ref));
    return vols.omega_bar.cwiseProduct(vols.sigma_bar);
}

std::vector<EppsPoint> epps_curve(const std::vector<TickRecord>& ticks,
                                  const std::vector<std::string>& assets,
                                  std::pair<int, int> pair, const std::vector<double>& tau_grid,
                                  const TradingCalendar& cal) {
    for (std::size_t k = 1; k < tau_grid.size(); ++k)
        if (tau_grid[k] <= tau_grid[k - 1])
            throw std::invalid_argument("epps_curve: grid must be sorted ascending");
    std::vector<EppsPoint> out;
    out.reserve(tau_grid.size());
    for (const double tau : tau_grid) {
        EppsPoint pt;
        pt.tau = tau;
        const BinnedPanel panel = bin_ticks(ticks, tau, cal, assets);
        if (panel.n_bins() >= 2) {
            const Vector a = panel.delta_p.col(pair.first);
            const Vector b = panel.delta_p.col(pair.second);
            const Vector ca = a.array() - a.mean();
            const Vector cb = b.array() - b.mean();
            const double va = ca.squaredNorm();
            const double vb = cb.squaredNorm();
            if (va > 0.0 && vb > 0.0) {
                pt.corr = ca.dot(cb) / std::sqrt(va * vb);
                pt.valid = true;
            }
        }
        out.push_back(pt);
    }
    return out;
}

DaySplit chronological_split(int n_days, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("chronological_split: fraction in (0,1)");
    DaySplit split;
    const int cut = std::clamp(static_cast<int>(std::lround(n_days * train_fraction)), 1,
                               n_days - 1);
    for (int d = 0; d < cut; ++d) split.train_days.push_back(d);
    for (int d = cut; d < n_days; ++d) split.test_days.push_back(d);
    return split;
}

double calibrate_y_daily(const BinnedPanel& panel, const DailyVols& vols,
                         const StationaryCorrelations& corr, const std::vector<int>& train_days,
                         ModelKind kind, const Matrix& weight, double ridge) {
    double num = 0.0;
    double den = 0.0;
    for (const int day : train_days) {
        const int pos = vols.day_pos(day);
        if (pos < 0) continue;
        const auto span = panel.day_spans[static_cast<std::size_t>(day)];
        const Index len = span.second - span.first;
        if (len == 0) continue;
        const MomentSet ms = reconstruct_moments(vols, corr, pos);
        Matrix base;
        try {
            base = build_lambda(kind, ms, 1.0, ridge);
        } catch (const std::invalid_argument&) {
            continue;  // degenerate day (e.g. no flow at all)
        }
        const Matrix predicted = panel.flow.middleRows(span.first, len) * base.transpose();
        const Matrix pw = predicted * weight;
        num += (panel.delta_p.middleRows(span.first, len).array() * pw.array()).sum();
        den += (pw.array() * predicted.array()).sum();
    }
    if (!(den > 0.0)) throw std::invalid_argument("calibrate_y_daily: zero predicted variance");
    return num / den;
}

SegmentEval evaluate_segment(const BinnedPanel& panel, const DailyVols& vols_eval,
                             const StationaryCorrelations& corr, const std::vector<int>& eval_days,
                             ModelKind kind, double y, const Matrix& weight, VolMode vol_mode,
                             double ridge) {
    double num = 0.0;
    double den = 0.0;
    long n_bins = 0;
    for (const int day : eval_days) {
        int pos = vols_eval.day_pos(day);
        if (vol_mode == VolMode::Lagged) {
            // Most recent included day strictly before the evaluation day.
            int lag = -1;
            for (std::size_t k = 0; k < vols_eval.days.size(); ++k)
                if (vols_eval.days[k] < day) lag = static_cast<int>(k);
            pos = lag;
        }
        if (pos < 0) continue;
        const auto span = panel.day_spans[static_cast<std::size_t>(day)];
        const Index len = span.second - span.first;
        if (len == 0) continue;
        const MomentSet ms = reconstruct_moments(vols_eval, corr, pos);
        Matrix lambda;
        try {
            lambda = build_lambda(kind, ms, y, ridge);
        } catch (const std::invalid_argument&) {
            continue;
        }
        const auto dp = panel.delta_p.middleRows(span.first, len);
        const Matrix err = dp - panel.flow.middleRows(span.first, len) * lambda.transpose();
        num += (err * weight).cwiseProduct(err).sum();
        den += (dp * weight).cwiseProduct(dp).sum();
        n_bins += len;
    }
    if (!(den > 0.0)) throw std::invalid_argument("evaluate_segment: zero realized variance");
    return {1.0 - num / den, n_bins};
}

namespace {

ScanEntry scan_one_tau(const std::vector<TickRecord>& ticks, const TradingCalendar& cal,
                       const std::vector<std::string>& assets, double tau, const DaySplit& split,
                       const ScanOptions& opts) {
    ScanEntry entry;
    entry.tau = tau;
    const BinnedPanel panel = bin_ticks(ticks, tau, cal, assets);
    const BinnedPanel train = panel_subset(panel, split.train_days);
    if (train.n_bins() < 2) return entry;
    const DailyVols train_vols = daily_vols(train);
    if (train_vols.days.empty()) return entry;
    const StationaryCorrelations corr = stationary_correlations(train, train_vols);

    const Vector mean_sigma_sq =
        train_vols.sigma.array().square().colwise().mean().transpose().matrix();
    Matrix mean_sigma_mat = Matrix::Zero(panel.n_assets(), panel.n_assets());
    for (std::size_t k = 0; k < train_vols.days.size(); ++k) {
        const MomentSet ms = reconstruct_moments(train_vols, corr, static_cast<int>(k));
        mean_sigma_mat += ms.Sigma;
    }
    mean_sigma_mat /= static_cast<double>(train_vols.days.size());
    Matrix weight;
    try {
        weight = realize_weight(opts.weight, mean_sigma_sq, mean_sigma_mat, opts.ridge);
    } catch (const std::invalid_argument&) {
        return entry;
    }

    const std::vector<int>& eval_days =
        opts.segment == Segment::OutOfSample ? split.test_days : split.train_days;
    // Full-panel vols so Lagged mode can reach back into the training days.
    const DailyVols eval_vols = daily_vols(panel);

    try {
        entry.y = calibrate_y_daily(panel, train_vols, corr, split.train_days, opts.kind, weight,
                                    opts.ridge);
        entry.y_diag = calibrate_y_daily(panel, train_vols, corr, split.train_days,
                                         ModelKind::Diagonal, weight, opts.ridge);
        const SegmentEval model = evaluate_segment(panel, eval_vols, corr, eval_days, opts.kind,
                                                   entry.y, weight, opts.vol_mode, opts.ridge);
        const SegmentEval diag =
            evaluate_segment(panel, eval_vols, corr, eval_days, ModelKind::Diagonal, entry.y_diag,
                             weight, opts.vol_mode, opts.ridge);
        entry.n_eval_bins = model.n_bins;
        if (model.n_bins < opts.min_eval_bins) {
            log::info("scan: tau " + std::to_string(tau) + " skipped (" +
                      std::to_string(model.n_bins) + " eval bins)");
            return entry;
        }
        entry.r2 = model.r2;
        entry.r2_diag = diag.r2;
        entry.delta_r2 = model.r2 - diag.r2;
        entry.valid = true;
    } catch (const std::invalid_argument& err) {
        log::info("scan: tau " + std::to_string(tau) + " skipped (" + err.what() + ")");
    }
    return entry;
}

}  // namespace

ScanResult scan_bin_sizes(const std::vector<TickRecord>& ticks, const TradingCalendar& cal,
                          const std::vector<std::string>& assets,
                          const std::vector<double>& tau_grid, const DaySplit& split,
                          const ScanOptions& opts) {
    if (tau_grid.empty()) throw std::invalid_argument("scan_bin_sizes: empty grid");
    ScanResult result;
    result.kind = opts.kind;
    result.weight_tag = opts.weight.tag();
    result.segment = to_string(opts.segment);
    result.entries.resize(tau_grid.size());

    const int workers = std::max(1, opts.workers);
    if (workers == 1 || tau_grid.size() == 1) {
        for (std::size_t i = 0; i < tau_grid.size(); ++i)
            result.entries[i] = scan_one_tau(ticks, cal, assets, tau_grid[i], split, opts);
    } else {
        // Independent grid points; results land in their slot so the output
        // is identical for any worker count.
        std::atomic<std::size_t> next{0};
        auto work = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tau_grid.size()) return;
                result.entries[i] = scan_one_tau(ticks, cal, assets, tau_grid[i], split, opts);
            }
        };
        std::vector<std::thread> pool;
        const int spawn = std::min<std::size_t>(workers, tau_grid.size());
        pool.reserve(static_cast<std::size_t>(spawn));
        for (int w = 0; w < spawn; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    compute_scan_stars(result);
    return result;
}

void compute_scan_stars(ScanResult& result) {
    bool any = false;
    for (const auto& e : result.entries) {
        if (!e.valid) continue;
        // Ties broken toward the smaller tau: strict inequality on update.
        if (!any || e.r2 > result.r2_star) {
            result.r2_star = e.r2;
            result.tau_star = e.tau;
        }
        if (!any || e.delta_r2 > result.delta_r2_star) {
            result.delta_r2_star = e.delta_r2;
            result.tau_star_delta = e.tau;
        }
        any = true;
    }
}

std::vector<std::pair<int, int>> pair_sampling(const Matrix& rho_dp, int n_buckets) {
    if (n_buckets < 1) throw std::invalid_argument("pair_sampling: need at least one bucket");
    const Index n = rho_dp.rows();
    std::vector<std::pair<int, int>> selected;
    std::vector<char> occupied(static_cast<std::size_t>(n_buckets), 0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double r = std::fabs(rho_dp(i, j));
            // Half-open buckets [k/n, (k+1)/n); |rho| = 1 lands in the last.
            int bucket = static_cast<int>(r * n_buckets);
            bucket = std::clamp(bucket, 0, n_buckets - 1);
            if (!occupied[static_cast<std::size_t>(bucket)]) {
                occupied[static_cast<std::size_t>(bucket)] = 1;
                selected.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    return selected;
}

std::vector<double> default_tau_grid() {
    constexpr int kPoints = 24;
    std::vector<double> grid(kPoints);
    const double lo = std::log(1.0);
    const double hi = std::log(3600.0);
    for (int k = 0; k < kPoints; ++k)
        grid[static_cast<std::size_t>(k)] = std::exp(lo + (hi - lo) * k / (kPoints - 1));
    return grid;
}

}  // namespace ximpact
