#include "ximpact/moments.hpp"

#include "ximpact/linalg.hpp"
#include "ximpact/log.hpp"

#include <cmath>
#include <stdexcept>

namespace ximpact {

DailyVols daily_vols(const BinnedPanel& panel) {
    DailyVols out;
    out.tau_seconds = panel.tau_seconds;
    const int n = panel.n_assets();

    std::vector<int> kept;
    for (int d = 0; d < panel.n_days(); ++d) {
        const auto span = panel.day_spans[static_cast<std::size_t>(d)];
        const Index len = span.second - span.first;
        if (len == 0) continue;
        if (len < 2) {
            out.excluded_days.push_back(d);
            log::info("daily_vols: day " + std::to_string(d) + " excluded (" +
                      std::to_string(len) + " bins)");
            continue;
        }
        kept.push_back(d);
    }

    out.days = kept;
    const Index K = static_cast<Index>(kept.size());
    out.sigma.resize(K, n);
    out.omega.resize(K, n);
    for (Index k = 0; k < K; ++k) {
        const auto span = panel.day_spans[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])];
        const Index len = span.second - span.first;
        const auto dp = panel.delta_p.middleRows(span.first, len);
        const auto q = panel.flow.middleRows(span.first, len);
        out.sigma.row(k) = (dp.array().square().colwise().sum() / static_cast<double>(len))
                               .sqrt()
                               .matrix();
        out.omega.row(k) =
            (q.array().square().colwise().sum() / static_cast<double>(len)).sqrt().matrix();
    }
    if (K > 0) {
        out.sigma_bar = out.sigma.colwise().mean().transpose();
        out.omega_bar = out.omega.colwise().mean().transpose();
    } else {
        out.sigma_bar = Vector::Zero(n);
        out.omega_bar = Vector::Zero(n);
    }
    return out;
}

namespace {

enum class Side { Price, Flow };

// Average of daily-vol-normalized uncentered cross moments, with listwise
// day exclusion per pair when a normalizing vol is zero.
Matrix averaged_normalized(const BinnedPanel& panel, const DailyVols& vols, Side left,
                           Side right, bool symmetric) {
    const int n = panel.n_assets();
    Matrix sums = Matrix::Zero(n, n);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
    const Matrix& lvol = left == Side::Price ? vols.sigma : vols.omega;
    const Matrix& rvol = right == Side::Price ? vols.sigma : vols.omega;
    for (std::size_t k = 0; k < vols.days.size(); ++k) {
        const auto span = panel.day_spans[static_cast<std::size_t>(vols.days[k])];
        const Index len = span.second - span.first;
        const auto a = left == Side::Price ? panel.delta_p.middleRows(span.first, len)
                                           : panel.flow.middleRows(span.first, len);
        const auto b = right == Side::Price ? panel.delta_p.middleRows(span.first, len)
                                            : panel.flow.middleRows(span.first, len);
        const Matrix moment = (a.transpose() * b) / static_cast<double>(len);
        for (int i = 0; i < n; ++i) {
            const double li = lvol(static_cast<Index>(k), i);
            if (!(li > 0.0)) continue;
            for (int j = 0; j < n; ++j) {
                const double rj = rvol(static_cast<Index>(k), j);
                if (!(rj > 0.0)) continue;
                sums(i, j) += moment(i, j) / (li * rj);
                counts(i, j) += 1;
            }
        }
    }
    Matrix out = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (counts(i, j) > 0) out(i, j) = sums(i, j) / counts(i, j);
    if (symmetric) out = 0.5 * (out + out.transpose());
    return out;
}

void repair_if_indefinite(Matrix& rho, const char* name) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-8 * std::max(1.0, lmax)) {
        log::info(std::string("stationary_correlations: PSD repair applied to ") + name);
        rho = clip_to_psd(rho, kPsdClipFloor);
    }
}

}  // namespace

StationaryCorrelations stationary_correlations(const BinnedPanel& panel, const DailyVols& vols) {
    if (vols.days.empty())
        throw std::invalid_argument("stationary_correlations: no usable days");
    const int n = panel.n_assets();
    StationaryCorrelations out;
    out.rho_dp = averaged_normalized(panel, vols, Side::Price, Side::Price, true);
    out.rho_q = averaged_normalized(panel, vols, Side::Flow, Side::Flow, true);
    out.rho_dpq = averaged_normalized(panel, vols, Side::Price, Side::Flow, false);
    for (int i = 0; i < n; ++i) {
        out.rho_dp(i, i) = 1.0;
        out.rho_q(i, i) = 1.0;
    }
    repair_if_indefinite(out.rho_dp, "rho_dp");
    repair_if_indefinite(out.rho_q, "rho_q");
    return out;
}

MomentSet reconstruct_moments(const DailyVols& vols, const StationaryCorrelations& corr,
                              int day_pos) {
    if (day_pos < 0 || day_pos >= static_cast<int>(vols.days.size()))
        throw std::invalid_argument("reconstruct_moments: day out of range");
    const auto s = vols.sigma.row(day_pos).transpose();
    const auto w = vols.omega.row(day_pos).transpose();
    MomentSet ms;
    ms.Sigma = s.asDiagonal() * corr.rho_dp * s.asDiagonal();
    ms.Omega = w.asDiagonal() * corr.rho_q * w.asDiagonal();
    ms.R = s.asDiagonal() * corr.rho_dpq * w.asDiagonal();
    return ms;
}

MomentSet sample_moments(const BinnedPanel& panel) {
    const Index N = panel.n_bins();
    if (N < 2) throw std::invalid_argument("sample_moments: need at least 2 bins");
    MomentSet ms;
    const double inv = 1.0 / static_cast<double>(N);
    ms.Sigma = (panel.delta_p.transpose() * panel.delta_p) * inv;
    ms.Omega = (panel.flow.transpose() * panel.flow) * inv;
    ms.R = (panel.delta_p.transpose() * panel.flow) * inv;
    ms.Sigma = 0.5 * (ms.Sigma + ms.Sigma.transpose());
    ms.Omega = 0.5 * (ms.Omega + ms.Omega.transpose());
    return ms;
}

}  // namespace ximpact
