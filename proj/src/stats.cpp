#include "ximpact/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ximpact {

namespace {

constexpr double kPvalueClamp = 1e-300;

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-30;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double fisher_sf(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("fisher_sf: dof must be > 0");
    if (f <= 0.0) return 1.0;
    return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

SignificanceReport f_from_r2(double r2, long n) {
    if (r2 >= 1.0) throw std::invalid_argument("f_from_r2: r2 must be below 1");
    SignificanceReport rep;
    rep.n = n;
    rep.robust = false;
    rep.f_stat = r2 / (1.0 - r2);
    rep.p_value = rep.f_stat <= 0.0
                      ? 1.0
                      : std::max(fisher_sf(rep.f_stat, static_cast<double>(n),
                                           static_cast<double>(n - 1)),
                                 kPvalueClamp);
    return rep;
}

SignificanceReport robust_f_pvalue(const Vector& realized, const Vector& predicted) {
    const Index n = realized.size();
    if (predicted.size() != n) throw std::invalid_argument("robust_f_pvalue: length mismatch");
    if (n < 10) throw std::invalid_argument("robust_f_pvalue: need at least 10 observations");
    const double sxx = predicted.squaredNorm();
    if (!(sxx > 0.0)) throw std::invalid_argument("robust_f_pvalue: zero predictor variance");

    const double slope = predicted.dot(realized) / sxx;
    // HC3: leverage-adjusted squared residuals for the single-regressor fit
    // through the origin, h_t = x_t^2 / sum x^2.
    double meat = 0.0;
    for (Index t = 0; t < n; ++t) {
        const double x = predicted(t);
        const double e = realized(t) - slope * x;
        const double h = x * x / sxx;
        const double adj = 1.0 - h;
        meat += x * x * (e / adj) * (e / adj);
    }
    const double var_hc3 = meat / (sxx * sxx);
    SignificanceReport rep;
    rep.n = n;
    rep.robust = true;
    rep.f_stat = var_hc3 > 0.0 ? slope * slope / var_hc3
                               : std::numeric_limits<double>::infinity();
    rep.p_value = std::isfinite(rep.f_stat)
                      ? std::max(fisher_sf(rep.f_stat, 1.0, static_cast<double>(n - 1)),
                                 kPvalueClamp)
                      : kPvalueClamp;
    return rep;
}

std::vector<char> bonferroni(const std::vector<double>& pvalues, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bonferroni: alpha in (0,1)");
    const double m = static_cast<double>(pvalues.size());
    std::vector<char> reject(pvalues.size(), 0);
    for (std::size_t i = 0; i < pvalues.size(); ++i) reject[i] = pvalues[i] < alpha / m;
    return reject;
}

std::vector<char> benjamini_hochberg(const std::vector<double>& pvalues, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("benjamini_hochberg: alpha in (0,1)");
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::size_t cutoff = 0;  // number of rejections (largest passing rank)
    for (std::size_t k = m; k >= 1; --k) {
        if (pvalues[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
            cutoff = k;
            break;
        }
    }
    std::vector<char> reject(m, 0);
    for (std::size_t k = 0; k < cutoff; ++k) reject[order[k]] = 1;
    return reject;
}

AcfResult acf(const Vector& series, int max_lag) {
    const Index n = series.size();
    if (n <= static_cast<Index>(max_lag) * 4)
        throw std::invalid_argument("acf: series too short for max_lag");
    const double mean = series.mean();
    const Vector centered = series.array() - mean;
    const double var = centered.squaredNorm();
    if (!(var > 0.0)) throw std::invalid_argument("acf: constant series");

    AcfResult out;
    out.lags.resize(static_cast<std::size_t>(max_lag) + 1);
    out.values.resize(max_lag + 1);
    out.stderrs.resize(max_lag + 1);
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 0; k <= max_lag; ++k) {
        out.lags[static_cast<std::size_t>(k)] = k;
        const Index len = n - k;
        out.values(k) = centered.head(len).dot(centered.tail(len)) / var;
        out.stderrs(k) = se;
    }
    out.values(0) = 1.0;
    return out;
}

TheilSenFit theil_sen(const Vector& x, const Vector& y) {
    const Index n = x.size();
    if (y.size() != n) throw std::invalid_argument("theil_sen: length mismatch");
    std::vector<double> slopes;
    slopes.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (x(i) != x(j)) slopes.push_back((y(j) - y(i)) / (x(j) - x(i)));
    if (slopes.empty()) throw std::invalid_argument("theil_sen: all x equal");
    std::sort(slopes.begin(), slopes.end());

    const std::size_t m = slopes.size();
    TheilSenFit fit;
    fit.slope = m % 2 == 1 ? slopes[m / 2] : 0.5 * (slopes[m / 2 - 1] + slopes[m / 2]);

    // Rank-based interval on the ordered pairwise slopes (Sen 1968).
    const double nd = static_cast<double>(n);
    const double var_s = nd * (nd - 1.0) * (2.0 * nd + 5.0) / 18.0;
    constexpr double kZ975 = 1.959963984540054;
    const double c = kZ975 * std::sqrt(var_s);
    const auto lo_rank = static_cast<std::ptrdiff_t>(std::floor((static_cast<double>(m) - c) / 2.0));
    const auto hi_rank = static_cast<std::ptrdiff_t>(std::ceil((static_cast<double>(m) + c) / 2.0));
    const auto clamp = [&](std::ptrdiff_t r) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            r, 0, static_cast<std::ptrdiff_t>(m) - 1));
    };
    fit.lo = slopes[clamp(lo_rank)];
    fit.hi = slopes[clamp(hi_rank)];
    return fit;
}

}  // namespace ximpact
