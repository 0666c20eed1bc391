#include "ximpact/stats.hpp"

#include "ximpact/rng.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace ximpact;

TEST_CASE("incomplete_beta against frozen reference values") {
    // Reference values computed offline with scipy.special.betainc.
    CHECK(incomplete_beta(0.5, 0.5, 0.3) == doctest::Approx(3.6901011956554536e-01).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 3.0, 0.4) == doctest::Approx(5.2479999999999993e-01).epsilon(1e-12));
    CHECK(incomplete_beta(10.0, 2.0, 0.9) == doctest::Approx(6.9735688020000020e-01).epsilon(1e-12));
    CHECK(incomplete_beta(50.0, 60.0, 0.45) ==
          doctest::Approx(4.6423529143060444e-01).epsilon(1e-12));
    CHECK(incomplete_beta(1.0, 1.0, 0.0) == 0.0);
    CHECK(incomplete_beta(1.0, 1.0, 1.0) == 1.0);
}

TEST_CASE("fisher_sf against frozen reference values") {
    // Reference values computed offline with scipy.stats.f.sf.
    CHECK(fisher_sf(1.0, 1.0, 10.0) == doctest::Approx(3.4089313230205975e-01).epsilon(1e-12));
    CHECK(fisher_sf(2.5, 100.0, 99.0) == doctest::Approx(3.7520244791896729e-06).epsilon(1e-9));
    CHECK(fisher_sf(7.0, 1.0, 199.0) == doctest::Approx(8.8024129849072121e-03).epsilon(1e-10));
}

TEST_CASE("f_from_r2: formula cases and reference p-value") {
    CHECK(f_from_r2(0.0, 50).f_stat == 0.0);
    CHECK(f_from_r2(0.5, 100).f_stat == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f_from_r2(0.25, 40).f_stat == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(f_from_r2(0.5, 100).p_value == doctest::Approx(5.0013418557031286e-01).epsilon(1e-10));
    CHECK_THROWS_AS((void)f_from_r2(1.0, 10), std::invalid_argument);
}

TEST_CASE("f_from_r2 is strictly increasing in r2") {
    double prev = -1.0;
    for (double r2 = 0.0; r2 < 0.999; r2 += 0.037) {
        const double f = f_from_r2(r2, 100).f_stat;
        CHECK(f > prev);
        prev = f;
    }
}

TEST_CASE("robust_f_pvalue: perfect fit and degenerate inputs") {
    Vector x(20);
    for (Index i = 0; i < 20; ++i) x(i) = 0.1 * static_cast<double>(i + 1);
    const auto rep = robust_f_pvalue(x, x);
    CHECK(rep.p_value < 1e-10);
    CHECK(rep.robust);

    CHECK_THROWS_AS((void)robust_f_pvalue(x, Vector(Vector::Zero(20))), std::invalid_argument);
    Vector tiny(5);
    tiny.setOnes();
    CHECK_THROWS_AS((void)robust_f_pvalue(tiny, tiny), std::invalid_argument);
}

TEST_CASE("robust_f_pvalue: scale invariance of the Wald statistic") {
    auto s = rng::Stream::keyed(41);
    Vector x(50), y(50);
    for (Index i = 0; i < 50; ++i) {
        x(i) = s.gaussian();
        y(i) = 0.3 * x(i) + s.gaussian();
    }
    const auto base = robust_f_pvalue(y, x);
    // Power-of-two rescale commutes with every FP operation involved.
    const auto scaled8 = robust_f_pvalue(y, Vector(8.0 * x));
    CHECK(scaled8.f_stat == base.f_stat);
    const auto scaled3 = robust_f_pvalue(y, Vector(3.0 * x));
    CHECK(scaled3.f_stat == doctest::Approx(base.f_stat).epsilon(1e-12));
}

TEST_CASE("robust_f_pvalue: heteroskedastic null rejection rate") {
    // Variance proportional to predicted^2, slope zero: the HC3 test should
    // hold its nominal size.
    auto s = rng::Stream::keyed(42);
    constexpr int kTrials = 2000;
    constexpr Index kN = 300;
    int rejections = 0;
    for (int t = 0; t < kTrials; ++t) {
        Vector x(kN), y(kN);
        for (Index i = 0; i < kN; ++i) {
            x(i) = s.gaussian();
            y(i) = std::fabs(x(i)) * s.gaussian();
        }
        if (robust_f_pvalue(y, x).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / kTrials;
    CHECK(rate >= 0.03);
    CHECK(rate <= 0.07);
}

TEST_CASE("robust_f_pvalue: p-values uniform under the homoskedastic null") {
    auto s = rng::Stream::keyed(43);
    constexpr int kTrials = 2000;
    constexpr Index kN = 500;
    std::vector<double> pvals;
    pvals.reserve(kTrials);
    for (int t = 0; t < kTrials; ++t) {
        Vector x(kN), y(kN);
        for (Index i = 0; i < kN; ++i) {
            x(i) = s.gaussian();
            y(i) = s.gaussian();
        }
        pvals.push_back(robust_f_pvalue(y, x).p_value);
    }
    std::sort(pvals.begin(), pvals.end());
    double d = 0.0;  // Kolmogorov-Smirnov statistic against U(0,1)
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        const double ecdf_hi = static_cast<double>(i + 1) / kTrials;
        const double ecdf_lo = static_cast<double>(i) / kTrials;
        d = std::max({d, std::fabs(ecdf_hi - pvals[i]), std::fabs(pvals[i] - ecdf_lo)});
    }
    const double crit = 1.628 / std::sqrt(static_cast<double>(kTrials));  // alpha = 0.01
    CHECK(d < crit);
}

TEST_CASE("bonferroni: hand cases") {
    CHECK(bonferroni({0.04}, 0.05) == std::vector<char>{1});
    CHECK(bonferroni({0.0, 0.0}, 0.05) == std::vector<char>{1, 1});
    CHECK(bonferroni({0.001, 0.02, 0.9}, 0.05) == std::vector<char>{1, 0, 0});
    CHECK_THROWS_AS((void)bonferroni({0.5}, 0.0), std::invalid_argument);
}

TEST_CASE("benjamini_hochberg: hand cases") {
    CHECK(benjamini_hochberg({0.04}, 0.05) == std::vector<char>{1});
    // Step-up by hand: 0.9 > 4a/4, 0.04 > 3a/4 = 0.0375, 0.02 <= 2a/4 = 0.025,
    // so the largest passing rank is 2 (cross-checked against statsmodels).
    CHECK(benjamini_hochberg({0.01, 0.02, 0.04, 0.9}, 0.05) == std::vector<char>{1, 1, 0, 0});
    // A value that does pass at rank 3.
    CHECK(benjamini_hochberg({0.01, 0.02, 0.037, 0.9}, 0.05) == std::vector<char>{1, 1, 1, 0});
}

TEST_CASE("bonferroni rejections are a subset of BH rejections") {
    auto s = rng::Stream::keyed(44);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> p(20);
        for (auto& v : p) v = std::pow(s.uniform01(), s.uniform(0.5, 3.0));
        const auto bf = bonferroni(p, 0.05);
        const auto bh = benjamini_hochberg(p, 0.05);
        for (std::size_t i = 0; i < p.size(); ++i)
            if (bf[i]) CHECK(bh[i]);
    }
}

TEST_CASE("benjamini_hochberg: empirical FDR under the independent null") {
    auto s = rng::Stream::keyed(45);
    constexpr int kTrials = 2000;
    constexpr int kM = 100;
    double fdr_sum = 0.0;
    for (int t = 0; t < kTrials; ++t) {
        std::vector<double> p(kM);
        for (auto& v : p) v = s.uniform01();
        const auto rej = benjamini_hochberg(p, 0.05);
        const int r = static_cast<int>(std::count(rej.begin(), rej.end(), 1));
        fdr_sum += r > 0 ? 1.0 : 0.0;  // all hypotheses are null here
    }
    CHECK(fdr_sum / kTrials <= 0.05 + 0.02);
}

TEST_CASE("acf: white noise stays inside the 3-sigma band") {
    auto s = rng::Stream::keyed(46);
    constexpr Index kN = 10000;
    Vector x(kN);
    for (Index i = 0; i < kN; ++i) x(i) = s.gaussian();
    const AcfResult res = acf(x, 50);
    CHECK(res.values(0) == 1.0);
    int inside = 0;
    const double band = 3.0 / std::sqrt(static_cast<double>(kN));
    for (int k = 1; k <= 50; ++k)
        if (std::fabs(res.values(k)) < band) ++inside;
    CHECK(inside >= 48);  // at least 95% of lags
}

TEST_CASE("acf: AR(1) oracle") {
    auto s = rng::Stream::keyed(47);
    constexpr Index kN = 100000;
    Vector x(kN);
    x(0) = s.gaussian();
    for (Index i = 1; i < kN; ++i) x(i) = 0.5 * x(i - 1) + s.gaussian();
    const AcfResult res = acf(x, 5);
    CHECK(res.values(1) >= 0.45);
    CHECK(res.values(1) <= 0.55);
}

TEST_CASE("acf: affine invariance and error paths") {
    auto s = rng::Stream::keyed(48);
    Vector x(500);
    for (Index i = 0; i < 500; ++i) x(i) = s.gaussian();
    const AcfResult base = acf(x, 10);
    const AcfResult shifted = acf(Vector(2.5 * x.array() + 7.0), 10);
    for (int k = 0; k <= 10; ++k)
        CHECK(std::fabs(base.values(k) - shifted.values(k)) < 1e-12);

    CHECK_THROWS_AS((void)acf(Vector(Vector::Ones(100)), 5), std::invalid_argument);
    CHECK_THROWS_AS((void)acf(x, 200), std::invalid_argument);
}

TEST_CASE("theil_sen: exact line, constant, and outlier robustness") {
    Vector x(10), y(10);
    for (Index i = 0; i < 10; ++i) {
        x(i) = static_cast<double>(i);
        y(i) = 2.0 * x(i);
    }
    CHECK(theil_sen(x, y).slope == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(theil_sen(x, Vector(Vector::Constant(10, 3.0))).slope == 0.0);

    // One gross outlier among 20 points: the median slope stays near 2 while
    // plain least squares is dragged away.
    Vector x2(20), y2(20);
    for (Index i = 0; i < 20; ++i) {
        x2(i) = static_cast<double>(i);
        y2(i) = 2.0 * x2(i);
    }
    y2(10) = 200.0;
    const TheilSenFit fit = theil_sen(x2, y2);
    CHECK(fit.slope >= 1.9);
    CHECK(fit.slope <= 2.1);
    const double ols = (x2.array() - x2.mean()).cwiseProduct(y2.array() - y2.mean()).sum() /
                       (x2.array() - x2.mean()).square().sum();
    CHECK(std::fabs(ols - 2.0) > std::fabs(fit.slope - 2.0));
    CHECK(fit.lo <= fit.slope);
    CHECK(fit.hi >= fit.slope);

    CHECK_THROWS_AS((void)theil_sen(Vector(Vector::Ones(5)), Vector(Vector::Ones(5))),
                    std::invalid_argument);
}
