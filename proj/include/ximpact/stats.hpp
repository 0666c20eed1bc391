// Significance machinery: F statistics, heteroskedasticity-robust p-values,
// multiple-testing corrections, autocorrelations and Theil-Sen slopes.
#pragma once

#include "ximpact/types.hpp"

#include <vector>

namespace ximpact {

struct SignificanceReport {
    double f_stat = 0.0;
    double p_value = 1.0;
    bool robust = false;
    long n = 0;
};

struct AcfResult {
    std::vector<int> lags;
    Vector values;   // acf(0) = 1
    Vector stderrs;  // 1/sqrt(N) per lag
};

struct TheilSenFit {
    double slope = 0.0;
    double lo = 0.0;  // 95% band
    double hi = 0.0;
};

// Regularized incomplete beta function I_x(a, b) via Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

// Upper tail P(F > f) of the Fisher distribution with (d1, d2) dof.
double fisher_sf(double f, double d1, double d2);

// F = r2 / (1 - r2), reference p-value from the Fisher law F(N, N-1).
SignificanceReport f_from_r2(double r2, long n);

// Wald test of the slope in realized = Y * predicted + eta with an HC3
// leverage-adjusted variance; p-value against the F(1, N-1) reference.
SignificanceReport robust_f_pvalue(const Vector& realized, const Vector& predicted);

std::vector<char> bonferroni(const std::vector<double>& pvalues, double alpha);
std::vector<char> benjamini_hochberg(const std::vector<double>& pvalues, double alpha);

// Sample autocorrelation, biased (1/N) normalization, centered.
AcfResult acf(const Vector& series, int max_lag);

// Median of pairwise slopes with the rank-based 95% interval.
TheilSenFit theil_sen(const Vector& x, const Vector& y);

}  // namespace ximpact
