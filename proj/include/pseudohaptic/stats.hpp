#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pseudohaptic::stats {

// ---------------------------------------------------------------------------
// Distribution survival functions

enum class Distribution { chi_square, f, studentized_range, normal };

struct DistParams {
    double df1 = 0.0;  // chi-square df, F numerator df, studentized-range error df
    double df2 = 0.0;  // F denominator df
    int groups = 0;    // studentized range: number of means compared
};

// P(X > x). Throws DomainError on invalid parameters.
double dist_sf(Distribution kind, double x, const DistParams& params);

double normal_sf(double x);
double chi_square_sf(double x, double df);
double f_sf(double x, double df1, double df2);

// Survival function of the studentized range Q = range(Z_1..Z_k) / S, with
// S^2 ~ chi^2_df / df (df may be +infinity). Computed by adaptive
// Gauss-Legendre quadrature: an inner integral over the normal kernel for the
// range distribution, and an outer one over the density of S.
double studentized_range_sf(double q, int groups, double df);

// CDF of the range of k iid standard normals.
double normal_range_cdf(double w, int groups);

// Adaptive Gauss-Legendre on [a, b]: a 20-point panel is bisected until the
// two halves agree with the whole to within `tol` (absolute).
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                 int max_depth = 30);

// ---------------------------------------------------------------------------
// Tests

struct TestResult {
    std::string method;
    double statistic = 0.0;
    std::vector<double> df;
    double p_value = 1.0;
};

// Pearson goodness of fit, df = cells - 1.
TestResult chisq_gof(std::span<const double> observed, std::span<const double> expected);
// Goodness of fit against equal expected counts.
TestResult chisq_gof_uniform(std::span<const double> observed);

// Pearson test of independence on an r x c table of counts,
// df = (r - 1)(c - 1).
TestResult chisq_independence(const std::vector<std::vector<double>>& table);

struct AnovaResult {
    double f = 0.0;
    int df_between = 0;
    int df_within = 0;
    double p_value = 1.0;
    std::vector<double> group_means;
    std::vector<std::size_t> group_sizes;
    double mse = 0.0;
    double ss_between = 0.0;
    double ss_within = 0.0;
    double ss_total = 0.0;
    // False when every observation is identical: F is 0/0 and is reported as NaN.
    bool defined = true;
};

// Between-groups one-way ANOVA. Needs >= 2 groups with >= 2 observations each.
AnovaResult oneway_anova(std::span<const std::vector<double>> groups);

struct TukeyComparison {
    std::size_t i = 0;
    std::size_t j = 0;
    double diff = 0.0;   // mean_j - mean_i
    double q = 0.0;
    double p_adj = 1.0;
};

// All pairwise comparisons, i < j. With unequal group sizes the pair's
// harmonic-mean size is used (Tukey-Kramer).
std::vector<TukeyComparison> tukey_hsd(std::span<const std::vector<double>> groups);

// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
// approximations. 3 <= n <= 5000; throws DomainError on a constant sample.
TestResult shapiro_wilk(std::span<const double> sample);

// Mean and standard error of the mean.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_se(std::span<const double> xs);

}  // namespace pseudohaptic::stats
