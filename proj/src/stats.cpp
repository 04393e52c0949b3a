#include "pseudohaptic/stats.hpp"

#include "pseudohaptic/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pseudohaptic::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double p)
{
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double adaptive(const std::function<double(double)>& f, double a, double b, double whole, double tol,
                int depth)
{
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const double m = 0.5 * (a + b);
    const double left = Rule::integrate(f, a, m);
    const double right = Rule::integrate(f, m, b);
    if (depth <= 0 || std::abs(left + right - whole) <= tol) {
        return left + right;
    }
    return adaptive(f, a, m, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, right, 0.5 * tol, depth - 1);
}

// Horner evaluation of c[0] + c[1] x + c[2] x^2 + ...
double poly(std::span<const double> c, double x)
{
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        r = r * x + *it;
    }
    return r;
}

void require_df(double df, const char* what)
{
    if (!(df > 0.0)) {
        throw DomainError(std::string(what) + " degrees of freedom must be positive");
    }
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol, int max_depth)
{
    using Rule = boost::math::quadrature::gauss<double, 20>;
    if (a == b) {
        return 0.0;
    }
    return adaptive(f, a, b, Rule::integrate(f, a, b), tol, max_depth);
}

// ---------------------------------------------------------------------------
// Distributions

double normal_sf(double x)
{
    if (std::isnan(x)) {
        throw DomainError("normal_sf of NaN");
    }
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double chi_square_sf(double x, double df)
{
    require_df(df, "chi-square");
    if (std::isnan(x)) {
        throw DomainError("chi-square statistic is NaN");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    if (x == kInf) {
        return 0.0;
    }
    return clamp_p(boost::math::gamma_q(df / 2.0, x / 2.0));
}

double f_sf(double x, double df1, double df2)
{
    require_df(df1, "F numerator");
    require_df(df2, "F denominator");
    if (std::isnan(x)) {
        throw DomainError("F statistic is NaN");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    if (x == kInf) {
        return 0.0;
    }
    const double z = df1 * x / (df1 * x + df2);
    return clamp_p(boost::math::ibetac(df1 / 2.0, df2 / 2.0, z));
}

double normal_range_cdf(double w, int groups)
{
    if (groups < 2) {
        throw DomainError("studentized range needs at least 2 groups");
    }
    if (w <= 0.0) {
        return 0.0;
    }
    const double k = groups;
    // P(range <= w) = k * int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz
    auto integrand = [&](double z) {
        const double inner = normal_cdf(z) - normal_cdf(z - w);
        return inner <= 0.0 ? 0.0 : normal_pdf(z) * std::pow(inner, k - 1.0);
    };
    const double value = k * integrate(integrand, -9.0, 9.0 + w, 1e-13);
    return clamp_p(value);
}

double studentized_range_sf(double q, int groups, double df)
{
    if (groups < 2) {
        throw DomainError("studentized range needs at least 2 groups");
    }
    require_df(df, "studentized range");
    if (std::isnan(q)) {
        throw DomainError("studentized range statistic is NaN");
    }
    if (q <= 0.0) {
        return 1.0;
    }
    if (std::isinf(df)) {
        return clamp_p(1.0 - normal_range_cdf(q, groups));
    }

    // Density of S = sqrt(chi^2_df / df), in log form for large df.
    const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
    auto density = [&](double s) {
        if (s <= 0.0) {
            return 0.0;
        }
        return std::exp(log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s);
    };
    auto integrand = [&](double s) {
        const double d = density(s);
        return d == 0.0 ? 0.0 : d * (1.0 - normal_range_cdf(q * s, groups));
    };

    const double spread = 1.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - 12.0 * spread);
    const double hi = 1.0 + 14.0 * spread + (df < 10.0 ? 6.0 : 0.0);
    // Split at the bulk of the density so each panel sees a smooth shape.
    const double mid = std::clamp(1.0, lo, hi);
    const double value = integrate(integrand, lo, mid, 1e-10) + integrate(integrand, mid, hi, 1e-10);
    return clamp_p(value);
}

double dist_sf(Distribution kind, double x, const DistParams& params)
{
    switch (kind) {
    case Distribution::chi_square: return chi_square_sf(x, params.df1);
    case Distribution::f: return f_sf(x, params.df1, params.df2);
    case Distribution::studentized_range: return studentized_range_sf(x, params.groups, params.df1);
    case Distribution::normal: return normal_sf(x);
    }
    throw DomainError("unknown distribution");
}

// ---------------------------------------------------------------------------
// Chi-square tests

TestResult chisq_gof(std::span<const double> observed, std::span<const double> expected)
{
    if (observed.size() != expected.size() || observed.size() < 2) {
        throw DomainError("goodness of fit needs matching observed/expected vectors of length >= 2");
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0.0)) {
            throw DomainError("goodness of fit: expected count in cell " + std::to_string(i) + " is not positive");
        }
        if (!(observed[i] >= 0.0)) {
            throw DomainError("goodness of fit: negative observed count");
        }
        const double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    const double df = static_cast<double>(observed.size() - 1);
    return {"chi-square goodness of fit", stat, {df}, chi_square_sf(stat, df)};
}

TestResult chisq_gof_uniform(std::span<const double> observed)
{
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    std::vector<double> expected(observed.size(), total / static_cast<double>(observed.size()));
    return chisq_gof(observed, expected);
}

TestResult chisq_independence(const std::vector<std::vector<double>>& table)
{
    const std::size_t r = table.size();
    if (r < 2) {
        throw DomainError("independence test needs at least 2 rows");
    }
    const std::size_t c = table.front().size();
    if (c < 2) {
        throw DomainError("independence test needs at least 2 columns");
    }
    std::vector<double> rows(r, 0.0);
    std::vector<double> cols(c, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) {
            throw DomainError("independence test: ragged table");
        }
        for (std::size_t j = 0; j < c; ++j) {
            if (!(table[i][j] >= 0.0)) {
                throw DomainError("independence test: negative count");
            }
            rows[i] += table[i][j];
            cols[j] += table[i][j];
            n += table[i][j];
        }
    }
    for (double s : rows) {
        if (!(s > 0.0)) {
            throw DomainError("independence test: empty row");
        }
    }
    for (double s : cols) {
        if (!(s > 0.0)) {
            throw DomainError("independence test: empty column");
        }
    }

    double stat = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double e = rows[i] * cols[j] / n;
            const double d = table[i][j] - e;
            stat += d * d / e;
        }
    }
    const double df = static_cast<double>((r - 1) * (c - 1));
    return {"chi-square independence", stat, {df}, chi_square_sf(stat, df)};
}

// ---------------------------------------------------------------------------
// ANOVA / Tukey

AnovaResult oneway_anova(std::span<const std::vector<double>> groups)
{
    if (groups.size() < 2) {
        throw DomainError("ANOVA needs at least 2 groups");
    }
    AnovaResult res;
    double grand_sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) {
            throw DomainError("ANOVA needs at least 2 observations per group");
        }
        for (double v : g) {
            if (!std::isfinite(v)) {
                throw DomainError("ANOVA input is not finite");
            }
        }
        const double sum = std::accumulate(g.begin(), g.end(), 0.0);
        res.group_means.push_back(sum / static_cast<double>(g.size()));
        res.group_sizes.push_back(g.size());
        grand_sum += sum;
        n += g.size();
    }
    const double grand_mean = grand_sum / static_cast<double>(n);

    for (std::size_t i = 0; i < groups.size(); ++i) {
        const double dm = res.group_means[i] - grand_mean;
        res.ss_between += static_cast<double>(groups[i].size()) * dm * dm;
        for (double v : groups[i]) {
            const double dw = v - res.group_means[i];
            res.ss_within += dw * dw;
            const double dt = v - grand_mean;
            res.ss_total += dt * dt;
        }
    }

    res.df_between = static_cast<int>(groups.size()) - 1;
    res.df_within = static_cast<int>(n - groups.size());
    res.mse = res.ss_within / res.df_within;
    const double msb = res.ss_between / res.df_between;

    if (res.ss_within == 0.0 && res.ss_between == 0.0) {
        res.defined = false;
        res.f = std::numeric_limits<double>::quiet_NaN();
        res.p_value = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    res.f = res.ss_within == 0.0 ? kInf : msb / res.mse;
    res.p_value = f_sf(res.f, res.df_between, res.df_within);
    return res;
}

std::vector<TukeyComparison> tukey_hsd(std::span<const std::vector<double>> groups)
{
    const AnovaResult anova = oneway_anova(groups);
    const int k = static_cast<int>(groups.size());
    std::vector<TukeyComparison> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            TukeyComparison c;
            c.i = i;
            c.j = j;
            c.diff = anova.group_means[j] - anova.group_means[i];
            const double n_pair = 2.0 / (1.0 / static_cast<double>(anova.group_sizes[i]) +
                                         1.0 / static_cast<double>(anova.group_sizes[j]));
            const double se = std::sqrt(anova.mse / n_pair);
            if (se == 0.0) {
                c.q = c.diff == 0.0 ? 0.0 : kInf;
            } else {
                c.q = std::abs(c.diff) / se;
            }
            c.p_adj = c.q == kInf ? 0.0 : studentized_range_sf(c.q, k, anova.df_within);
            out.push_back(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk (Royston 1995, algorithm AS R94)

TestResult shapiro_wilk(std::span<const double> sample)
{
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) {
        throw DomainError("Shapiro-Wilk needs 3 <= n <= 5000, got n=" + std::to_string(n));
    }
    std::vector<double> x(sample.begin(), sample.end());
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw DomainError("Shapiro-Wilk input is not finite");
        }
    }
    std::sort(x.begin(), x.end());
    if (x.back() - x.front() <= 0.0) {
        throw DomainError("Shapiro-Wilk input is constant");
    }

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);
    std::vector<double> a(half);

    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
        static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, rsn) - m[0] / ssumm2;

        std::size_t first_scaled;
        double fac;
        if (n > 5) {
            first_scaled = 2;
            const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            first_scaled = 1;
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first_scaled; i < half; ++i) {
            a[i] = -m[i] / fac;
        }
    }

    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / an;
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    double num = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        num += a[i] * (x[n - 1 - i] - x[i]);
    }
    const double w = std::min(1.0, num * num / ss);

    double p;
    if (n == 3) {
        p = (6.0 / std::numbers::pi) * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75)));
        p = clamp_p(p);
    } else {
        const double w1 = 1.0 - w;
        if (w1 <= 0.0) {
            p = 1.0;
        } else {
            double y = std::log(w1);
            double mu;
            double sigma;
            if (n <= 11) {
                static constexpr double g[] = {-2.273, 0.459};
                static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
                static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
                const double gamma = poly(g, an);
                if (y >= gamma) {
                    return {"Shapiro-Wilk", w, {an}, 0.0};
                }
                y = -std::log(gamma - y);
                mu = poly(c3, an);
                sigma = std::exp(poly(c4, an));
            } else {
                static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
                static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
                const double ln = std::log(an);
                mu = poly(c5, ln);
                sigma = std::exp(poly(c6, ln));
            }
            p = clamp_p(normal_sf((y - mu) / sigma));
        }
    }
    return {"Shapiro-Wilk", w, {an}, p};
}

MeanSe mean_se(std::span<const double> xs)
{
    if (xs.empty()) {
        throw DomainError("mean of an empty sample");
    }
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : xs) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace pseudohaptic::stats
