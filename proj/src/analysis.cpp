#include "pseudohaptic/analysis.hpp"

#include "pseudohaptic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace pseudohaptic {

namespace {

constexpr double kConditionTol = 1e-9;

template <std::size_t N>
std::size_t condition_index(const std::array<double, N>& values, double v, const char* what)
{
    for (std::size_t i = 0; i < N; ++i) {
        if (std::abs(values[i] - v) <= kConditionTol) {
            return i;
        }
    }
    throw DomainError(std::string("unexpected ") + what + " value " + format_double(v));
}

std::string df_text(const std::vector<double>& df)
{
    std::string s;
    for (std::size_t i = 0; i < df.size(); ++i) {
        if (i) {
            s += ';';
        }
        s += format_double(df[i]);
    }
    return s;
}

void row(std::ostream& os, std::string_view analysis, std::string_view test, const std::string& condition,
         double statistic, const std::string& df, double p)
{
    os << analysis << ',' << test << ',' << condition << ',' << format_double(statistic) << ',' << df << ','
       << format_double(p) << '\n';
}

std::string_view study_tag(Study s)
{
    switch (s) {
    case Study::comparison: return "comparison";
    case Study::adjust_amplitude: return "amplitude";
    case Study::adjust_wavelength: return "wavelength";
    }
    return "?";
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw StorageError("cannot write " + path.string());
    }
    os << text;
    if (!os) {
        throw StorageError("write failed for " + path.string());
    }
}

}  // namespace

ComparisonAnalysis analyze_comparison(std::span<const TrialSummary> rows)
{
    constexpr std::size_t nl = kComparisonLambdas.size();
    constexpr std::size_t na = kComparisonAlphas.size();
    ComparisonAnalysis out;
    out.cells.resize(nl * na);
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t a = 0; a < na; ++a) {
            out.cells[l * na + a].lambda = kComparisonLambdas[l];
            out.cells[l * na + a].alpha = kComparisonAlphas[a];
        }
    }

    for (const auto& r : rows) {
        if (r.study != Study::comparison || !r.response) {
            continue;
        }
        const std::size_t l = condition_index(kComparisonLambdas, r.lambda, "lambda");
        const std::size_t a = condition_index(kComparisonAlphas, r.alpha, "alpha");
        auto& cell = out.cells[l * na + a];
        ++cell.trials;
        if (*r.chose_oscillatory()) {
            ++cell.chose_oscillatory;
        }
    }

    std::vector<std::vector<double>> table(nl, std::vector<double>(na, 0.0));
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t a = 0; a < na; ++a) {
            auto& cell = out.cells[l * na + a];
            if (cell.trials == 0) {
                throw DomainError("no comparison trials for lambda=" + format_double(cell.lambda) +
                                  " alpha=" + format_double(cell.alpha));
            }
            const double obs[2] = {static_cast<double>(cell.chose_oscillatory),
                                   static_cast<double>(cell.trials - cell.chose_oscillatory)};
            cell.gof = stats::chisq_gof_uniform(obs);
            table[l][a] = cell.chose_oscillatory;
        }
    }
    out.independence = stats::chisq_independence(table);
    return out;
}

AdjustmentAnalysis analyze_adjustment(std::span<const TrialSummary> rows, Study study)
{
    if (study == Study::comparison) {
        throw DomainError("adjustment analysis needs an adjustment study");
    }
    AdjustmentAnalysis out;
    out.study = study;
    out.alphas.assign(kAdjustmentAlphas.begin(), kAdjustmentAlphas.end());

    // participant -> per-alpha final multipliers
    std::map<std::string, std::vector<std::vector<double>>> by_participant;
    for (const auto& r : rows) {
        if (r.study != study || !r.final_multiplier) {
            continue;
        }
        const std::size_t a = condition_index(kAdjustmentAlphas, r.alpha, "alpha");
        auto& slots = by_participant[r.participant];
        slots.resize(kAdjustmentAlphas.size());
        slots[a].push_back(*r.final_multiplier);
    }

    out.groups.assign(kAdjustmentAlphas.size(), {});
    out.per_participant = by_participant.size() >= 2;
    for (const auto& [pid, slots] : by_participant) {
        for (std::size_t a = 0; a < slots.size(); ++a) {
            if (slots[a].empty()) {
                continue;
            }
            if (out.per_participant) {
                out.groups[a].push_back(stats::mean_se(slots[a]).mean);
            } else {
                out.groups[a].insert(out.groups[a].end(), slots[a].begin(), slots[a].end());
            }
        }
    }

    for (std::size_t a = 0; a < out.groups.size(); ++a) {
        if (out.groups[a].size() < 2) {
            throw DomainError(std::string(study_tag(study)) + " analysis: fewer than two observations at alpha=" +
                              format_double(out.alphas[a]));
        }
        const auto ms = stats::mean_se(out.groups[a]);
        out.plot.push_back({out.alphas[a], ms.mean, ms.se, out.groups[a].size()});

        const auto [lo, hi] = std::minmax_element(out.groups[a].begin(), out.groups[a].end());
        if (out.groups[a].size() >= 3 && *hi > *lo) {
            out.normality.push_back(stats::shapiro_wilk(out.groups[a]));
        } else {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            out.normality.push_back({"Shapiro-Wilk", nan, {static_cast<double>(out.groups[a].size())}, nan});
        }
    }

    out.anova = stats::oneway_anova(out.groups);
    if (out.anova.defined) {
        out.tukey = stats::tukey_hsd(out.groups);
    }
    return out;
}

void write_test_results(std::ostream& os, const ComparisonAnalysis* comparison,
                        std::span<const AdjustmentAnalysis> adjustments)
{
    os << kTestResultsHeader << '\n';
    if (comparison) {
        for (const auto& c : comparison->cells) {
            row(os, "comparison", "chisq_gof", "lambda=" + format_double(c.lambda) + ";alpha=" + format_double(c.alpha),
                c.gof.statistic, df_text(c.gof.df), c.gof.p_value);
        }
        row(os, "comparison", "chisq_independence", "lambda x alpha", comparison->independence.statistic,
            df_text(comparison->independence.df), comparison->independence.p_value);
    }
    for (const auto& a : adjustments) {
        const std::string_view tag = study_tag(a.study);
        for (std::size_t i = 0; i < a.normality.size(); ++i) {
            row(os, tag, "shapiro_wilk", "alpha=" + format_double(a.alphas[i]), a.normality[i].statistic,
                df_text(a.normality[i].df), a.normality[i].p_value);
        }
        row(os, tag, "anova", "alpha", a.anova.f,
            std::to_string(a.anova.df_between) + ";" + std::to_string(a.anova.df_within), a.anova.p_value);
        for (const auto& t : a.tukey) {
            row(os, tag, "tukey_hsd", "alpha=" + format_double(a.alphas[t.i]) + " vs " + format_double(a.alphas[t.j]),
                t.q, std::to_string(a.groups.size()) + ";" + std::to_string(a.anova.df_within), t.p_adj);
        }
    }
}

void write_comparison_plot(std::ostream& os, const ComparisonAnalysis& a)
{
    os << "lambda,alpha,chose_oscillatory,trials,proportion\n";
    for (const auto& c : a.cells) {
        os << format_double(c.lambda) << ',' << format_double(c.alpha) << ',' << c.chose_oscillatory << ','
           << c.trials << ',' << format_double(static_cast<double>(c.chose_oscillatory) / c.trials) << '\n';
    }
}

void write_adjustment_plot(std::ostream& os, const AdjustmentAnalysis& a)
{
    os << "alpha,mean_ratio,se,n\n";
    for (const auto& p : a.plot) {
        os << format_double(p.alpha) << ',' << format_double(p.mean_ratio) << ',' << format_double(p.se) << ','
           << p.n << '\n';
    }
}

AnalysisFiles run_analysis(std::span<const TrialSummary> rows, const std::filesystem::path& out)
{
    auto has = [&](Study s) {
        return std::any_of(rows.begin(), rows.end(), [s](const TrialSummary& r) { return r.study == s; });
    };

    std::optional<ComparisonAnalysis> comparison;
    std::vector<AdjustmentAnalysis> adjustments;
    if (has(Study::comparison)) {
        comparison = analyze_comparison(rows);
    }
    for (Study s : {Study::adjust_amplitude, Study::adjust_wavelength}) {
        if (has(s)) {
            adjustments.push_back(analyze_adjustment(rows, s));
        }
    }
    if (!comparison && adjustments.empty()) {
        throw DomainError("no trials to analyse");
    }

    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        throw StorageError("cannot create " + out.string() + ": " + ec.message());
    }

    AnalysisFiles files;
    std::ostringstream results;
    write_test_results(results, comparison ? &*comparison : nullptr, adjustments);
    files.written.push_back(out / "test_results.csv");
    write_text(files.written.back(), results.str());

    if (comparison) {
        std::ostringstream plot;
        write_comparison_plot(plot, *comparison);
        files.written.push_back(out / "plot_comparison.csv");
        write_text(files.written.back(), plot.str());
    }
    for (const auto& a : adjustments) {
        std::ostringstream plot;
        write_adjustment_plot(plot, a);
        files.written.push_back(out / ("plot_" + std::string(study_tag(a.study)) + ".csv"));
        write_text(files.written.back(), plot.str());
    }
    return files;
}

}  // namespace pseudohaptic
