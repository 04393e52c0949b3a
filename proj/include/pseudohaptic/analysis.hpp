#pragma once

#include "pseudohaptic/stats.hpp"
#include "pseudohaptic/trial_log.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pseudohaptic {

// ---------------------------------------------------------------------------
// Study 1: forced choice between an oscillatory and a plain area

struct ComparisonCell {
    double lambda = 0.0;
    double alpha = 0.0;
    int chose_oscillatory = 0;
    int trials = 0;
    stats::TestResult gof;  // oscillatory vs non-oscillatory counts against 50/50
};

struct ComparisonAnalysis {
    // One cell per (lambda, alpha), lambdas in the order 1/3, 1/5, 1/7 and
    // alphas ascending.
    std::vector<ComparisonCell> cells;
    // Oscillatory-selection counts, lambda rows x alpha columns.
    stats::TestResult independence;
};

// Throws DomainError if a condition has no trials.
ComparisonAnalysis analyze_comparison(std::span<const TrialSummary> rows);

// ---------------------------------------------------------------------------
// Study 2: method of adjustment

struct PlotPoint {
    double alpha = 0.0;
    double mean_ratio = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

struct AdjustmentAnalysis {
    Study study = Study::adjust_amplitude;
    std::vector<double> alphas;
    // Observations per alpha: each participant's mean final ratio, or
    // individual trials when only one participant is present.
    std::vector<std::vector<double>> groups;
    bool per_participant = true;
    // Normality per alpha; NaN statistic and p when a group is constant.
    std::vector<stats::TestResult> normality;
    stats::AnovaResult anova;
    std::vector<stats::TukeyComparison> tukey;
    std::vector<PlotPoint> plot;
};

// Ratio used throughout is the adjusted-to-reference ratio of the adjusted
// parameter (amplitude or wavelength), i.e. the final staircase multiplier.
// Throws DomainError when there are fewer than two observations per alpha.
AdjustmentAnalysis analyze_adjustment(std::span<const TrialSummary> rows, Study study);

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kTestResultsHeader = "analysis,test,condition,statistic,df,p_value";

void write_test_results(std::ostream& os, const ComparisonAnalysis* comparison,
                        std::span<const AdjustmentAnalysis> adjustments);
void write_comparison_plot(std::ostream& os, const ComparisonAnalysis& a);
void write_adjustment_plot(std::ostream& os, const AdjustmentAnalysis& a);

struct AnalysisFiles {
    std::vector<std::filesystem::path> written;
};

// Analyses every study present in `rows` and writes test_results.csv plus
// plot_comparison.csv / plot_amplitude.csv / plot_wavelength.csv under `out`.
// Throws DomainError when `rows` holds no analysable study.
AnalysisFiles run_analysis(std::span<const TrialSummary> rows, const std::filesystem::path& out);

}  // namespace pseudohaptic
