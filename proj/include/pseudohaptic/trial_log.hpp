#pragma once

#include "pseudohaptic/experiment.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pseudohaptic {

// JSONL event log: one {"t", "type", "payload"} object per line. Each trial is
// introduced by a "trial_start" line carrying its spec and seed, followed by
// the trial's events in order.
nlohmann::json event_to_json(const LoggedEvent& ev);
LoggedEvent event_from_json(const nlohmann::json& j);

nlohmann::json trial_header_json(const TrialRecord& rec);

void write_event_log(std::ostream& os, std::span<const TrialRecord> records);
// Throws DomainError on malformed input.
std::vector<TrialRecord> read_event_log(std::istream& is);

// One row of the per-trial CSV summary.
struct TrialSummary {
    std::string participant;
    std::size_t trial = 0;
    Study study = Study::comparison;
    double alpha = 0.0;
    double lambda = 0.0;
    Side oscillatory_side = Side::left;
    std::optional<Side> response;  // comparison trials
    std::optional<double> final_multiplier;
    std::optional<double> final_vpp_ratio;

    std::optional<bool> chose_oscillatory() const;
    bool operator==(const TrialSummary&) const = default;
};

inline constexpr const char* kSummaryHeader =
    "participant,trial,study,alpha,lambda,oscillatory_side,response,final_multiplier,final_vpp_ratio";

TrialSummary summarize(const TrialRecord& rec);

void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const TrialSummary& row);
void write_summary_csv(std::ostream& os, std::span<const TrialSummary> rows);
// Throws DomainError with the offending line number on malformed input.
std::vector<TrialSummary> read_summary_csv(std::istream& is);
std::vector<TrialSummary> read_summary_csv(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Writes <stem>.jsonl and <stem>.csv into `dir` (created if missing).
// Throws ProtocolError if no trial is complete, StorageError on I/O failure.
struct ExportedFiles {
    std::filesystem::path events;
    std::filesystem::path summary;
};
ExportedFiles export_trial_logs(std::span<const TrialRecord> records, const std::filesystem::path& dir,
                                const std::string& stem);

}  // namespace pseudohaptic
