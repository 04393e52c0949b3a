#pragma once

#include "pseudohaptic/experiment.hpp"
#include "pseudohaptic/observer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pseudohaptic {

struct SimulationConfig {
    Protocol protocol = Protocol::comparison;
    int participants = 10;
    std::uint64_t seed = 1;
    ObserverModel observer;
    ExperimentConfig experiment;
    // Pointer sampling rate of the synthetic pen strokes. Stroke speed is
    // experiment.target_speed_px_s().
    double pointer_rate_hz = 20.0;
    // Forced finish after this many adjustment decisions.
    int max_adjust_steps = 500;
    // 0 = one worker per hardware thread.
    unsigned threads = 0;
};

// Throws ConfigError on a non-positive participant count, rate or step cap.
void validate(const SimulationConfig& cfg);

// "p01", "p02", ... (at least two digits).
std::string participant_label(int index);

// Session seed of participant `index`: derive_seed(run seed, index).
std::uint64_t participant_seed(std::uint64_t run_seed, int index);

// The observer draws from its own stream, separate from the trials' streams.
inline constexpr std::uint64_t kObserverStream = 0x6f62736572766572ULL;

struct ParticipantRun {
    std::string participant_id;
    std::uint64_t seed = 0;
    std::vector<TrialRecord> records;
};

// Runs one synthetic participant through the whole protocol. Study 1 trials
// get one left-to-right stroke across both areas, then an answer. Adjustment
// trials get one stroke per decision (alternating direction) until the
// observer finishes.
ParticipantRun simulate_participant(const SimulationConfig& cfg, int index);

// All participants, run in parallel; output order is by participant index and
// independent of scheduling.
std::vector<ParticipantRun> simulate_study(const SimulationConfig& cfg);

std::vector<TrialRecord> flatten(const std::vector<ParticipantRun>& runs);

// Writes logs/<participant>.{jsonl,csv} per participant and the combined
// trials.{jsonl,csv} under `out`. Returns the combined CSV path.
std::filesystem::path write_simulation(const std::vector<ParticipantRun>& runs, const std::filesystem::path& out);

// Pointer samples of a straight horizontal stroke at `speed` px/s from x0 to
// x1 (inclusive of the start, up to and including the last sample before
// passing x1), starting at time t0.
std::vector<PointerSample> horizontal_stroke(double x0, double x1, double y, double speed, double rate_hz,
                                             double t0);

}  // namespace pseudohaptic
