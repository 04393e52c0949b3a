#pragma once

#include "pseudohaptic/distortion.hpp"
#include "pseudohaptic/kinematics.hpp"
#include "pseudohaptic/random.hpp"
#include "pseudohaptic/signal.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pseudohaptic {

// ---------------------------------------------------------------------------
// Vocabulary

enum class Study { comparison, adjust_amplitude, adjust_wavelength };

// What a session runs: a single study, or both adjustment experiments back
// to back (block order counterbalanced by seed).
enum class Protocol { comparison, adjust_amplitude, adjust_wavelength, adjustment };

enum class Side { left, right };
enum class Area { none, left, right };
enum class Button { increase, slight_increase, slight_decrease, decrease };

std::string_view to_string(Study s);
std::string_view to_string(Protocol p);
std::string_view to_string(Side s);
std::string_view to_string(Area a);
std::string_view to_string(Button b);

// Parsers throw ConfigError on unknown names. parse_protocol also accepts
// "1" (comparison) and "2" (adjustment).
Study parse_study(std::string_view s);
Protocol parse_protocol(std::string_view s);
Side parse_side(std::string_view s);
Button parse_button(std::string_view s);

inline Side opposite(Side s) { return s == Side::left ? Side::right : Side::left; }
inline Area area_of(Side s) { return s == Side::left ? Area::left : Area::right; }

// Visual conditions and repetitions of the two studies.
inline constexpr std::array<double, 4> kComparisonAlphas{1.5, 2.0, 2.5, 3.0};
inline constexpr std::array<double, 3> kComparisonLambdas{1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0};
inline constexpr int kComparisonReps = 10;
inline constexpr std::array<double, 6> kAdjustmentAlphas{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
inline constexpr double kAdjustmentLambda = 1.0 / 5.0;
inline constexpr int kAdjustmentReps = 5;

struct TrialSpec {
    Study study = Study::comparison;
    double alpha_osc = 0.0;
    double lambda = kAdjustmentLambda;
    Side oscillatory_side = Side::left;
    int reps_index = 0;

    bool operator==(const TrialSpec&) const = default;
};

// Seeded, balanced trial order. Every condition appears exactly `reps` times;
// each repetition block contains every condition once, in shuffled order.
// Comparison trials draw the oscillatory side with a fair coin; adjustment
// trials always put the oscillatory area on the left.
std::vector<TrialSpec> build_schedule(Protocol protocol, std::string_view participant_id,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Method-of-adjustment staircase: value = initial * 10^(S/100), S from 0 in
// steps of +-6 (coarse) or +-3 (fine), multiplier clamped to [1/5, 5].

inline constexpr double kStaircaseMinMultiplier = 0.2;
inline constexpr double kStaircaseMaxMultiplier = 5.0;

struct StaircaseState {
    double s = 0.0;
    double initial_value = 1.0;

    bool operator==(const StaircaseState&) const = default;
};

int button_step(Button b);

// Applies one button press. When the resulting multiplier would leave the
// clamp range, S is set to the exponent of the boundary multiplier.
StaircaseState staircase_apply(StaircaseState st, Button b);

double staircase_multiplier(const StaircaseState& st);
double staircase_value(const StaircaseState& st);

// ---------------------------------------------------------------------------
// Screen layout

struct Rect {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool contains(double px, double py) const
    {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    bool operator==(const Rect&) const = default;
};

struct AreaLayout {
    Rect left{90.0, 120.0, 180.0, 180.0};
    Rect right{360.0, 120.0, 180.0, 180.0};
};

struct ExperimentConfig {
    AreaLayout layout;
    KinematicsConfig kinematics;
    DisplayMetric display;
    VoltageMap voltage;
    double calibration_c = kDefaultCalibrationSeconds;
    double base_amplitude = 1.0;
    // Pacing target for the elongating bar. Advisory only.
    double target_speed_mm_s = 10.4;
    // Fraction of an area's width the pointer must sweep to count as traversed.
    double traverse_fraction = 0.9;

    double target_speed_px_s() const { return mm_to_px(target_speed_mm_s, display); }
};

// ---------------------------------------------------------------------------
// Trial events

struct AnswerInput {
    double t = 0.0;
    Side side = Side::left;
    bool operator==(const AnswerInput&) const = default;
};
struct AdjustInput {
    double t = 0.0;
    Button button = Button::increase;
    bool operator==(const AdjustInput&) const = default;
};
struct FinishInput {
    double t = 0.0;
    bool operator==(const FinishInput&) const = default;
};

using TrialInput = std::variant<PointerSample, AnswerInput, AdjustInput, FinishInput>;

double time_of(const TrialInput& in);

struct RenderPayload {
    Area area = Area::none;
    double speed = 0.0;
    double alpha = 0.0;
    DistortedPosition position;
    bool operator==(const RenderPayload&) const = default;
};

struct SignalPayload {
    Area area = Area::none;
    SignalConfig config;
    double frequency = 0.0;
    double multiplier = 1.0;   // staircase multiplier behind `config` (1 when fixed)
    bool phase_reset = false;  // set on entry into an area
    bool operator==(const SignalPayload&) const = default;
};

struct AdjustPayload {
    Button button = Button::increase;
    double s = 0.0;
    double multiplier = 1.0;
    bool operator==(const AdjustPayload&) const = default;
};

struct CompletionPayload {
    std::optional<Side> selected_side;
    std::optional<double> final_multiplier;
    bool operator==(const CompletionPayload&) const = default;
};

enum class EventType { pointer_sample, ignored, render, signal, answer, adjust, finish, trial_complete };
std::string_view to_string(EventType t);

using EventPayload = std::variant<PointerSample, RenderPayload, SignalPayload, AnswerInput,
                                  AdjustPayload, FinishInput, CompletionPayload>;

struct LoggedEvent {
    double t = 0.0;
    EventType type = EventType::pointer_sample;
    EventPayload payload;
    bool operator==(const LoggedEvent&) const = default;
};

struct TrialRecord {
    std::string participant_id;
    std::size_t index = 0;
    TrialSpec spec;
    std::uint64_t seed = 0;
    std::vector<LoggedEvent> events;
    std::optional<Side> selected_side;
    std::optional<double> final_multiplier;

    bool completed() const { return selected_side.has_value() || final_multiplier.has_value(); }
    // Ratio of the adjusted non-oscillatory drive voltage to the reference.
    // Equals the multiplier in the amplitude experiment and 1 otherwise.
    std::optional<double> final_vpp_ratio() const;
    // Comparison trials: whether the oscillatory area was chosen.
    std::optional<bool> chose_oscillatory() const;

    bool operator==(const TrialRecord&) const = default;
};

struct RenderOutput {
    Area area = Area::none;
    DistortedPosition position;
};

struct StepOutput {
    std::optional<RenderOutput> render;
    // Signal of the area under the pointer. Empty when the pointer is outside
    // both areas (silence).
    std::optional<SignalPayload> signal;
    bool signal_changed = false;
    bool trial_complete = false;
};

enum class TrialPhase { moving, answerable, adjusting, complete };
std::string_view to_string(TrialPhase p);

// State machine for one trial. Owns the trial's RNG (seeded from the record
// seed), kinematics and staircase, and appends every input and output to the
// trial's event log.
class TrialRunner {
public:
    TrialRunner(std::string participant_id, std::size_t index, const TrialSpec& spec,
                std::uint64_t seed, const ExperimentConfig& cfg);

    // Throws ProtocolError for events illegal in the current phase,
    // OrderingError for time going backwards. On error nothing is logged and
    // the runner state is unchanged.
    StepOutput step(const TrialInput& input);

    TrialPhase phase() const { return m_phase; }
    bool complete() const { return m_phase == TrialPhase::complete; }
    bool traversed(Side s) const;
    const TrialRecord& record() const { return m_record; }
    const TrialSpec& spec() const { return m_record.spec; }

    // Signal configuration of an area with the current staircase applied.
    SignalConfig area_signal(Area a) const;
    double alpha_of(Area a) const;
    Area area_at(double x, double y) const;
    Area current_area() const { return m_area; }
    const StaircaseState& staircase() const { return m_staircase; }
    double speed() const { return m_kinematics.speed(); }

private:
    StepOutput on_pointer(const PointerSample& s);
    StepOutput on_answer(const AnswerInput& a);
    StepOutput on_adjust(const AdjustInput& a);
    StepOutput on_finish(const FinishInput& f);
    void log(double t, EventType type, EventPayload payload);
    void check_time(double t) const;

    ExperimentConfig m_cfg;
    TrialRecord m_record;
    Rng m_rng;
    KinematicState m_kinematics;
    StaircaseState m_staircase;
    TrialPhase m_phase;
    Area m_area = Area::none;
    std::optional<SignalPayload> m_last_signal;
    std::optional<double> m_last_t;
    // Swept x-extent inside each area: {min, max}; index 0 = left.
    std::array<std::optional<std::pair<double, double>>, 2> m_sweep;
};

// Re-runs a record's inputs with its seed. For a record produced by
// TrialRunner under the same config the result compares equal.
TrialRecord replay_trial(const TrialRecord& rec, const ExperimentConfig& cfg);

// A participant's full run through a schedule.
class Session {
public:
    Session(std::string participant_id, Protocol protocol, std::uint64_t seed,
            ExperimentConfig cfg = {});

    // Advances the current trial. Throws ProtocolError once all trials are done.
    StepOutput step(const TrialInput& input);

    const std::string& participant_id() const { return m_participant; }
    Protocol protocol() const { return m_protocol; }
    std::uint64_t seed() const { return m_seed; }
    const ExperimentConfig& config() const { return m_cfg; }
    const std::vector<TrialSpec>& schedule() const { return m_schedule; }
    std::size_t cursor() const { return m_cursor; }
    bool finished() const { return m_cursor >= m_schedule.size(); }
    const std::vector<TrialRecord>& records() const { return m_records; }
    // Null once the schedule is exhausted.
    const TrialRunner* current() const { return m_runner ? &*m_runner : nullptr; }

    // Seed of trial `index`: derive_seed(session seed, index).
    std::uint64_t trial_seed(std::size_t index) const;

private:
    void start_trial();

    std::string m_participant;
    Protocol m_protocol;
    std::uint64_t m_seed;
    ExperimentConfig m_cfg;
    std::vector<TrialSpec> m_schedule;
    std::size_t m_cursor = 0;
    std::vector<TrialRecord> m_records;
    std::optional<TrialRunner> m_runner;
};

}  // namespace pseudohaptic
