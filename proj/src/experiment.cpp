#include "pseudohaptic/experiment.hpp"

#include "pseudohaptic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pseudohaptic {

namespace {

// 64-bit FNV-1a, used to fold the participant id into the schedule seed.
std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const double kMaxExponent = 100.0 * std::log10(kStaircaseMaxMultiplier);
const double kMinExponent = 100.0 * std::log10(kStaircaseMinMultiplier);

template <typename Container>
std::vector<TrialSpec> balanced_blocks(const Container& conditions, int reps, Rng& rng)
{
    std::vector<TrialSpec> out;
    out.reserve(conditions.size() * static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<TrialSpec> block(conditions.begin(), conditions.end());
        for (auto& spec : block) {
            spec.reps_index = rep;
        }
        shuffle(block.begin(), block.end(), rng);
        out.insert(out.end(), block.begin(), block.end());
    }
    return out;
}

std::vector<TrialSpec> adjustment_block(Study study, Rng& rng)
{
    std::vector<TrialSpec> conditions;
    for (double alpha : kAdjustmentAlphas) {
        conditions.push_back({study, alpha, kAdjustmentLambda, Side::left, 0});
    }
    return balanced_blocks(conditions, kAdjustmentReps, rng);
}

bool is_adjustment(Study s) { return s != Study::comparison; }

std::size_t side_index(Area a) { return a == Area::left ? 0 : 1; }

}  // namespace

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(Study s)
{
    switch (s) {
    case Study::comparison: return "comparison";
    case Study::adjust_amplitude: return "adjust_amplitude";
    case Study::adjust_wavelength: return "adjust_wavelength";
    }
    return "?";
}

std::string_view to_string(Protocol p)
{
    switch (p) {
    case Protocol::comparison: return "comparison";
    case Protocol::adjust_amplitude: return "adjust_amplitude";
    case Protocol::adjust_wavelength: return "adjust_wavelength";
    case Protocol::adjustment: return "adjustment";
    }
    return "?";
}

std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

std::string_view to_string(Area a)
{
    switch (a) {
    case Area::none: return "none";
    case Area::left: return "left";
    case Area::right: return "right";
    }
    return "?";
}

std::string_view to_string(Button b)
{
    switch (b) {
    case Button::increase: return "increase";
    case Button::slight_increase: return "slight_increase";
    case Button::slight_decrease: return "slight_decrease";
    case Button::decrease: return "decrease";
    }
    return "?";
}

std::string_view to_string(EventType t)
{
    switch (t) {
    case EventType::pointer_sample: return "pointer_sample";
    case EventType::ignored: return "ignored";
    case EventType::render: return "render";
    case EventType::signal: return "signal";
    case EventType::answer: return "answer";
    case EventType::adjust: return "adjust";
    case EventType::finish: return "finish";
    case EventType::trial_complete: return "trial_complete";
    }
    return "?";
}

std::string_view to_string(TrialPhase p)
{
    switch (p) {
    case TrialPhase::moving: return "moving";
    case TrialPhase::answerable: return "answerable";
    case TrialPhase::adjusting: return "adjusting";
    case TrialPhase::complete: return "complete";
    }
    return "?";
}

Study parse_study(std::string_view s)
{
    for (auto v : {Study::comparison, Study::adjust_amplitude, Study::adjust_wavelength}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw ConfigError("unknown study '" + std::string(s) + "'");
}

Protocol parse_protocol(std::string_view s)
{
    if (s == "1") {
        return Protocol::comparison;
    }
    if (s == "2") {
        return Protocol::adjustment;
    }
    for (auto v : {Protocol::comparison, Protocol::adjust_amplitude, Protocol::adjust_wavelength,
                   Protocol::adjustment}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw ConfigError("unknown study '" + std::string(s) + "'");
}

Side parse_side(std::string_view s)
{
    if (s == "left") {
        return Side::left;
    }
    if (s == "right") {
        return Side::right;
    }
    throw ConfigError("unknown side '" + std::string(s) + "'");
}

Button parse_button(std::string_view s)
{
    for (auto v : {Button::increase, Button::slight_increase, Button::slight_decrease, Button::decrease}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw ConfigError("unknown button '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Schedule

std::vector<TrialSpec> build_schedule(Protocol protocol, std::string_view participant_id,
                                      std::uint64_t seed)
{
    Rng rng(derive_seed(seed, fnv1a(participant_id)));

    switch (protocol) {
    case Protocol::comparison: {
        std::vector<TrialSpec> conditions;
        for (double lambda : kComparisonLambdas) {
            for (double alpha : kComparisonAlphas) {
                conditions.push_back({Study::comparison, alpha, lambda, Side::left, 0});
            }
        }
        auto schedule = balanced_blocks(conditions, kComparisonReps, rng);
        for (auto& spec : schedule) {
            spec.oscillatory_side = rng.coin() ? Side::left : Side::right;
        }
        return schedule;
    }
    case Protocol::adjust_amplitude:
        return adjustment_block(Study::adjust_amplitude, rng);
    case Protocol::adjust_wavelength:
        return adjustment_block(Study::adjust_wavelength, rng);
    case Protocol::adjustment: {
        const bool amplitude_first = rng.coin();
        auto first = adjustment_block(amplitude_first ? Study::adjust_amplitude : Study::adjust_wavelength, rng);
        auto second = adjustment_block(amplitude_first ? Study::adjust_wavelength : Study::adjust_amplitude, rng);
        first.insert(first.end(), second.begin(), second.end());
        return first;
    }
    }
    throw ConfigError("unknown protocol");
}

// ---------------------------------------------------------------------------
// Staircase

int button_step(Button b)
{
    switch (b) {
    case Button::increase: return 6;
    case Button::slight_increase: return 3;
    case Button::slight_decrease: return -3;
    case Button::decrease: return -6;
    }
    throw ConfigError("unknown button");
}

StaircaseState staircase_apply(StaircaseState st, Button b)
{
    st.s += button_step(b);
    const double m = std::pow(10.0, st.s / 100.0);
    if (m > kStaircaseMaxMultiplier) {
        st.s = kMaxExponent;
    } else if (m < kStaircaseMinMultiplier) {
        st.s = kMinExponent;
    }
    return st;
}

double staircase_multiplier(const StaircaseState& st)
{
    return std::clamp(std::pow(10.0, st.s / 100.0), kStaircaseMinMultiplier, kStaircaseMaxMultiplier);
}

double staircase_value(const StaircaseState& st)
{
    return st.initial_value * staircase_multiplier(st);
}

// ---------------------------------------------------------------------------
// Records

double time_of(const TrialInput& in)
{
    return std::visit([](const auto& e) { return e.t; }, in);
}

std::optional<double> TrialRecord::final_vpp_ratio() const
{
    if (!final_multiplier) {
        return std::nullopt;
    }
    return spec.study == Study::adjust_amplitude ? *final_multiplier : 1.0;
}

std::optional<bool> TrialRecord::chose_oscillatory() const
{
    if (!selected_side) {
        return std::nullopt;
    }
    return *selected_side == spec.oscillatory_side;
}

// ---------------------------------------------------------------------------
// TrialRunner

TrialRunner::TrialRunner(std::string participant_id, std::size_t index, const TrialSpec& spec,
                         std::uint64_t seed, const ExperimentConfig& cfg)
    : m_cfg(cfg),
      m_rng(seed),
      m_kinematics(cfg.kinematics),
      m_phase(is_adjustment(spec.study) ? TrialPhase::adjusting : TrialPhase::moving)
{
    validate(DistortionConfig{spec.alpha_osc, cfg.calibration_c, seed});
    m_record.participant_id = std::move(participant_id);
    m_record.index = index;
    m_record.spec = spec;
    m_record.seed = seed;

    const Study study = spec.study;
    if (study == Study::adjust_amplitude) {
        m_staircase.initial_value = cfg.base_amplitude;
    } else if (study == Study::adjust_wavelength) {
        m_staircase.initial_value = spec.lambda;
    }
}

bool TrialRunner::traversed(Side s) const
{
    const auto& sweep = m_sweep[s == Side::left ? 0 : 1];
    if (!sweep) {
        return false;
    }
    const Rect& r = s == Side::left ? m_cfg.layout.left : m_cfg.layout.right;
    return sweep->second - sweep->first >= m_cfg.traverse_fraction * r.w;
}

double TrialRunner::alpha_of(Area a) const
{
    if (a == Area::none) {
        return 0.0;
    }
    return a == area_of(m_record.spec.oscillatory_side) ? m_record.spec.alpha_osc : 0.0;
}

SignalConfig TrialRunner::area_signal(Area a) const
{
    const auto& spec = m_record.spec;
    SignalConfig cfg{m_cfg.base_amplitude, spec.lambda, 0.0};
    const bool adjustable = a != Area::none && a != area_of(spec.oscillatory_side);
    if (adjustable && spec.study == Study::adjust_amplitude) {
        cfg.amplitude = staircase_value(m_staircase);
    } else if (adjustable && spec.study == Study::adjust_wavelength) {
        cfg.lambda = staircase_value(m_staircase);
    }
    return cfg;
}

Area TrialRunner::area_at(double x, double y) const
{
    if (m_cfg.layout.left.contains(x, y)) {
        return Area::left;
    }
    if (m_cfg.layout.right.contains(x, y)) {
        return Area::right;
    }
    return Area::none;
}

void TrialRunner::log(double t, EventType type, EventPayload payload)
{
    m_record.events.push_back(LoggedEvent{t, type, std::move(payload)});
    m_last_t = t;
}

void TrialRunner::check_time(double t) const
{
    if (!std::isfinite(t)) {
        throw DomainError("event time is not finite");
    }
    if (m_last_t && t < *m_last_t) {
        throw OrderingError("event at t=" + std::to_string(t) + " precedes t=" + std::to_string(*m_last_t));
    }
}

StepOutput TrialRunner::step(const TrialInput& input)
{
    if (m_phase == TrialPhase::complete) {
        throw ProtocolError("trial " + std::to_string(m_record.index) + " is already complete");
    }
    return std::visit(
        [this](const auto& ev) -> StepOutput {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, PointerSample>) {
                return on_pointer(ev);
            } else if constexpr (std::is_same_v<T, AnswerInput>) {
                return on_answer(ev);
            } else if constexpr (std::is_same_v<T, AdjustInput>) {
                return on_adjust(ev);
            } else {
                return on_finish(ev);
            }
        },
        input);
}

StepOutput TrialRunner::on_pointer(const PointerSample& s)
{
    check_time(s.t);
    KinematicState next = m_kinematics;
    next.ingest(s);
    m_kinematics = std::move(next);

    StepOutput out;
    const Area area = area_at(s.x, s.y);
    if (area == Area::none) {
        // Outside both areas: shown where it is, no oscillation, no vibration.
        log(s.t, EventType::ignored, s);
        out.render = RenderOutput{Area::none, DistortedPosition{round_px(s.x), round_px(s.y), 0.0, 0.0}};
        out.signal_changed = m_last_signal.has_value();
        m_last_signal.reset();
        m_area = Area::none;
        return out;
    }

    log(s.t, EventType::pointer_sample, s);
    const double speed = m_kinematics.speed();
    const double alpha = alpha_of(area);
    const DistortedPosition pos = distort(s, speed, DistortionConfig{alpha, m_cfg.calibration_c, m_record.seed}, m_rng);
    log(s.t, EventType::render, RenderPayload{area, speed, alpha, pos});
    out.render = RenderOutput{area, pos};

    auto& sweep = m_sweep[side_index(area)];
    if (!sweep) {
        sweep = std::make_pair(s.x, s.x);
    } else {
        sweep->first = std::min(sweep->first, s.x);
        sweep->second = std::max(sweep->second, s.x);
    }
    if (m_phase == TrialPhase::moving && traversed(Side::left) && traversed(Side::right)) {
        m_phase = TrialPhase::answerable;
    }

    SignalPayload sig;
    sig.area = area;
    sig.config = area_signal(area);
    sig.frequency = instantaneous_frequency(speed, sig.config);
    sig.multiplier = area == area_of(m_record.spec.oscillatory_side) || m_record.spec.study == Study::comparison
                         ? 1.0
                         : staircase_multiplier(m_staircase);
    sig.phase_reset = area != m_area;
    const bool changed = !m_last_signal || sig.phase_reset || m_last_signal->area != sig.area ||
                         m_last_signal->config != sig.config;
    if (changed) {
        log(s.t, EventType::signal, sig);
    }
    m_last_signal = sig;
    m_area = area;
    out.signal = sig;
    out.signal_changed = changed;
    return out;
}

StepOutput TrialRunner::on_answer(const AnswerInput& a)
{
    if (m_record.spec.study != Study::comparison) {
        throw ProtocolError("answer is not accepted in an adjustment trial");
    }
    if (m_phase != TrialPhase::answerable) {
        throw ProtocolError("answer before both areas were traversed");
    }
    check_time(a.t);
    log(a.t, EventType::answer, a);
    m_record.selected_side = a.side;
    log(a.t, EventType::trial_complete, CompletionPayload{a.side, std::nullopt});
    m_phase = TrialPhase::complete;

    StepOutput out;
    out.trial_complete = true;
    return out;
}

StepOutput TrialRunner::on_adjust(const AdjustInput& a)
{
    if (m_phase != TrialPhase::adjusting) {
        throw ProtocolError("adjust is only accepted in an adjustment trial");
    }
    check_time(a.t);
    m_staircase = staircase_apply(m_staircase, a.button);
    log(a.t, EventType::adjust, AdjustPayload{a.button, m_staircase.s, staircase_multiplier(m_staircase)});

    StepOutput out;
    const Area adjustable = area_of(opposite(m_record.spec.oscillatory_side));
    if (m_area == adjustable) {
        SignalPayload sig;
        sig.area = adjustable;
        sig.config = area_signal(adjustable);
        sig.frequency = instantaneous_frequency(m_kinematics.speed(), sig.config);
        sig.multiplier = staircase_multiplier(m_staircase);
        log(a.t, EventType::signal, sig);
        m_last_signal = sig;
        out.signal = sig;
        out.signal_changed = true;
    }
    return out;
}

StepOutput TrialRunner::on_finish(const FinishInput& f)
{
    if (m_phase != TrialPhase::adjusting) {
        throw ProtocolError("finish is only accepted in an adjustment trial");
    }
    check_time(f.t);
    const double m = staircase_multiplier(m_staircase);
    log(f.t, EventType::finish, f);
    m_record.final_multiplier = m;
    log(f.t, EventType::trial_complete, CompletionPayload{std::nullopt, m});
    m_phase = TrialPhase::complete;

    StepOutput out;
    out.trial_complete = true;
    return out;
}

TrialRecord replay_trial(const TrialRecord& rec, const ExperimentConfig& cfg)
{
    TrialRunner runner(rec.participant_id, rec.index, rec.spec, rec.seed, cfg);
    for (const auto& ev : rec.events) {
        switch (ev.type) {
        case EventType::pointer_sample:
        case EventType::ignored:
            runner.step(std::get<PointerSample>(ev.payload));
            break;
        case EventType::answer:
            runner.step(std::get<AnswerInput>(ev.payload));
            break;
        case EventType::adjust:
            runner.step(AdjustInput{ev.t, std::get<AdjustPayload>(ev.payload).button});
            break;
        case EventType::finish:
            runner.step(std::get<FinishInput>(ev.payload));
            break;
        case EventType::render:
        case EventType::signal:
        case EventType::trial_complete:
            break;
        }
    }
    return runner.record();
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string participant_id, Protocol protocol, std::uint64_t seed, ExperimentConfig cfg)
    : m_participant(std::move(participant_id)),
      m_protocol(protocol),
      m_seed(seed),
      m_cfg(cfg),
      m_schedule(build_schedule(protocol, m_participant, seed))
{
    start_trial();
}

std::uint64_t Session::trial_seed(std::size_t index) const
{
    return derive_seed(m_seed, index);
}

void Session::start_trial()
{
    m_runner.reset();
    if (m_cursor < m_schedule.size()) {
        m_runner.emplace(m_participant, m_cursor, m_schedule[m_cursor], trial_seed(m_cursor), m_cfg);
    }
}

StepOutput Session::step(const TrialInput& input)
{
    if (!m_runner) {
        throw ProtocolError("session has no remaining trials");
    }
    StepOutput out = m_runner->step(input);
    if (m_runner->complete()) {
        m_records.push_back(m_runner->record());
        ++m_cursor;
        start_trial();
    }
    return out;
}

}  // namespace pseudohaptic
