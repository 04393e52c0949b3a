#include "pseudohaptic/simulation.hpp"

#include "pseudohaptic/errors.hpp"
#include "pseudohaptic/trial_log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <thread>

namespace pseudohaptic {

namespace {

// Pause between the end of a stroke and the button press, and between
// successive adjustment strokes.
constexpr double kResponseDelay = 0.5;
// Strokes start and end this far outside the areas.
constexpr double kStrokeMargin = 10.0;

Stimulus stimulus_of(const TrialRunner& runner, Area a)
{
    return {runner.area_signal(a).amplitude, runner.alpha_of(a)};
}

struct StrokeExtent {
    double x_min;
    double x_max;
    double y;
};

StrokeExtent stroke_extent(const AreaLayout& layout)
{
    const double x_min = std::min(layout.left.x, layout.right.x) - kStrokeMargin;
    const double x_max = std::max(layout.left.x + layout.left.w, layout.right.x + layout.right.w) + kStrokeMargin;
    const double top = std::max(layout.left.y, layout.right.y);
    const double bottom = std::min(layout.left.y + layout.left.h, layout.right.y + layout.right.h);
    return {x_min, x_max, 0.5 * (top + bottom)};
}

// Feeds a stroke into the session and returns the time of its last sample.
double run_stroke(Session& session, const std::vector<PointerSample>& stroke)
{
    for (const auto& s : stroke) {
        session.step(s);
    }
    return stroke.back().t;
}

void run_comparison_trial(Session& session, const SimulationConfig& cfg, const StrokeExtent& ext, Rng& obs_rng)
{
    const double speed = cfg.experiment.target_speed_px_s();
    const double t_end =
        run_stroke(session, horizontal_stroke(ext.x_min, ext.x_max, ext.y, speed, cfg.pointer_rate_hz, 0.0));
    const TrialRunner& runner = *session.current();
    const Side choice = decide_comparison(cfg.observer, stimulus_of(runner, Area::left),
                                          stimulus_of(runner, Area::right), obs_rng);
    session.step(AnswerInput{t_end + kResponseDelay, choice});
}

void run_adjustment_trial(Session& session, const SimulationConfig& cfg, const StrokeExtent& ext, Rng& obs_rng)
{
    const double speed = cfg.experiment.target_speed_px_s();
    AdjustmentMemory memory;
    double t = 0.0;
    bool rightward = true;
    for (int step = 0; step < cfg.max_adjust_steps; ++step) {
        const auto stroke = rightward ? horizontal_stroke(ext.x_min, ext.x_max, ext.y, speed, cfg.pointer_rate_hz, t)
                                      : horizontal_stroke(ext.x_max, ext.x_min, ext.y, speed, cfg.pointer_rate_hz, t);
        rightward = !rightward;
        t = run_stroke(session, stroke) + kResponseDelay;

        const TrialRunner& runner = *session.current();
        const Area osc = area_of(runner.spec().oscillatory_side);
        const Area adj = area_of(opposite(runner.spec().oscillatory_side));
        const AdjustAction action = decide_adjustment(cfg.observer, stimulus_of(runner, osc),
                                                      stimulus_of(runner, adj), runner.staircase(), memory, obs_rng);
        if (action == AdjustAction::finish) {
            session.step(FinishInput{t});
            return;
        }
        session.step(AdjustInput{t, to_button(action)});
        t += kResponseDelay;
    }
    session.step(FinishInput{t});
}

}  // namespace

void validate(const SimulationConfig& cfg)
{
    if (cfg.participants < 1) {
        throw ConfigError("participants must be >= 1");
    }
    if (!(cfg.pointer_rate_hz > 0.0) || !std::isfinite(cfg.pointer_rate_hz)) {
        throw ConfigError("pointer rate must be positive");
    }
    if (cfg.max_adjust_steps < 1) {
        throw ConfigError("max_adjust_steps must be >= 1");
    }
    validate(cfg.observer);
}

std::string participant_label(int index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%02d", index + 1);
    return buf;
}

std::uint64_t participant_seed(std::uint64_t run_seed, int index)
{
    return derive_seed(run_seed, static_cast<std::uint64_t>(index));
}

std::vector<PointerSample> horizontal_stroke(double x0, double x1, double y, double speed, double rate_hz,
                                             double t0)
{
    if (!(speed > 0.0) || !(rate_hz > 0.0)) {
        throw DomainError("stroke speed and rate must be positive");
    }
    const double distance = std::abs(x1 - x0);
    const double dir = x1 >= x0 ? 1.0 : -1.0;
    const double dt = 1.0 / rate_hz;
    const auto n = static_cast<std::size_t>(std::floor(distance / (speed * dt))) + 1;
    std::vector<PointerSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double elapsed = static_cast<double>(i) * dt;
        out.push_back({t0 + elapsed, x0 + dir * speed * elapsed, y});
    }
    return out;
}

ParticipantRun simulate_participant(const SimulationConfig& cfg, int index)
{
    validate(cfg);
    ParticipantRun run;
    run.participant_id = participant_label(index);
    run.seed = participant_seed(cfg.seed, index);

    Session session(run.participant_id, cfg.protocol, run.seed, cfg.experiment);
    Rng obs_rng(derive_seed(run.seed, kObserverStream));
    const StrokeExtent ext = stroke_extent(cfg.experiment.layout);

    while (!session.finished()) {
        if (session.current()->spec().study == Study::comparison) {
            run_comparison_trial(session, cfg, ext, obs_rng);
        } else {
            run_adjustment_trial(session, cfg, ext, obs_rng);
        }
    }
    run.records = session.records();
    return run;
}

std::vector<ParticipantRun> simulate_study(const SimulationConfig& cfg)
{
    validate(cfg);
    const auto n = static_cast<std::size_t>(cfg.participants);
    unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    std::vector<ParticipantRun> runs(n);
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += workers) {
            runs[i] = simulate_participant(cfg, static_cast<int>(i));
        }
    };
    if (workers == 1) {
        work(0);
        return runs;
    }
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, work, w));
    }
    for (auto& j : jobs) {
        j.get();
    }
    return runs;
}

std::vector<TrialRecord> flatten(const std::vector<ParticipantRun>& runs)
{
    std::vector<TrialRecord> all;
    for (const auto& r : runs) {
        all.insert(all.end(), r.records.begin(), r.records.end());
    }
    return all;
}

std::filesystem::path write_simulation(const std::vector<ParticipantRun>& runs, const std::filesystem::path& out)
{
    for (const auto& r : runs) {
        export_trial_logs(r.records, out / "logs", r.participant_id);
    }
    return export_trial_logs(flatten(runs), out, "trials").summary;
}

}  // namespace pseudohaptic
