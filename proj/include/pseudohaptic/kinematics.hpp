#pragma once

#include <cstddef>
#include <deque>
#include <optional>

namespace pseudohaptic {

// Raw device position in screen pixels, timestamped in seconds.
struct PointerSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;

    bool operator==(const PointerSample&) const = default;
};

struct KinematicsConfig {
    // Number of samples in the trailing window (window - 1 finite differences).
    std::size_t window = 5;
    // Gap after which the pen counts as stopped and history is discarded.
    double stationary_timeout = 0.100;
};

// Speed estimate from a bounded trailing window of samples.
//
// Speed is the Euclidean magnitude of the 2-D velocity, averaged over the
// finite differences inside the window. It is the same scalar for both axes.
class KinematicState {
public:
    explicit KinematicState(KinematicsConfig cfg = {});

    // Appends a sample. Throws OrderingError unless s.t is strictly after the
    // previous sample, DomainError for non-finite fields.
    void ingest(const PointerSample& s);

    // Speed in px/s as of the last ingested sample. Zero with < 2 samples.
    double speed() const { return m_speed; }

    // Speed as seen at time `now`: decays to zero once the stationary timeout
    // has passed without a sample.
    double speed_at(double now) const;

    const std::optional<PointerSample>& last_sample() const { return m_last; }
    std::size_t history_size() const { return m_window.size(); }
    const KinematicsConfig& config() const { return m_cfg; }

    void reset();

private:
    KinematicsConfig m_cfg;
    std::deque<PointerSample> m_window;
    std::optional<PointerSample> m_last;
    double m_speed = 0.0;
};

// Value-returning form of KinematicState::ingest.
KinematicState ingest_sample(KinematicState state, const PointerSample& s);

struct DisplayMetric {
    double ppi = 220.0;
};

double mm_to_px(double mm, DisplayMetric metric = {});
double px_to_mm(double px, DisplayMetric metric = {});

}  // namespace pseudohaptic
