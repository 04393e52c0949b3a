#include "pseudohaptic/kinematics.hpp"

#include "pseudohaptic/errors.hpp"

#include <cmath>
#include <string>

namespace pseudohaptic {

namespace {

constexpr double kMillimetersPerInch = 25.4;

void check_metric(DisplayMetric metric)
{
    if (!(metric.ppi > 0.0) || !std::isfinite(metric.ppi)) {
        throw ConfigError("display ppi must be positive, got " + std::to_string(metric.ppi));
    }
}

}  // namespace

KinematicState::KinematicState(KinematicsConfig cfg) : m_cfg(cfg)
{
    if (m_cfg.window < 2) {
        throw ConfigError("kinematics window must hold at least 2 samples");
    }
    if (!(m_cfg.stationary_timeout > 0.0)) {
        throw ConfigError("stationary timeout must be positive");
    }
}

void KinematicState::ingest(const PointerSample& s)
{
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y)) {
        throw DomainError("pointer sample has a non-finite field");
    }
    if (m_last && !(s.t > m_last->t)) {
        throw OrderingError("pointer sample at t=" + std::to_string(s.t) +
                            " does not follow t=" + std::to_string(m_last->t));
    }

    if (m_last && s.t - m_last->t > m_cfg.stationary_timeout) {
        m_window.clear();
    }
    m_window.push_back(s);
    while (m_window.size() > m_cfg.window) {
        m_window.pop_front();
    }
    m_last = s;

    if (m_window.size() < 2) {
        m_speed = 0.0;
        return;
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < m_window.size(); ++i) {
        const auto& a = m_window[i - 1];
        const auto& b = m_window[i];
        sum += std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
    }
    m_speed = sum / static_cast<double>(m_window.size() - 1);
}

double KinematicState::speed_at(double now) const
{
    if (!m_last || now - m_last->t > m_cfg.stationary_timeout) {
        return 0.0;
    }
    return m_speed;
}

void KinematicState::reset()
{
    m_window.clear();
    m_last.reset();
    m_speed = 0.0;
}

KinematicState ingest_sample(KinematicState state, const PointerSample& s)
{
    state.ingest(s);
    return state;
}

double mm_to_px(double mm, DisplayMetric metric)
{
    check_metric(metric);
    if (!std::isfinite(mm)) {
        throw DomainError("length in mm is not finite");
    }
    return mm * metric.ppi / kMillimetersPerInch;
}

double px_to_mm(double px, DisplayMetric metric)
{
    check_metric(metric);
    if (!std::isfinite(px)) {
        throw DomainError("length in px is not finite");
    }
    return px * kMillimetersPerInch / metric.ppi;
}

}  // namespace pseudohaptic
