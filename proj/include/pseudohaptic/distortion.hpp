#pragma once

#include "pseudohaptic/kinematics.hpp"
#include "pseudohaptic/random.hpp"

#include <cstdint>

namespace pseudohaptic {

// Calibration constant: 1.8 px = C * alpha(2) * 90 px/s  =>  C = 0.01 s.
inline constexpr double kDefaultCalibrationSeconds = 0.01;

struct DistortionConfig {
    double alpha = 0.0;                           // size of visual oscillation
    double c = kDefaultCalibrationSeconds;        // seconds
    std::uint64_t rng_seed = 0;
};

// Throws ConfigError on alpha < 0 or c <= 0.
void validate(const DistortionConfig& cfg);

struct DistortedPosition {
    std::int64_t x_vis = 0;
    std::int64_t y_vis = 0;
    double dx = 0.0;
    double dy = 0.0;

    bool operator==(const DistortedPosition&) const = default;
};

// Half-width of the uniform offset on each axis: c * alpha * speed.
double offset_bound(const DistortionConfig& cfg, double speed);

// Moves the pointer by an independent uniform offset on each axis, scaled by
// the current speed, then snaps to the integer pixel grid.
// Consumes exactly two draws from `rng` (x then y) unless alpha == 0, in which
// case no draws are taken and the offsets are exactly zero.
DistortedPosition distort(const PointerSample& origin, double speed,
                          const DistortionConfig& cfg, Rng& rng);

// Round to nearest, ties away from zero. Throws DomainError if not finite.
std::int64_t round_px(double v);

}  // namespace pseudohaptic
