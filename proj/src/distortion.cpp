#include "pseudohaptic/distortion.hpp"

#include "pseudohaptic/errors.hpp"

#include <cmath>
#include <string>

namespace pseudohaptic {

void validate(const DistortionConfig& cfg)
{
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) {
        throw ConfigError("distortion alpha must be >= 0, got " + std::to_string(cfg.alpha));
    }
    if (!(cfg.c > 0.0) || !std::isfinite(cfg.c)) {
        throw ConfigError("distortion constant C must be > 0, got " + std::to_string(cfg.c));
    }
}

double offset_bound(const DistortionConfig& cfg, double speed)
{
    return cfg.c * cfg.alpha * speed;
}

DistortedPosition distort(const PointerSample& origin, double speed,
                          const DistortionConfig& cfg, Rng& rng)
{
    validate(cfg);
    if (!(speed >= 0.0) || !std::isfinite(speed)) {
        throw DomainError("speed must be finite and >= 0");
    }

    DistortedPosition out;
    if (cfg.alpha > 0.0) {
        const double bound = offset_bound(cfg, speed);
        out.dx = bound * rng.uniform_pm1();
        out.dy = bound * rng.uniform_pm1();
    }
    out.x_vis = round_px(origin.x + out.dx);
    out.y_vis = round_px(origin.y + out.dy);
    return out;
}

std::int64_t round_px(double v)
{
    if (!std::isfinite(v)) {
        throw DomainError("pixel coordinate is not finite");
    }
    return static_cast<std::int64_t>(std::llround(v));
}

}  // namespace pseudohaptic
