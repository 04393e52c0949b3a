#pragma once

#include "pseudohaptic/experiment.hpp"
#include "pseudohaptic/random.hpp"

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace pseudohaptic {

enum class ObserverStrategy { greedy_adjust };

std::string_view to_string(ObserverStrategy s);
ObserverStrategy parse_strategy(std::string_view s);

// Synthetic participant. Perceived roughness of a stimulus is
// amplitude * (1 + k * alpha) plus Gaussian noise of std `sigma`; the
// wavelength of the vibration does not enter.
struct ObserverModel {
    double k = 1.0 / 60.0;
    double sigma = 0.015;
    double jnd = 0.035;
    ObserverStrategy strategy = ObserverStrategy::greedy_adjust;
    // The greedy policy only accepts a match once its step direction has
    // reversed this many times. 0 gives the plain threshold rule, which stops
    // at the first in-tolerance reading and so undershoots from the start
    // value 1.
    int min_reversals = 1;

    bool operator==(const ObserverModel&) const = default;
};

// Throws ConfigError unless k >= 0, sigma >= 0, jnd > 0, min_reversals >= 0.
void validate(const ObserverModel& obs);

struct Stimulus {
    double amplitude = 1.0;
    double alpha = 0.0;
};

// Always consumes exactly one normal variate, even when sigma is 0, so that
// runs with different noise levels stay aligned on the random stream.
double perceived_roughness(const ObserverModel& obs, const Stimulus& s, Rng& rng);

// Side whose sampled roughness is larger. Exact ties are broken with a coin.
Side decide_comparison(const ObserverModel& obs, const Stimulus& left, const Stimulus& right, Rng& rng);

// P(the oscillatory stimulus is chosen) for an oscillatory/non-oscillatory
// pair of equal amplitude.
double comparison_probability(const ObserverModel& obs, double alpha, double amplitude = 1.0);

// Noise level at which comparison_probability(alpha) equals `target`,
// found by bisection. Requires k * alpha > 0 and 0.5 < target < 1.
double calibrate_sigma(const ObserverModel& obs, double alpha, double target, double amplitude = 1.0);

enum class AdjustAction { increase, slight_increase, slight_decrease, decrease, finish };
std::string_view to_string(AdjustAction a);
Button to_button(AdjustAction a);  // throws ProtocolError for finish

// Per-trial memory of the greedy policy.
struct AdjustmentMemory {
    int last_direction = 0;  // +1 up, -1 down, 0 before the first step
    int reversals = 0;
    int steps = 0;
};

// Greedy policy on the sampled difference d = osc - nonosc:
//   |d| > 2 jnd            coarse step towards equality
//   jnd < |d| <= 2 jnd     fine step
//   |d| <= jnd             finish once `min_reversals` reversals happened,
//                          otherwise a fine step in the direction of d.
// Also finishes when the step would push against a clamp boundary.
AdjustAction decide_adjustment(const ObserverModel& obs, const Stimulus& osc, const Stimulus& nonosc,
                               const StaircaseState& staircase, AdjustmentMemory& memory, Rng& rng);

// Amplitude matching against an oscillatory reference without the trial
// machinery: the non-oscillatory amplitude is base * multiplier. Returns the
// final multiplier; stops after `max_steps` presses.
double run_adjustment_staircase(const ObserverModel& obs, double alpha, Rng& rng, int max_steps = 500,
                                double base_amplitude = 1.0);

// Key/value config: one `key = value` per line, '#' starts a comment.
// Keys: k, sigma, jnd, strategy, min_reversals. Numbers may be written as
// fractions ("1/60"). Unknown keys and malformed values throw ConfigError.
ObserverModel parse_observer_config(std::istream& is);
ObserverModel load_observer_config(const std::filesystem::path& path);

}  // namespace pseudohaptic
