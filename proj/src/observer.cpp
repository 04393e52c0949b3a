#include "pseudohaptic/observer.hpp"

#include "pseudohaptic/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

namespace pseudohaptic {

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(std::string_view text, std::string_view key)
{
    auto plain = [&](std::string_view part) {
        double v = 0.0;
        const auto* end = part.data() + part.size();
        auto [ptr, ec] = std::from_chars(part.data(), end, v);
        if (ec != std::errc() || ptr != end) {
            throw ConfigError("observer config: bad number '" + std::string(text) + "' for " + std::string(key));
        }
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return plain(trim(text));
    }
    const double den = plain(trim(text.substr(slash + 1)));
    if (den == 0.0) {
        throw ConfigError("observer config: zero denominator for " + std::string(key));
    }
    return plain(trim(text.substr(0, slash))) / den;
}

}  // namespace

std::string_view to_string(ObserverStrategy s)
{
    switch (s) {
    case ObserverStrategy::greedy_adjust: return "greedy_adjust";
    }
    return "?";
}

ObserverStrategy parse_strategy(std::string_view s)
{
    if (s == "greedy_adjust") {
        return ObserverStrategy::greedy_adjust;
    }
    throw ConfigError("unknown observer strategy '" + std::string(s) + "'");
}

void validate(const ObserverModel& obs)
{
    if (!(obs.k >= 0.0) || !std::isfinite(obs.k)) {
        throw ConfigError("observer k must be finite and >= 0");
    }
    if (!(obs.sigma >= 0.0) || !std::isfinite(obs.sigma)) {
        throw ConfigError("observer sigma must be finite and >= 0");
    }
    if (!(obs.jnd > 0.0) || !std::isfinite(obs.jnd)) {
        throw ConfigError("observer jnd must be finite and > 0");
    }
    if (obs.min_reversals < 0) {
        throw ConfigError("observer min_reversals must be >= 0");
    }
}

double perceived_roughness(const ObserverModel& obs, const Stimulus& s, Rng& rng)
{
    const double noise = rng.normal();
    return s.amplitude * (1.0 + obs.k * s.alpha) + obs.sigma * noise;
}

Side decide_comparison(const ObserverModel& obs, const Stimulus& left, const Stimulus& right, Rng& rng)
{
    const double l = perceived_roughness(obs, left, rng);
    const double r = perceived_roughness(obs, right, rng);
    if (l == r) {
        return rng.coin() ? Side::left : Side::right;
    }
    return l > r ? Side::left : Side::right;
}

double comparison_probability(const ObserverModel& obs, double alpha, double amplitude)
{
    const double gap = amplitude * obs.k * alpha;
    if (obs.sigma == 0.0) {
        return gap > 0.0 ? 1.0 : (gap < 0.0 ? 0.0 : 0.5);
    }
    // Difference of two independent noisy readings has std sigma * sqrt(2).
    return phi(gap / (obs.sigma * std::sqrt(2.0)));
}

double calibrate_sigma(const ObserverModel& obs, double alpha, double target, double amplitude)
{
    if (!(target > 0.5 && target < 1.0)) {
        throw DomainError("calibration target must lie in (0.5, 1)");
    }
    if (!(obs.k * alpha * amplitude > 0.0)) {
        throw DomainError("calibration needs a positive roughness gap");
    }
    ObserverModel probe = obs;
    double lo = 1e-12;  // probability near 1
    double hi = 1.0;    // grown until probability drops below target
    probe.sigma = hi;
    while (comparison_probability(probe, alpha, amplitude) > target) {
        hi *= 2.0;
        probe.sigma = hi;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        probe.sigma = mid;
        if (comparison_probability(probe, alpha, amplitude) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string_view to_string(AdjustAction a)
{
    switch (a) {
    case AdjustAction::increase: return "increase";
    case AdjustAction::slight_increase: return "slight_increase";
    case AdjustAction::slight_decrease: return "slight_decrease";
    case AdjustAction::decrease: return "decrease";
    case AdjustAction::finish: return "finish";
    }
    return "?";
}

Button to_button(AdjustAction a)
{
    switch (a) {
    case AdjustAction::increase: return Button::increase;
    case AdjustAction::slight_increase: return Button::slight_increase;
    case AdjustAction::slight_decrease: return Button::slight_decrease;
    case AdjustAction::decrease: return Button::decrease;
    case AdjustAction::finish: break;
    }
    throw ProtocolError("finish is not a staircase button");
}

AdjustAction decide_adjustment(const ObserverModel& obs, const Stimulus& osc, const Stimulus& nonosc,
                               const StaircaseState& staircase, AdjustmentMemory& memory, Rng& rng)
{
    const double d = perceived_roughness(obs, osc, rng) - perceived_roughness(obs, nonosc, rng);
    const double mag = std::abs(d);
    if (mag <= obs.jnd && memory.reversals >= obs.min_reversals) {
        return AdjustAction::finish;
    }

    const int direction = d > 0.0 ? 1 : -1;
    // pow(10, log10(5)) need not round back to exactly 5.
    const double m = staircase_multiplier(staircase);
    const bool at_top = m >= kStaircaseMaxMultiplier * (1.0 - 1e-12);
    const bool at_bottom = m <= kStaircaseMinMultiplier * (1.0 + 1e-12);
    if ((direction > 0 && at_top) || (direction < 0 && at_bottom)) {
        return AdjustAction::finish;
    }

    if (memory.last_direction != 0 && direction != memory.last_direction) {
        ++memory.reversals;
    }
    memory.last_direction = direction;
    ++memory.steps;

    const bool coarse = mag > 2.0 * obs.jnd;
    if (direction > 0) {
        return coarse ? AdjustAction::increase : AdjustAction::slight_increase;
    }
    return coarse ? AdjustAction::decrease : AdjustAction::slight_decrease;
}

double run_adjustment_staircase(const ObserverModel& obs, double alpha, Rng& rng, int max_steps,
                                double base_amplitude)
{
    StaircaseState st{0.0, base_amplitude};
    AdjustmentMemory memory;
    const Stimulus osc{base_amplitude, alpha};
    for (int i = 0; i < max_steps; ++i) {
        const Stimulus nonosc{staircase_value(st), 0.0};
        const AdjustAction a = decide_adjustment(obs, osc, nonosc, st, memory, rng);
        if (a == AdjustAction::finish) {
            break;
        }
        st = staircase_apply(st, to_button(a));
    }
    return staircase_multiplier(st);
}

ObserverModel parse_observer_config(std::istream& is)
{
    ObserverModel obs;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("observer config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string_view key = trim(view.substr(0, eq));
        const std::string_view value = trim(view.substr(eq + 1));
        if (key == "k") {
            obs.k = parse_number(value, key);
        } else if (key == "sigma") {
            obs.sigma = parse_number(value, key);
        } else if (key == "jnd") {
            obs.jnd = parse_number(value, key);
        } else if (key == "strategy") {
            obs.strategy = parse_strategy(value);
        } else if (key == "min_reversals") {
            const double v = parse_number(value, key);
            if (v != std::floor(v)) {
                throw ConfigError("observer config: min_reversals must be an integer");
            }
            obs.min_reversals = static_cast<int>(v);
        } else {
            throw ConfigError("observer config line " + std::to_string(lineno) + ": unknown key '" +
                              std::string(key) + "'");
        }
    }
    validate(obs);
    return obs;
}

ObserverModel load_observer_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open observer config " + path.string());
    }
    return parse_observer_config(in);
}

}  // namespace pseudohaptic
