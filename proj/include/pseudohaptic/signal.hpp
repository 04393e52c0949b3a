#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pseudohaptic {

inline constexpr double kDefaultSampleRate = 48000.0;
inline constexpr double kUnitAmplitudeVpp = 4.67;

// Square-wave texture parameters.
//
// `lambda` is the dimensionless wavelength parameter of the striped texture.
// The waveform is A * sgn(sin(phase)), where the phase advances at the
// instantaneous frequency f = speed * lambda / 2. With lambda = 1/5 and a pen
// speed of 90 px/s this gives 9 Hz and a spatial period of 2 / lambda = 10 px.
//
// `amplitude` is normalised so that 1.0 corresponds to the reference drive
// level. It is not capped at 1: the adjustment protocol can raise it to 5x.
struct SignalConfig {
    double amplitude = 1.0;
    double lambda = 0.2;
    double phase0 = 0.0;  // radians

    bool operator==(const SignalConfig&) const = default;
};

void validate(const SignalConfig& cfg);

struct SignalState {
    double phase = 0.0;              // radians, in [0, 2*pi)
    double freq = 0.0;               // Hz, of the last synthesised sample
    std::int64_t sample_index = 0;   // samples emitted since the state was created

    bool operator==(const SignalState&) const = default;
};

// Fresh state whose phase starts at cfg.phase0.
SignalState initial_state(const SignalConfig& cfg);

// Hz. Throws ConfigError when lambda <= 0, DomainError on negative speed.
double instantaneous_frequency(double speed, const SignalConfig& cfg);

// Speed profile in px/s as a function of absolute time in seconds.
using SpeedFn = std::function<double(double)>;

struct SynthesisResult {
    std::vector<double> samples;
    SignalState state;
    bool muted = false;
    std::optional<std::string> error;
};

// Renders round(duration * sample_rate) samples.
//
// Sample n covers [n, n+1) / sample_rate in absolute time (counted from the
// state's sample_index). Speed is read at the start of the interval and the
// output sign is taken at the interval midpoint, so a crossing never falls
// exactly on a sample. The returned state resumes the waveform exactly:
// splitting a buffer into blocks gives bit-identical output.
//
// A non-finite speed anywhere in the block mutes the whole block (all zeros),
// leaves the phase where it was, and reports the error.
SynthesisResult synthesize_block(const SignalState& state, const SignalConfig& cfg,
                                 const SpeedFn& speed_fn, double duration,
                                 double sample_rate = kDefaultSampleRate);

struct VoltageMap {
    double vpp_at_unit_amplitude = kUnitAmplitudeVpp;
};

double amplitude_to_vpp(double amplitude, VoltageMap map = {});

// Number of sign changes between consecutive samples.
std::size_t count_sign_changes(std::span<const double> samples);

// Writes mono 16-bit PCM. Samples are divided by full_scale and clipped to
// [-1, 1]. Throws StorageError on I/O failure.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate = kDefaultSampleRate, double full_scale = 1.0);

// Reads back a file written by write_wav, scaled to [-1, 1].
std::vector<double> read_wav(const std::filesystem::path& path, double* sample_rate = nullptr);

// ---------------------------------------------------------------------------
// Real-time path

// Parameters the synthesis clock needs; produced from signal updates.
struct SignalParams {
    double amplitude = 0.0;
    double frequency = 0.0;
    std::uint64_t reset_epoch = 0;  // phase resets to 0 whenever this changes
};

// Single-producer / single-consumer latest-value mailbox (triple buffer).
// Neither side ever blocks or spins on the other.
template <typename T>
class LatestValue {
public:
    explicit LatestValue(const T& initial = {}) { m_buffers.fill(initial); }

    // Producer side.
    void publish(const T& value)
    {
        m_buffers[m_back] = value;
        m_back = m_middle.exchange(m_back | kDirty, std::memory_order_acq_rel) & kIndexMask;
    }

    // Consumer side. Returns the newest published value (or the previous one
    // if nothing new arrived) and whether it is new.
    const T& acquire(bool* fresh = nullptr)
    {
        const bool dirty = (m_middle.load(std::memory_order_acquire) & kDirty) != 0;
        if (dirty) {
            m_front = m_middle.exchange(m_front, std::memory_order_acq_rel) & kIndexMask;
        }
        if (fresh) {
            *fresh = dirty;
        }
        return m_buffers[m_front];
    }

private:
    static constexpr std::uint8_t kDirty = 0x4;
    static constexpr std::uint8_t kIndexMask = 0x3;

    std::array<T, 3> m_buffers{};
    std::atomic<std::uint8_t> m_middle{1};
    std::uint8_t m_back = 0;   // producer-owned
    std::uint8_t m_front = 2;  // consumer-owned
};

// Consumer that renders audio from whatever parameters were published last.
// Parameters are re-read every `max_staleness` seconds of output (10 ms by
// default), never more than that apart.
class RealtimeSynth {
public:
    explicit RealtimeSynth(double sample_rate = kDefaultSampleRate, double max_staleness = 0.010);

    void publish(const SignalParams& params) { m_mailbox.publish(params); }

    // Called from the audio clock.
    void render(std::span<double> out);

    double phase() const { return m_phase; }
    std::size_t poll_interval() const { return m_poll_interval; }

private:
    LatestValue<SignalParams> m_mailbox;
    SignalParams m_current{};
    double m_sample_rate;
    std::size_t m_poll_interval;
    std::size_t m_until_poll = 0;
    double m_phase = 0.0;
};

}  // namespace pseudohaptic
