#include "pseudohaptic/signal.hpp"

#include "pseudohaptic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace pseudohaptic {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phase)
{
    double p = std::fmod(phase, kTwoPi);
    if (p < 0.0) {
        p += kTwoPi;
    }
    return p;
}

// Level of the square wave over one sample whose interval starts at `phase`.
double square_at_midpoint(double phase, double dphi, double amplitude)
{
    return std::sin(phase + 0.5 * dphi) >= 0.0 ? amplitude : -amplitude;
}

template <typename T>
void put_le(std::ofstream& os, T value)
{
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

}  // namespace

void validate(const SignalConfig& cfg)
{
    if (!(cfg.amplitude > 0.0) || !std::isfinite(cfg.amplitude)) {
        throw ConfigError("signal amplitude must be > 0");
    }
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
        throw ConfigError("signal lambda must be > 0");
    }
    if (!std::isfinite(cfg.phase0)) {
        throw ConfigError("signal phase must be finite");
    }
}

SignalState initial_state(const SignalConfig& cfg)
{
    SignalState st;
    st.phase = wrap_phase(cfg.phase0);
    return st;
}

double instantaneous_frequency(double speed, const SignalConfig& cfg)
{
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
        throw ConfigError("signal lambda must be > 0");
    }
    if (!(speed >= 0.0)) {
        throw DomainError("speed must be >= 0");
    }
    return speed * cfg.lambda / 2.0;
}

SynthesisResult synthesize_block(const SignalState& state, const SignalConfig& cfg,
                                 const SpeedFn& speed_fn, double duration, double sample_rate)
{
    validate(cfg);
    if (!(duration > 0.0) || !(sample_rate > 0.0)) {
        throw ConfigError("duration and sample rate must be positive");
    }

    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    SynthesisResult result;
    result.samples.resize(n);
    result.state = state;

    // Frequencies first, so a bad speed mutes the block before any phase moves.
    std::vector<double> freqs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(state.sample_index + static_cast<std::int64_t>(i)) / sample_rate;
        const double v = speed_fn(t);
        if (!std::isfinite(v) || v < 0.0) {
            result.muted = true;
            result.error = "speed at t=" + std::to_string(t) + " is not a finite non-negative number";
            std::fill(result.samples.begin(), result.samples.end(), 0.0);
            result.state.freq = 0.0;
            result.state.sample_index += static_cast<std::int64_t>(n);
            return result;
        }
        freqs[i] = v * cfg.lambda / 2.0;
    }

    double phase = state.phase;
    for (std::size_t i = 0; i < n; ++i) {
        const double dphi = kTwoPi * freqs[i] / sample_rate;
        result.samples[i] = square_at_midpoint(phase, dphi, cfg.amplitude);
        phase = wrap_phase(phase + dphi);
    }
    result.state.phase = phase;
    result.state.freq = n > 0 ? freqs.back() : state.freq;
    result.state.sample_index += static_cast<std::int64_t>(n);
    return result;
}

double amplitude_to_vpp(double amplitude, VoltageMap map)
{
    if (!(map.vpp_at_unit_amplitude > 0.0)) {
        throw ConfigError("voltage map must be positive");
    }
    if (!(amplitude >= 0.0)) {
        throw DomainError("amplitude must be >= 0");
    }
    return amplitude * map.vpp_at_unit_amplitude;
}

std::size_t count_sign_changes(std::span<const double> samples)
{
    std::size_t changes = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if ((samples[i] > 0.0) != (samples[i - 1] > 0.0)) {
            ++changes;
        }
    }
    return changes;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate, double full_scale)
{
    if (!(full_scale > 0.0)) {
        throw ConfigError("WAV full scale must be positive");
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw StorageError("cannot open " + path.string() + " for writing");
    }
    const auto rate = static_cast<std::uint32_t>(std::llround(sample_rate));
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);

    os.write("RIFF", 4);
    put_le<std::uint32_t>(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    put_le<std::uint32_t>(os, 16);
    put_le<std::uint16_t>(os, 1);  // PCM
    put_le<std::uint16_t>(os, 1);  // mono
    put_le<std::uint32_t>(os, rate);
    put_le<std::uint32_t>(os, rate * 2);
    put_le<std::uint16_t>(os, 2);
    put_le<std::uint16_t>(os, 16);
    os.write("data", 4);
    put_le<std::uint32_t>(os, data_bytes);
    for (double s : samples) {
        const double clipped = std::clamp(s / full_scale, -1.0, 1.0);
        const auto pcm = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
        put_le<std::uint16_t>(os, static_cast<std::uint16_t>(pcm));
    }
    if (!os) {
        throw StorageError("write failed for " + path.string());
    }
}

std::vector<double> read_wav(const std::filesystem::path& path, double* sample_rate)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw StorageError("cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DomainError(path.string() + " is not a RIFF/WAVE file");
    }
    if (get_le<std::uint16_t>(bytes.data() + 20) != 1 || get_le<std::uint16_t>(bytes.data() + 22) != 1 ||
        get_le<std::uint16_t>(bytes.data() + 34) != 16) {
        throw DomainError(path.string() + " is not mono 16-bit PCM");
    }
    if (sample_rate) {
        *sample_rate = get_le<std::uint32_t>(bytes.data() + 24);
    }
    const auto data_bytes = std::min<std::size_t>(get_le<std::uint32_t>(bytes.data() + 40), bytes.size() - 44);
    std::vector<double> out(data_bytes / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto pcm = static_cast<std::int16_t>(get_le<std::uint16_t>(bytes.data() + 44 + 2 * i));
        out[i] = pcm / 32767.0;
    }
    return out;
}

RealtimeSynth::RealtimeSynth(double sample_rate, double max_staleness)
    : m_sample_rate(sample_rate),
      m_poll_interval(static_cast<std::size_t>(std::floor(max_staleness * sample_rate)))
{
    if (!(sample_rate > 0.0) || m_poll_interval == 0) {
        throw ConfigError("real-time synth needs a positive rate and staleness bound");
    }
}

void RealtimeSynth::render(std::span<double> out)
{
    for (double& sample : out) {
        if (m_until_poll == 0) {
            const auto& next = m_mailbox.acquire();
            if (next.reset_epoch != m_current.reset_epoch) {
                m_phase = 0.0;
            }
            m_current = next;
            m_until_poll = m_poll_interval;
        }
        --m_until_poll;

        if (m_current.frequency <= 0.0 || m_current.amplitude <= 0.0) {
            sample = 0.0;
            continue;
        }
        const double dphi = kTwoPi * m_current.frequency / m_sample_rate;
        sample = square_at_midpoint(m_phase, dphi, m_current.amplitude);
        m_phase = wrap_phase(m_phase + dphi);
    }
}

}  // namespace pseudohaptic
