#include "pseudohaptic/errors.hpp"
#include "pseudohaptic/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

using namespace pseudohaptic;

namespace {

// Stroke across both areas at 90 px/s sampled at 100 Hz.
std::vector<PointerSample> sweep(double t0, double x0, double x1, double y = 210.0)
{
    std::vector<PointerSample> out;
    const double dir = x1 >= x0 ? 1.0 : -1.0;
    for (int i = 0;; ++i) {
        const double x = x0 + dir * 0.9 * i;
        if ((dir > 0 && x > x1) || (dir < 0 && x < x1)) {
            break;
        }
        out.push_back({t0 + 0.01 * i, x, y});
    }
    return out;
}

double direct_multiplier(const std::vector<Button>& presses)
{
    double m = 1.0;
    for (Button b : presses) {
        m = std::clamp(m * std::pow(10.0, button_step(b) / 100.0), 0.2, 5.0);
    }
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

TEST(Vocabulary, RoundTripNames)
{
    for (auto s : {Study::comparison, Study::adjust_amplitude, Study::adjust_wavelength}) {
        EXPECT_EQ(parse_study(to_string(s)), s);
    }
    for (auto b : {Button::increase, Button::slight_increase, Button::slight_decrease, Button::decrease}) {
        EXPECT_EQ(parse_button(to_string(b)), b);
    }
    EXPECT_EQ(parse_side("left"), Side::left);
    EXPECT_EQ(parse_protocol("1"), Protocol::comparison);
    EXPECT_EQ(parse_protocol("2"), Protocol::adjustment);
    EXPECT_EQ(parse_protocol(to_string(Protocol::adjust_wavelength)), Protocol::adjust_wavelength);
    EXPECT_THROW(parse_study("nope"), ConfigError);
    EXPECT_THROW(parse_button("up"), ConfigError);
    EXPECT_THROW(parse_protocol("3"), ConfigError);
}

// ---------------------------------------------------------------------------
// Schedules

TEST(Schedule, ComparisonIsBalancedFactorial)
{
    const auto s = build_schedule(Protocol::comparison, "p01", 7);
    ASSERT_EQ(s.size(), 120u);
    std::map<std::pair<double, double>, int> counts;
    for (const auto& t : s) {
        EXPECT_EQ(t.study, Study::comparison);
        ++counts[{t.lambda, t.alpha_osc}];
    }
    EXPECT_EQ(counts.size(), 12u);
    for (const auto& [cond, n] : counts) {
        EXPECT_EQ(n, 10);
    }
    // Each block of 12 contains every condition once.
    for (int b = 0; b < 10; ++b) {
        std::set<std::pair<double, double>> block;
        for (int i = 0; i < 12; ++i) {
            block.insert({s[b * 12 + i].lambda, s[b * 12 + i].alpha_osc});
            EXPECT_EQ(s[b * 12 + i].reps_index, b);
        }
        EXPECT_EQ(block.size(), 12u);
    }
}

TEST(Schedule, SidesAreMixed)
{
    const auto s = build_schedule(Protocol::comparison, "p01", 7);
    int left = 0;
    for (const auto& t : s) {
        left += t.oscillatory_side == Side::left;
    }
    // Binomial(120, 1/2): 5 sd is about 27.
    EXPECT_GT(left, 33);
    EXPECT_LT(left, 87);
}

TEST(Schedule, DeterministicPerSeedAndParticipant)
{
    EXPECT_EQ(build_schedule(Protocol::comparison, "p01", 7), build_schedule(Protocol::comparison, "p01", 7));
    EXPECT_NE(build_schedule(Protocol::comparison, "p01", 7), build_schedule(Protocol::comparison, "p01", 8));
    EXPECT_NE(build_schedule(Protocol::comparison, "p01", 7), build_schedule(Protocol::comparison, "p02", 7));
}

TEST(Schedule, AdjustmentBlocks)
{
    const auto amp = build_schedule(Protocol::adjust_amplitude, "p01", 3);
    ASSERT_EQ(amp.size(), 30u);
    std::map<double, int> counts;
    for (const auto& t : amp) {
        EXPECT_EQ(t.study, Study::adjust_amplitude);
        EXPECT_EQ(t.oscillatory_side, Side::left);
        EXPECT_DOUBLE_EQ(t.lambda, 0.2);
        ++counts[t.alpha_osc];
    }
    EXPECT_EQ(counts.size(), 6u);
    for (const auto& [a, n] : counts) {
        EXPECT_EQ(n, 5);
    }

    const auto both = build_schedule(Protocol::adjustment, "p01", 3);
    ASSERT_EQ(both.size(), 60u);
    for (int i = 1; i < 30; ++i) {
        EXPECT_EQ(both[i].study, both[0].study);
        EXPECT_EQ(both[30 + i].study, both[30].study);
    }
    EXPECT_NE(both[0].study, both[30].study);
}

TEST(Schedule, BlockOrderVariesAcrossParticipants)
{
    std::set<Study> first;
    for (int p = 0; p < 20; ++p) {
        first.insert(build_schedule(Protocol::adjustment, "p" + std::to_string(p), 1).front().study);
    }
    EXPECT_EQ(first.size(), 2u);
}

// ---------------------------------------------------------------------------
// Staircase

TEST(Staircase, StepsAndValues)
{
    StaircaseState s{0.0, 1.0};
    EXPECT_EQ(staircase_multiplier(s), 1.0);
    s = staircase_apply(s, Button::slight_increase);
    EXPECT_EQ(s.s, 3.0);
    EXPECT_NEAR(staircase_multiplier(s), std::pow(10.0, 0.03), 1e-15);
    EXPECT_NEAR(staircase_multiplier(s), 1.0715, 1e-4);
    s = staircase_apply(s, Button::increase);
    EXPECT_EQ(s.s, 9.0);
    EXPECT_NEAR(staircase_multiplier(s), 1.2303, 1e-4);
    s = staircase_apply(s, Button::decrease);
    s = staircase_apply(s, Button::slight_decrease);
    EXPECT_EQ(s.s, 0.0);
}

TEST(Staircase, InitialValueScales)
{
    StaircaseState s{0.0, 0.2};
    s = staircase_apply(s, Button::increase);
    EXPECT_NEAR(staircase_value(s), 0.2 * std::pow(10.0, 0.06), 1e-15);
}

TEST(Staircase, ClampsAtBothEnds)
{
    StaircaseState s;
    for (int i = 0; i < 20; ++i) {
        s = staircase_apply(s, Button::increase);
    }
    EXPECT_NEAR(staircase_multiplier(s), 5.0, 1e-12);
    EXPECT_NEAR(s.s, 100.0 * std::log10(5.0), 1e-12);
    s = staircase_apply(s, Button::slight_decrease);
    EXPECT_NEAR(staircase_multiplier(s), 5.0 * std::pow(10.0, -0.03), 1e-12);

    StaircaseState d;
    for (int i = 0; i < 20; ++i) {
        d = staircase_apply(d, Button::decrease);
    }
    EXPECT_NEAR(staircase_multiplier(d), 0.2, 1e-12);
    d = staircase_apply(d, Button::slight_increase);
    EXPECT_NEAR(staircase_multiplier(d), 0.2 * std::pow(10.0, 0.03), 1e-12);
}

TEST(Staircase, RandomSequencesMatchDirectEvaluation)
{
    Rng rng(2024);
    const Button buttons[] = {Button::increase, Button::slight_increase, Button::slight_decrease, Button::decrease};
    for (int seq = 0; seq < 200; ++seq) {
        std::vector<Button> presses;
        StaircaseState st;
        const auto len = 1 + rng.below(80);
        for (std::uint64_t i = 0; i < len; ++i) {
            presses.push_back(buttons[rng.below(4)]);
            st = staircase_apply(st, presses.back());
            const double oracle = direct_multiplier(presses);
            ASSERT_NEAR(staircase_multiplier(st) / oracle, 1.0, 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// TrialRunner

class RunnerTest : public ::testing::Test {
protected:
    ExperimentConfig cfg;
    TrialSpec comparison{Study::comparison, 2.0, 0.2, Side::left, 0};
    TrialSpec amplitude{Study::adjust_amplitude, 3.0, 0.2, Side::left, 0};
};

TEST_F(RunnerTest, OscillatoryAreaOffsetsWithinBound)
{
    TrialRunner r("p01", 0, comparison, 99, cfg);
    for (const auto& s : sweep(0.0, 80.0, 280.0)) {
        const auto out = r.step(s);
        ASSERT_TRUE(out.render.has_value());
        if (out.render->area == Area::left) {
            ASSERT_LE(std::abs(out.render->position.dx), 0.01 * 2.0 * r.speed() + 1e-12);
            ASSERT_LE(std::abs(out.render->position.dy), 0.01 * 2.0 * r.speed() + 1e-12);
        }
    }
}

TEST_F(RunnerTest, PlainAreaIsNotDistorted)
{
    TrialRunner r("p01", 0, comparison, 99, cfg);
    for (const auto& s : sweep(0.0, 350.0, 550.0)) {
        const auto out = r.step(s);
        if (out.render->area == Area::right) {
            EXPECT_EQ(out.render->position.dx, 0.0);
            EXPECT_EQ(out.render->position.x_vis, round_px(s.x));
        }
    }
}

TEST_F(RunnerTest, OutsideAreasIsIgnoredAndSilent)
{
    TrialRunner r("p01", 0, comparison, 99, cfg);
    const auto out = r.step(PointerSample{0.0, 10.4, 10.6});
    ASSERT_TRUE(out.render.has_value());
    EXPECT_EQ(out.render->area, Area::none);
    EXPECT_EQ(out.render->position.x_vis, 10);
    EXPECT_EQ(out.render->position.y_vis, 11);
    EXPECT_FALSE(out.signal.has_value());
    EXPECT_EQ(r.record().events.back().type, EventType::ignored);
}

TEST_F(RunnerTest, SignalFollowsAreaAndSpeed)
{
    TrialRunner r("p01", 0, comparison, 1, cfg);
    StepOutput last;
    for (const auto& s : sweep(0.0, 100.0, 200.0)) {
        last = r.step(s);
    }
    ASSERT_TRUE(last.signal.has_value());
    EXPECT_EQ(last.signal->area, Area::left);
    EXPECT_NEAR(last.signal->frequency, 9.0, 1e-9);
    EXPECT_FALSE(last.signal_changed);
    EXPECT_FALSE(last.signal->phase_reset);
}

TEST_F(RunnerTest, EnteringAnAreaResetsPhase)
{
    TrialRunner r("p01", 0, comparison, 1, cfg);
    r.step(PointerSample{0.0, 80.0, 210.0});
    const auto in = r.step(PointerSample{0.01, 91.0, 210.0});
    ASSERT_TRUE(in.signal.has_value());
    EXPECT_TRUE(in.signal->phase_reset);
    EXPECT_TRUE(in.signal_changed);
}

TEST_F(RunnerTest, AnswerRequiresBothTraversals)
{
    TrialRunner r("p01", 0, comparison, 1, cfg);
    for (const auto& s : sweep(0.0, 80.0, 280.0)) {
        r.step(s);
    }
    EXPECT_TRUE(r.traversed(Side::left));
    EXPECT_FALSE(r.traversed(Side::right));
    const auto before = r.record();
    EXPECT_THROW(r.step(AnswerInput{3.0, Side::left}), ProtocolError);
    EXPECT_EQ(r.record(), before);

    for (const auto& s : sweep(3.0, 350.0, 550.0)) {
        r.step(s);
    }
    EXPECT_EQ(r.phase(), TrialPhase::answerable);
    const auto out = r.step(AnswerInput{6.0, Side::left});
    EXPECT_TRUE(out.trial_complete);
    EXPECT_TRUE(r.complete());
    EXPECT_EQ(r.record().selected_side, Side::left);
    EXPECT_EQ(r.record().chose_oscillatory(), true);
    EXPECT_THROW(r.step(PointerSample{7.0, 100.0, 210.0}), ProtocolError);
}

TEST_F(RunnerTest, AdjustIsPhaseViolationInComparison)
{
    TrialRunner r("p01", 0, comparison, 1, cfg);
    EXPECT_THROW(r.step(AdjustInput{0.0, Button::increase}), ProtocolError);
    EXPECT_THROW(r.step(FinishInput{0.0}), ProtocolError);
    EXPECT_TRUE(r.record().events.empty());
}

TEST_F(RunnerTest, AnswerIsPhaseViolationInAdjustment)
{
    TrialRunner r("p01", 0, amplitude, 1, cfg);
    EXPECT_THROW(r.step(AnswerInput{0.0, Side::left}), ProtocolError);
}

TEST_F(RunnerTest, TimeMustIncrease)
{
    TrialRunner r("p01", 0, comparison, 1, cfg);
    r.step(PointerSample{1.0, 100.0, 210.0});
    const auto before = r.record();
    EXPECT_THROW(r.step(PointerSample{0.5, 101.0, 210.0}), OrderingError);
    EXPECT_EQ(r.record(), before);
}

TEST_F(RunnerTest, AdjustmentDrivesStaircaseAndSignal)
{
    TrialRunner r("p01", 0, amplitude, 1, cfg);
    EXPECT_EQ(r.phase(), TrialPhase::adjusting);
    // Pointer in the adjustable (right) area: each press re-emits its signal.
    for (const auto& s : sweep(0.0, 370.0, 400.0)) {
        r.step(s);
    }
    const auto up = r.step(AdjustInput{1.0, Button::slight_increase});
    ASSERT_TRUE(up.signal.has_value());
    EXPECT_NEAR(up.signal->config.amplitude, std::pow(10.0, 0.03), 1e-15);
    EXPECT_NEAR(up.signal->multiplier, std::pow(10.0, 0.03), 1e-15);

    // Oscillatory area is unaffected.
    EXPECT_EQ(r.area_signal(Area::left).amplitude, 1.0);

    const auto done = r.step(FinishInput{2.0});
    EXPECT_TRUE(done.trial_complete);
    EXPECT_NEAR(*r.record().final_multiplier, std::pow(10.0, 0.03), 1e-15);
    EXPECT_NEAR(*r.record().final_vpp_ratio(), std::pow(10.0, 0.03), 1e-15);
}

TEST_F(RunnerTest, WavelengthStaircaseMovesLambdaOnly)
{
    TrialSpec spec{Study::adjust_wavelength, 1.0, 0.2, Side::left, 0};
    TrialRunner r("p01", 0, spec, 1, cfg);
    const auto out = r.step(AdjustInput{0.0, Button::increase});
    EXPECT_FALSE(out.signal.has_value());  // pointer not in the adjustable area
    EXPECT_NEAR(r.area_signal(Area::right).lambda, 0.2 * std::pow(10.0, 0.06), 1e-15);
    EXPECT_EQ(r.area_signal(Area::right).amplitude, 1.0);
    r.step(FinishInput{1.0});
    EXPECT_EQ(*r.record().final_vpp_ratio(), 1.0);
}

TEST_F(RunnerTest, ReplayReproducesRecord)
{
    TrialRunner r("p07", 3, comparison, 123, cfg);
    for (const auto& s : sweep(0.0, 80.0, 550.0)) {
        r.step(s);
    }
    r.step(AnswerInput{10.0, Side::right});
    EXPECT_EQ(replay_trial(r.record(), cfg), r.record());
}

TEST_F(RunnerTest, SameSeedSameOffsets)
{
    TrialRunner a("p01", 0, comparison, 5, cfg), b("p01", 0, comparison, 5, cfg), c("p01", 0, comparison, 6, cfg);
    for (const auto& s : sweep(0.0, 80.0, 280.0)) {
        a.step(s);
        b.step(s);
        c.step(s);
    }
    EXPECT_EQ(a.record().events, b.record().events);
    EXPECT_NE(a.record().events, c.record().events);
}

// ---------------------------------------------------------------------------
// Session

TEST(SessionTest, RunsScheduleToTheEnd)
{
    Session s("p01", Protocol::adjust_amplitude, 11);
    EXPECT_EQ(s.schedule().size(), 30u);
    for (std::size_t i = 0; i < 30; ++i) {
        ASSERT_FALSE(s.finished());
        EXPECT_EQ(s.current()->record().seed, s.trial_seed(i));
        s.step(FinishInput{0.0});
    }
    EXPECT_TRUE(s.finished());
    EXPECT_EQ(s.records().size(), 30u);
    EXPECT_EQ(s.current(), nullptr);
    EXPECT_THROW(s.step(FinishInput{1.0}), ProtocolError);
}

TEST(SessionTest, TrialSeedsAreDerived)
{
    Session s("p01", Protocol::comparison, 11);
    EXPECT_EQ(s.trial_seed(4), derive_seed(11, 4));
}
