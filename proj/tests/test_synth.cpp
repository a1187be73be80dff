#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gaitkit/evaluate.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/synth.hpp"
#include "support.hpp"

using namespace gaitkit;

TEST(Synth, RestOnlyIsGravity) {
    SynthConfig cfg;
    cfg.script = {SynthPhase::rest(10.0)};
    const auto out = generate(cfg);
    EXPECT_TRUE(out.events.empty());
    ASSERT_EQ(out.recording.size(), 500u);
    for (const auto& a : out.recording.accel) EXPECT_NEAR((a - Vec3(0, 0, kGravity)).norm(), 0.0, 1e-12);
    for (const auto& g : out.recording.gyro) EXPECT_EQ(g, Vec3::Zero());

    std::mt19937_64 rng(1);
    cfg.sensor_rotation = gaitkit::testing::random_rotation(rng);
    const auto rotated = generate(cfg);
    const Vec3 expected = cfg.sensor_rotation * Vec3(0, 0, kGravity);
    for (const auto& a : rotated.recording.accel) EXPECT_NEAR((a - expected).norm(), 0.0, 1e-9);
}

TEST(Synth, SixtySecondWalkHasOneHundredContacts) {
    SynthConfig cfg;
    cfg.script = {SynthPhase::walk(60.0)};
    cfg.stride_s = 1.2;
    const auto out = generate(cfg);
    EXPECT_EQ(event_times(out.events, EventKind::InitialContact).size(), 100u);
}

TEST(Synth, ContactScheduleIsExact) {
    SynthConfig cfg;
    cfg.stride_s = 1.1;
    cfg.script = {SynthPhase::rest(2.0), SynthPhase::walk(20.0), SynthPhase::rest(2.0)};
    const auto out = generate(cfg);
    const auto ics = event_times(out.events, EventKind::InitialContact);
    const auto fcs = event_times(out.events, EventKind::FinalContact);
    ASSERT_GT(ics.size(), 10u);
    for (std::size_t i = 1; i < ics.size(); ++i) EXPECT_NEAR(ics[i] - ics[i - 1], 0.55, 1e-9);
    ASSERT_EQ(fcs.size(), ics.size());
    for (std::size_t i = 0; i < ics.size(); ++i) EXPECT_NEAR(fcs[i] - ics[i], cfg.fc_phase * cfg.stride_s, 1e-9);
    // sides alternate, starting on the configured foot
    std::vector<Side> sides;
    for (const auto& e : out.events)
        if (e.kind == EventKind::InitialContact) sides.push_back(e.side);
    EXPECT_EQ(sides.front(), Side::Left);
    for (std::size_t i = 1; i < sides.size(); ++i) EXPECT_NE(sides[i], sides[i - 1]);
}

TEST(Synth, SameSeedSameBits) {
    SynthConfig cfg;
    cfg.noise_sigma = 0.3;
    cfg.gyro_noise_sigma = 0.05;
    cfg.seed = 42;
    const auto a = generate(cfg), b = generate(cfg);
    ASSERT_EQ(a.recording.size(), b.recording.size());
    for (std::size_t i = 0; i < a.recording.size(); ++i) {
        EXPECT_EQ(a.recording.accel[i], b.recording.accel[i]);
        EXPECT_EQ(a.recording.gyro[i], b.recording.gyro[i]);
    }
    cfg.seed = 43;
    const auto c = generate(cfg);
    EXPECT_NE(a.recording.accel[100], c.recording.accel[100]);
}

TEST(Synth, GroundTruthSegmentsTileTheScript) {
    SynthConfig cfg;
    cfg.script = {SynthPhase::rest(3), SynthPhase::walk(5), SynthPhase::rest(1.5), SynthPhase::walk(4),
                  SynthPhase::turn(120, 2), SynthPhase::walk(4), SynthPhase::rest(3)};
    const auto out = generate(cfg);
    ASSERT_FALSE(out.segments.empty());
    EXPECT_NEAR(out.segments.front().start_s, 0.0, 1e-12);
    EXPECT_NEAR(out.segments.back().end_s, cfg.script_duration(), 1e-9);
    for (std::size_t i = 1; i < out.segments.size(); ++i)
        EXPECT_NEAR(out.segments[i].start_s, out.segments[i - 1].end_s, 1e-12);
    bool sharp = false, short_rest = false;
    for (const auto& s : out.segments) {
        sharp |= s.kind == SegmentKind::SharpTurn;
        short_rest |= s.kind == SegmentKind::ShortRest;
    }
    EXPECT_TRUE(sharp);
    EXPECT_TRUE(short_rest);
}

TEST(Synth, InvalidConfigurationsRejected) {
    SynthConfig cfg;
    cfg.duration_s = 100.0;  // script sums to 16 s
    EXPECT_THROW(generate(cfg), ConfigError);
    cfg = {};
    cfg.stride_s = 3.0;
    EXPECT_THROW(generate(cfg), ConfigError);
    cfg = {};
    cfg.fc_phase = 0.4;
    EXPECT_THROW(generate(cfg), ConfigError);
    cfg = {};
    cfg.script = {};
    EXPECT_THROW(generate(cfg), ConfigError);
}

TEST(Synth, CsvRoundTrip) {
    SynthConfig cfg;
    cfg.noise_sigma = 0.2;
    const auto out = generate(cfg);
    std::stringstream buf;
    write_recording(buf, out.recording);
    const auto back = load_recording(buf);
    ASSERT_EQ(back.size(), out.recording.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back.timestamps[i], out.recording.timestamps[i]);
        EXPECT_EQ(back.accel[i], out.recording.accel[i]);
    }
    std::stringstream ev;
    write_reference_events(ev, out.events);
    const auto events = load_reference_events(ev);
    ASSERT_EQ(events.size(), out.events.size());
    EXPECT_EQ(events[3].time_s, out.events[3].time_s);
    EXPECT_EQ(events[3].side, out.events[3].side);
}
