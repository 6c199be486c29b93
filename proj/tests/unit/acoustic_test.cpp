#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "adept/acoustic.hpp"
#include "adept/error.hpp"
#include "adept/fixture.hpp"
#include "adept/stats.hpp"

using namespace adept;

namespace {

std::vector<double> voiced_f0(const FrameTrack& t) {
  std::vector<double> v;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t.voiced[i]) v.push_back(t.f0[i]);
  return v;
}

const MetricObservation& metric(const AcousticObservation& o, Metric m) {
  for (const auto& x : o.metrics)
    if (x.metric == m) return x;
  throw std::runtime_error("metric not present");
}

}  // namespace

TEST(Frames, TrackLengthFormula) {
  const auto t = extract_frames(synth_sine(220.0, 0.3, 1.0));
  EXPECT_EQ(t.size(), 99u);  // ceil((16000 - 400) / 160) + 1
  const auto t2 = extract_frames(synth_sine(220.0, 0.3, 0.5, 8000));
  EXPECT_EQ(t2.size(), static_cast<std::size_t>(std::ceil((4000.0 - 200.0) / 80.0)) + 1);
}

TEST(Frames, SineRmsAndVoicing) {
  const auto t = extract_frames(synth_sine(1000.0, 0.5, 1.0));
  const double expected = 0.5 / std::sqrt(2.0);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) EXPECT_NEAR(t.rms[i], expected, 0.01 * expected) << i;
}

TEST(Frames, SilenceIsUnvoiced) {
  Audio a;
  a.samples.assign(16000, 0.0);
  const auto t = extract_frames(a);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t.rms[i], 0.0);
    EXPECT_EQ(t.voiced[i], 0);
    EXPECT_EQ(t.f0[i], 0.0);
  }
}

TEST(Frames, SawtoothMedianF0) {
  const auto t = extract_frames(synth_sawtooth(200.0, 0.5, 1.0));
  const auto f0 = voiced_f0(t);
  ASSERT_FALSE(f0.empty());
  const double m = median(f0);
  EXPECT_GE(m, 190.0);
  EXPECT_LE(m, 210.0);
  for (double f : f0) {
    EXPECT_GE(f, 60.0);
    EXPECT_LE(f, 400.0);
  }
}

TEST(Frames, AmplitudeScalingKeepsPitch) {
  const auto loud = extract_frames(synth_sawtooth(150.0, 0.8, 1.0));
  const auto soft = extract_frames(synth_sawtooth(150.0, 0.2, 1.0));
  EXPECT_NEAR(median(voiced_f0(loud)), median(voiced_f0(soft)), 1e-6);
  for (std::size_t i = 1; i + 1 < loud.size(); ++i) EXPECT_NEAR(loud.rms[i], 4.0 * soft.rms[i], 1e-3);
}

TEST(Frames, Errors) {
  Audio tiny;
  tiny.samples.assign(500, 0.1);
  EXPECT_THROW(extract_frames(tiny), Error);
  Audio odd = synth_sine(200, 0.5, 1.0);
  odd.sample_rate = 4000;
  try {
    extract_frames(odd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
  }
}

TEST(AnchorSpan, HullAndPadding) {
  const std::vector<AlignedWord> w = {{"a", 0.02, 0.3}, {"b", 0.4, 0.8}, {"c", 1.0, 1.2},
                                      {"d", 1.3, 1.5}, {"e", 1.6, 1.9}, {"f", 2.0, 2.4}};
  const auto s = anchor_span(w, {2, 3, 4}, 3.0, 0.05);
  EXPECT_NEAR(s.start_s, 0.95, 1e-12);
  EXPECT_NEAR(s.end_s, 1.95, 1e-12);
  const auto clamp = anchor_span(w, {0}, 3.0, 0.075);
  EXPECT_EQ(clamp.start_s, 0.0);
  const auto hull = anchor_span(w, {1, 5}, 3.0, 0.0);
  EXPECT_EQ(hull.start_s, 0.4);
  EXPECT_EQ(hull.end_s, 2.4);
  const auto top = anchor_span(w, {5}, 2.45, 0.1);
  EXPECT_EQ(top.end_s, 2.45);
  EXPECT_THROW(anchor_span(w, {9}, 3.0), Error);
}

TEST(Bucketing, Thresholds) {
  EXPECT_EQ(level_bin(0.0), LevelBin::Mid);
  EXPECT_EQ(level_bin(1.0), LevelBin::Mid);
  EXPECT_EQ(level_bin(-1.0), LevelBin::Mid);
  EXPECT_EQ(level_bin(std::nextafter(1.0, 2.0)), LevelBin::High);
  EXPECT_EQ(level_bin(std::nextafter(-1.0, -2.0)), LevelBin::Low);
  EXPECT_EQ(level_bin(2.0), LevelBin::High);
}

TEST(Bucketing, Monotone) {
  LevelBin prev = LevelBin::Low;
  for (double z = -3.0; z <= 3.0; z += 0.01) {
    const LevelBin b = level_bin(z);
    EXPECT_GE(static_cast<int>(b), static_cast<int>(prev));
    prev = b;
  }
}

TEST(Analyze, GlobalReferenceBins) {
  const auto utt = prepare_acoustics(synth_sine(220.0, 0.4, 1.0));
  const double rms = compute_metric(utt.track, Metric::Rms, frames_in(utt.track, 0.2, 0.8));
  MetricReference at_median{{Metric::Rms, {rms, 0.05}}};
  AnalyzeOptions opt;
  opt.global = &at_median;
  auto obs = analyze_segment(utt, {0.2, 0.8}, {Metric::Rms}, opt);
  EXPECT_NEAR(*metric(obs, Metric::Rms).z_global, 0.0, 1e-6);
  EXPECT_EQ(metric(obs, Metric::Rms).level, LevelBin::Mid);
  EXPECT_EQ(metric(obs, Metric::Rms).level_reference, "global");

  MetricReference below{{Metric::Rms, {rms - 2.0 * 0.05, 0.05}}};
  opt.global = &below;
  obs = analyze_segment(utt, {0.2, 0.8}, {Metric::Rms}, opt);
  EXPECT_NEAR(*metric(obs, Metric::Rms).z_global, 2.0, 1e-6);
  EXPECT_EQ(metric(obs, Metric::Rms).level, LevelBin::High);
}

TEST(Analyze, MissingGlobalFallsBackToLocal) {
  const auto utt = prepare_acoustics(synth_sine(220.0, 0.4, 1.0));
  const auto obs = analyze_segment(utt, {0.1, 0.9}, {Metric::Rms, Metric::F0Median});
  for (const auto& m : obs.metrics) {
    EXPECT_FALSE(m.z_global.has_value());
    EXPECT_EQ(m.level_reference, "local_fallback");
  }
  EXPECT_FALSE(obs.notes.empty());
}

TEST(Analyze, BoundsAndLength) {
  const auto utt = prepare_acoustics(synth_sine(220.0, 0.4, 1.0));
  try {
    analyze_segment(utt, {0.5, 1.5}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SegmentOutOfBounds);
  }
  try {
    analyze_segment(utt, {0.5, 0.51}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SegmentTooShort);
  }
  EXPECT_THROW(metric_from_string("loudness"), Error);
}

TEST(Analyze, BurstIsHighAndSpikes) {
  const auto utt = prepare_acoustics(synth_burst(180.0, 0.05, 0.6, 2.0, 1.0, 1.2));
  MetricReference ref;
  const double quiet = compute_metric(utt.track, Metric::Rms, frames_in(utt.track, 0.1, 0.9));
  ref[Metric::Rms] = {quiet, 0.02};
  AnalyzeOptions opt;
  opt.global = &ref;
  const auto obs = analyze_segment(utt, {0.95, 1.25}, {Metric::Rms, Metric::EnergyBurstiness}, opt);
  EXPECT_EQ(metric(obs, Metric::Rms).level, LevelBin::High);
  EXPECT_NE(std::find(obs.events.begin(), obs.events.end(), "SuddenSpike"), obs.events.end());

  // p90 of in-segment first differences of RMS, recomputed by hand.
  const auto r = frames_in(utt.track, 0.95, 1.25);
  std::vector<double> de;
  for (std::size_t i = std::max<std::size_t>(r.first, 1); i < r.last; ++i) de.push_back(utt.track.rms[i] - utt.track.rms[i - 1]);
  EXPECT_NEAR(metric(obs, Metric::EnergyBurstiness).value, percentile(de, 90.0), 1e-12);
}

TEST(Analyze, LocalZOfUtteranceMedianIsZero) {
  const auto utt = prepare_acoustics(synth_burst(180.0, 0.1, 0.5, 2.0, 0.6, 0.9));
  for (const auto& [m, stat] : utt.local) EXPECT_DOUBLE_EQ(stat.z(stat.median), 0.0) << to_string(m);
}

TEST(Hotspots, SingleBurstInSilence) {
  const auto utt = prepare_acoustics(synth_burst(200.0, 0.0, 0.5, 2.0, 1.0, 1.2));
  const auto res = find_hotspots(utt, FocusType::EnergyBurst);
  ASSERT_EQ(res.rois.size(), 1u);
  const auto& roi = res.rois[0].span;
  EXPECT_LT(roi.start_s, 1.2);
  EXPECT_GT(roi.end_s, 1.0);
  EXPECT_LE(std::abs(roi.start_s - 1.0), 0.3 + 1e-9);
}

TEST(Hotspots, ConstantPitchHasNoExcursion) {
  const auto utt = prepare_acoustics(synth_sawtooth(160.0, 0.4, 1.5));
  const auto res = find_hotspots(utt, FocusType::PitchExcursion);
  EXPECT_TRUE(res.rois.empty());
  EXPECT_FALSE(res.no_voiced_frames);
}

TEST(Hotspots, UnvoicedAudioFlagsNoVoicedFrames) {
  Audio a;
  a.samples.assign(16000, 0.0);
  const auto res = find_hotspots(prepare_acoustics(a), FocusType::PitchExcursion);
  EXPECT_TRUE(res.rois.empty());
  EXPECT_TRUE(res.no_voiced_frames);
}

TEST(Hotspots, TwoEqualBurstsEarlierFirst) {
  Audio a = synth_burst(200.0, 0.0, 0.5, 3.0, 0.8, 1.0);
  const Audio b = synth_burst(200.0, 0.0, 0.5, 3.0, 1.8, 2.0);
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] += b.samples[i];
  HotspotParams p;
  p.top_n = 2;
  const auto res = find_hotspots(prepare_acoustics(a), FocusType::EnergyBurst, p);
  ASSERT_EQ(res.rois.size(), 2u);
  EXPECT_LT(res.rois[0].span.start_s, res.rois[1].span.start_s);
  EXPECT_LT(res.rois[0].span.start_s, 1.0);
  EXPECT_GT(res.rois[1].span.end_s, 1.8);
  for (const auto& r : res.rois) {
    EXPECT_GE(r.span.start_s, 0.0);
    EXPECT_LT(r.span.start_s, r.span.end_s);
    EXPECT_LE(r.span.end_s, 3.0);
  }
}

TEST(Compare, IdenticalSegmentsAreSimilar) {
  const auto utt = prepare_acoustics(synth_sine(200.0, 0.4, 2.0));
  const auto cmp = compare_segments(utt, {{0.2, 0.6}, {0.2, 0.6}}, {Metric::Rms, Metric::F0Median});
  for (const auto& m : cmp.metrics)
    for (const auto& p : m.pairs) EXPECT_EQ(p.relation, Relation::Similar);
}

TEST(Compare, LoudVersusQuietIsMuchGreater) {
  const auto utt = prepare_acoustics(synth_burst(200.0, 0.02, 0.6, 2.0, 1.0, 1.5));
  const auto cmp = compare_segments(utt, {{1.05, 1.45}, {0.2, 0.6}}, {Metric::Rms});
  ASSERT_EQ(cmp.metrics.size(), 1u);
  const auto& p = cmp.metrics[0].pairs.at(0);
  EXPECT_EQ(p.relation, Relation::MuchGreater);
  EXPECT_NEAR(p.dz, cmp.metrics[0].z_local[0] - cmp.metrics[0].z_local[1], 1e-12);
  EXPECT_GE(p.dz, 1.5);
}

TEST(Compare, RankingConsistentWithPairs) {
  const auto utt = prepare_acoustics(synth_burst(200.0, 0.05, 0.6, 3.0, 1.0, 1.5));
  const auto cmp = compare_segments(utt, {{0.2, 0.6}, {1.05, 1.45}, {0.9, 1.3}}, {Metric::Rms});
  const auto& m = cmp.metrics[0];
  ASSERT_EQ(m.ranking.size(), 3u);
  for (std::size_t i = 0; i + 1 < m.ranking.size(); ++i) {
    EXPECT_GE(m.z_local[m.ranking[i]], m.z_local[m.ranking[i + 1]]);
  }
  EXPECT_EQ(relation_for_gap(0.24), Relation::Similar);
  EXPECT_EQ(relation_for_gap(0.25), Relation::Greater);
  EXPECT_EQ(relation_for_gap(-1.5), Relation::MuchLess);
  EXPECT_EQ(relation_for_gap(-1.49), Relation::Less);
  EXPECT_THROW(compare_segments(utt, {{0.2, 0.6}}, {Metric::Rms}), Error);
}

TEST(Acoustic, ObservationsNameNoEmotion) {
  const auto utt = prepare_acoustics(synth_burst(200.0, 0.05, 0.6, 2.0, 1.0, 1.2));
  const std::string dump = to_json(analyze_segment(utt, {0.5, 1.5}, {})).dump() +
                           to_json(find_hotspots(utt, FocusType::EnergyBurst)).dump();
  for (Emotion e : kAllEmotions) EXPECT_EQ(dump.find(std::string(to_string(e))), std::string::npos);
}
