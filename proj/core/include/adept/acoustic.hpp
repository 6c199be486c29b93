#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adept/labels.hpp"
#include "adept/wav.hpp"

namespace adept {

struct FrameParams {
  double window_s = 0.025;
  double hop_s = 0.010;
  double f0_min_hz = 60.0;
  double f0_max_hz = 400.0;
  double clarity_threshold = 0.45;  // NCCF peak needed to call a frame voiced
  double energy_floor = 1e-3;       // linear RMS below this is never voiced

  // Stable string used to fingerprint reference files.
  std::string fingerprint() const;
};

struct FrameTrack {
  int sample_rate = 0;
  double window_s = 0.0;
  double hop_s = 0.0;
  double duration_s = 0.0;
  std::vector<double> f0;       // Hz, 0 when unvoiced
  std::vector<double> rms;      // linear
  std::vector<double> peak;     // max |x| in the frame
  std::vector<double> clarity;  // NCCF peak value at the chosen lag
  std::vector<std::uint8_t> voiced;

  // Hann-windowed power spectrum per frame, bins 0..4 kHz (or Nyquist).
  std::size_t spectrum_bins = 0;
  double bin_hz = 0.0;
  std::vector<double> power;  // frames x spectrum_bins, row-major

  std::size_t size() const { return rms.size(); }
  double frame_center(std::size_t i) const { return static_cast<double>(i) * hop_s + window_s / 2.0; }
};

// 25 ms / 10 ms framing, zero-padded so that
// n_frames = ceil((N - W) / H) + 1. Throws TooShort below two windows and
// UnsupportedFormat for sample rates outside 8-48 kHz.
FrameTrack extract_frames(const Audio& audio, const FrameParams& params = {});

// Frame-to-frame deltas. dF0 only between consecutive voiced frames; dE is
// the plain difference of linear RMS. `frame` is the later frame's index.
struct Delta {
  std::size_t frame;
  double value;
};
std::vector<Delta> delta_f0(const FrameTrack& track);
std::vector<Delta> delta_energy(const FrameTrack& track);

enum class Metric {
  F0Median,
  F0Iqr,
  PitchVelocity,
  Rms,
  EnergyBurstiness,
  SpeechRate,
  PauseDensity,
  VoicedRatio,
  Jitter,
  Shimmer,
  Hnr,
  SpectralTilt,
};
inline constexpr std::size_t kNumMetrics = 12;
inline constexpr std::array<Metric, kNumMetrics> kAllMetrics = {
    Metric::F0Median,    Metric::F0Iqr,        Metric::PitchVelocity, Metric::Rms,
    Metric::EnergyBurstiness, Metric::SpeechRate, Metric::PauseDensity, Metric::VoicedRatio,
    Metric::Jitter,      Metric::Shimmer,      Metric::Hnr,          Metric::SpectralTilt};

std::string_view to_string(Metric m);
// Throws Error{UnknownMetric}.
Metric metric_from_string(std::string_view name);

struct FrameRange {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
  std::size_t size() const { return last - first; }
};

// Frames whose centre lies in [start, end].
FrameRange frames_in(const FrameTrack& track, double start_s, double end_s);

// Raw metric over a frame range:
//   f0_median / f0_iqr      median / IQR of voiced F0 (Hz)
//   pitch_velocity          p75 |dF0| (Hz per frame)
//   rms                     median frame RMS
//   energy_burstiness       p90 dE
//   speech_rate             voiced runs per second
//   pause_density           unvoiced runs >= 200 ms per second
//   voiced_ratio            voiced / total frames
//   jitter / shimmer        mean |dT| / mean T and mean |dA| / mean A over voiced pairs
//   hnr                     median over voiced frames of 10 log10(r / (1 - r)), r = clarity
//   spectral_tilt           dB-per-kHz slope of a least-squares fit to the mean power spectrum, 0-4 kHz
// Voicing-dependent metrics are 0 when the range has no voiced frames.
double compute_metric(const FrameTrack& track, Metric metric, FrameRange range);

inline constexpr double kReferenceEpsilon = 1e-9;

struct RobustStat {
  double median = 0.0;
  double iqr = 0.0;

  double z(double value) const { return (value - median) / (iqr + kReferenceEpsilon); }
};
using MetricReference = std::map<Metric, RobustStat>;

nlohmann::json to_json(const MetricReference& ref);
MetricReference metric_reference_from_json(const nlohmann::json& j);

// Everything analyze/compare/hotspots need for one utterance, computed once.
struct UtteranceAcoustics {
  FrameTrack track;
  MetricReference local;  // metric distribution over 300 ms / 150 ms windows
  double delta_f0_iqr = 0.0;
  double delta_energy_iqr = 0.0;
  double delta_energy_p99 = 0.0;
};

UtteranceAcoustics prepare_acoustics(const Audio& audio, const FrameParams& params = {});

// Convex hull of the listed words, padded and clamped to [0, duration].
// Throws IndexOutOfRange.
struct Span {
  double start_s = 0.0;
  double end_s = 0.0;
};
inline constexpr double kDefaultAnchorPadding = 0.075;
Span anchor_span(const std::vector<AlignedWord>& alignment, const std::vector<std::size_t>& word_indices,
                 double duration_s, double padding_s = kDefaultAnchorPadding);

enum class LevelBin { Low, Mid, High };
enum class VolatilityBin { Stable, Volatile };
std::string_view to_string(LevelBin b);
std::string_view to_string(VolatilityBin b);

// Low below -1, High above +1, Mid on [-1, 1].
LevelBin level_bin(double z, double threshold = 1.0);

struct MetricObservation {
  Metric metric = Metric::Rms;
  double value = 0.0;
  std::map<std::string, double> summary;  // median / iqr / p75 / p90 of the underlying series
  std::optional<double> z_global;
  double z_local = 0.0;
  LevelBin level = LevelBin::Mid;
  std::string level_reference;  // "global" or "local_fallback"
  std::optional<VolatilityBin> volatility;
};

struct AcousticObservation {
  Span segment;
  std::size_t frames = 0;
  std::vector<MetricObservation> metrics;
  std::vector<std::string> events;  // e.g. "SuddenSpike"
  std::vector<std::string> notes;   // provenance remarks
};

nlohmann::json to_json(const AcousticObservation& obs);

struct AnalyzeOptions {
  const MetricReference* global = nullptr;
  std::string global_scope;  // recorded in provenance, e.g. "corpus" or "speaker:s1"
  bool global_fingerprint_mismatch = false;
  std::size_t min_frames = 3;
};

// Throws SegmentOutOfBounds, SegmentTooShort, UnknownMetric (via parsing).
AcousticObservation analyze_segment(const UtteranceAcoustics& utt, Span segment,
                                    const std::vector<Metric>& metrics, const AnalyzeOptions& options = {});

enum class FocusType { EnergyBurst, PitchExcursion, PauseContrast, VoicingInstability };
std::string_view to_string(FocusType f);
FocusType focus_type_from_string(std::string_view name);

struct HotspotParams {
  std::size_t window_frames = 30;  // 300 ms at the default hop
  std::size_t step_frames = 15;
  std::size_t top_n = 3;
  double nms_overlap = 0.5;     // intersection over the shorter span
  double relative_floor = 0.5;  // survivors must reach this fraction of the best score
  double energy_floor = 1e-3;
  double pitch_floor_hz = 3.0;
  double pause_floor_s = 0.05;
  double flip_floor = 0.05;
};

struct Roi {
  Span span;
  FocusType focus = FocusType::EnergyBurst;
  double magnitude = 0.0;
  std::string rationale;
};

struct HotspotResult {
  std::vector<Roi> rois;
  bool no_voiced_frames = false;
};

nlohmann::json to_json(const HotspotResult& result);

HotspotResult find_hotspots(const UtteranceAcoustics& utt, FocusType focus, const HotspotParams& params = {});

enum class Relation { MuchGreater, Greater, Similar, Less, MuchLess };
std::string_view to_string(Relation r);
// |dz| < 0.25 similar, |dz| >= 1.5 much, otherwise plain.
Relation relation_for_gap(double dz);

struct PairRelation {
  std::size_t a = 0;
  std::size_t b = 0;
  Relation relation = Relation::Similar;
  double dz = 0.0;
};

struct MetricComparison {
  Metric metric = Metric::Rms;
  std::vector<double> z_local;       // per segment
  std::vector<PairRelation> pairs;   // a < b
  std::vector<std::size_t> ranking;  // segment indices, highest z first, ties by index
};

struct SegmentComparison {
  std::vector<AcousticObservation> segments;
  std::vector<MetricComparison> metrics;
};

nlohmann::json to_json(const SegmentComparison& cmp);

SegmentComparison compare_segments(const UtteranceAcoustics& utt, const std::vector<Span>& segments,
                                   const std::vector<Metric>& metrics, const AnalyzeOptions& options = {});

}  // namespace adept
