#include "adept/acoustic.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "adept/error.hpp"
#include "adept/stats.hpp"

namespace adept {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSpikeFloor = 1e-3;
constexpr double kTiltBandHz = 4000.0;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Calls fn(voiced, length) for each maximal run of equal voicing in the range.
template <typename Fn>
void for_each_run(const FrameTrack& t, FrameRange r, Fn fn) {
  std::size_t i = r.first;
  while (i < r.last) {
    std::size_t j = i;
    while (j < r.last && t.voiced[j] == t.voiced[i]) ++j;
    fn(t.voiced[i] != 0, j - i);
    i = j;
  }
}

std::vector<double> voiced_f0(const FrameTrack& t, FrameRange r) {
  std::vector<double> out;
  for (std::size_t i = r.first; i < r.last; ++i) {
    if (t.voiced[i]) out.push_back(t.f0[i]);
  }
  return out;
}

std::vector<double> deltas_in(const std::vector<Delta>& all, FrameRange r, bool absolute) {
  std::vector<double> out;
  for (const auto& d : all) {
    if (d.frame >= r.first && d.frame < r.last) out.push_back(absolute ? std::abs(d.value) : d.value);
  }
  return out;
}

double hnr_of(double clarity) {
  const double c = std::clamp(clarity, 1e-4, 1.0 - 1e-4);
  return 10.0 * std::log10(c / (1.0 - c));
}

std::vector<double> frame_hnr(const FrameTrack& t, FrameRange r) {
  std::vector<double> out;
  for (std::size_t i = r.first; i < r.last; ++i) {
    if (t.voiced[i]) out.push_back(hnr_of(t.clarity[i]));
  }
  return out;
}

// Relative perturbation over consecutive voiced frames.
double perturbation(const FrameTrack& t, FrameRange r, bool periods) {
  auto value = [&](std::size_t i) { return periods ? 1.0 / t.f0[i] : t.peak[i]; };
  double diff_sum = 0.0, level_sum = 0.0;
  std::size_t diffs = 0, levels = 0;
  for (std::size_t i = r.first; i < r.last; ++i) {
    if (!t.voiced[i]) continue;
    level_sum += value(i);
    ++levels;
    if (i > r.first && t.voiced[i - 1]) {
      diff_sum += std::abs(value(i) - value(i - 1));
      ++diffs;
    }
  }
  if (diffs == 0 || level_sum <= 0.0) return 0.0;
  return (diff_sum / static_cast<double>(diffs)) / (level_sum / static_cast<double>(levels));
}

double spectral_tilt(const FrameTrack& t, FrameRange r) {
  if (t.spectrum_bins < 3 || r.size() == 0) return 0.0;
  std::vector<double> mean_power(t.spectrum_bins, 0.0);
  for (std::size_t i = r.first; i < r.last; ++i) {
    for (std::size_t k = 0; k < t.spectrum_bins; ++k) mean_power[k] += t.power[i * t.spectrum_bins + k];
  }
  // Least-squares line through (kHz, dB), DC excluded.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t.spectrum_bins - 1);
  for (std::size_t k = 1; k < t.spectrum_bins; ++k) {
    const double x = static_cast<double>(k) * t.bin_hz / 1000.0;
    const double y = 10.0 * std::log10(mean_power[k] / static_cast<double>(r.size()) + 1e-12);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

std::vector<std::size_t> window_starts(std::size_t n, std::size_t w, std::size_t step) {
  std::vector<std::size_t> starts;
  if (n <= w) {
    starts.push_back(0);
    return starts;
  }
  for (std::size_t s = 0; s + w <= n; s += step) starts.push_back(s);
  if (starts.back() + w < n) starts.push_back(n - w);
  return starts;
}

FrameRange window_range(std::size_t start, std::size_t w, std::size_t n) {
  return {start, std::min(start + w, n)};
}

Span range_span(const FrameTrack& t, FrameRange r) {
  const double s = static_cast<double>(r.first) * t.hop_s;
  const double e = std::min(t.duration_s, static_cast<double>(r.last - 1) * t.hop_s + t.window_s);
  return {s, e};
}

// Underlying frame series for volatility; only the pitch and energy
// families have one.
enum class Family { None, Pitch, Energy };

Family family_of(Metric m) {
  switch (m) {
    case Metric::F0Median:
    case Metric::F0Iqr:
    case Metric::PitchVelocity:
    case Metric::Jitter:
      return Family::Pitch;
    case Metric::Rms:
    case Metric::EnergyBurstiness:
    case Metric::Shimmer:
      return Family::Energy;
    default:
      return Family::None;
  }
}

std::map<std::string, double> summarize(std::span<const double> v) {
  if (v.empty()) return {};
  return {{"median", median(v)}, {"iqr", iqr(v)}, {"p75", percentile(v, 75)}, {"p90", percentile(v, 90)}};
}

}  // namespace

std::string FrameParams::fingerprint() const {
  std::ostringstream os;
  os << "win=" << window_s << ";hop=" << hop_s << ";f0=" << f0_min_hz << "-" << f0_max_hz
     << ";clarity=" << clarity_threshold << ";floor=" << energy_floor;
  return os.str();
}

FrameTrack extract_frames(const Audio& audio, const FrameParams& p) {
  if (audio.sample_rate < 8000 || audio.sample_rate > 48000) {
    throw Error(ErrorCode::UnsupportedFormat, "sample rate " + std::to_string(audio.sample_rate) + " unsupported");
  }
  const double fs = audio.sample_rate;
  const auto win = static_cast<std::size_t>(std::lround(p.window_s * fs));
  const auto hop = static_cast<std::size_t>(std::lround(p.hop_s * fs));
  const std::size_t n = audio.samples.size();
  if (hop == 0 || win == 0 || n < 2 * win) {
    throw Error(ErrorCode::TooShort, "audio shorter than two analysis windows (" + std::to_string(n) + " samples)");
  }
  const std::size_t frames = (n - win + hop - 1) / hop + 1;
  const auto lag_min = static_cast<std::size_t>(std::floor(fs / p.f0_max_hz));
  const auto lag_max = static_cast<std::size_t>(std::ceil(fs / p.f0_min_hz));

  // Zero-padded copy long enough for the last frame plus the largest lag.
  std::vector<double> x(audio.samples);
  x.resize((frames - 1) * hop + win + lag_max + 2, 0.0);
  std::vector<double> cum_sq(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) cum_sq[i + 1] = cum_sq[i] + x[i] * x[i];
  auto energy = [&](std::size_t from, std::size_t len) { return cum_sq[from + len] - cum_sq[from]; };

  FrameTrack t;
  t.sample_rate = audio.sample_rate;
  t.window_s = static_cast<double>(win) / fs;
  t.hop_s = static_cast<double>(hop) / fs;
  t.duration_s = static_cast<double>(n) / fs;
  t.f0.assign(frames, 0.0);
  t.rms.assign(frames, 0.0);
  t.peak.assign(frames, 0.0);
  t.clarity.assign(frames, 0.0);
  t.voiced.assign(frames, 0);

  const std::size_t nfft = next_pow2(win);
  t.bin_hz = fs / static_cast<double>(nfft);
  t.spectrum_bins = std::min(nfft / 2 + 1, static_cast<std::size_t>(std::floor(kTiltBandHz / t.bin_hz)) + 1);
  t.power.assign(frames * t.spectrum_bins, 0.0);
  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(win));

  double* fft_in = fftw_alloc_real(nfft);
  fftw_complex* fft_out = fftw_alloc_complex(nfft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), fft_in, fft_out, FFTW_ESTIMATE);
  }

  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t s = f * hop;
    const double e0 = energy(s, win);
    t.rms[f] = std::sqrt(e0 / static_cast<double>(win));
    double pk = 0.0;
    for (std::size_t i = 0; i < win; ++i) pk = std::max(pk, std::abs(x[s + i]));
    t.peak[f] = pk;

    std::fill(fft_in, fft_in + nfft, 0.0);
    for (std::size_t i = 0; i < win; ++i) fft_in[i] = x[s + i] * hann[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < t.spectrum_bins; ++k) {
      t.power[f * t.spectrum_bins + k] = fft_out[k][0] * fft_out[k][0] + fft_out[k][1] * fft_out[k][1];
    }

    if (e0 <= 0.0) continue;
    const std::size_t lo = lag_min > 1 ? lag_min - 1 : 1;
    for (std::size_t lag = lo; lag <= lag_max + 1; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 0; i < win; ++i) acc += x[s + i] * x[s + i + lag];
      const double el = energy(s + lag, win);
      r[lag] = el > 0.0 ? acc / std::sqrt(e0 * el) : 0.0;
    }
    double best = 0.0;
    for (std::size_t lag = std::max(lag_min, lo + 1); lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) best = std::max(best, r[lag]);
    }
    if (best <= 0.0) continue;
    for (std::size_t lag = std::max(lag_min, lo + 1); lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * best) {
        const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
        const double denom = a - 2.0 * b + c;
        const double shift = denom != 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
        t.clarity[f] = b;
        if (b >= p.clarity_threshold && t.rms[f] >= p.energy_floor) {
          t.voiced[f] = 1;
          t.f0[f] = std::clamp(fs / (static_cast<double>(lag) + shift), p.f0_min_hz, p.f0_max_hz);
        }
        break;
      }
    }
  }

  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(fft_in);
  fftw_free(fft_out);
  return t;
}

std::vector<Delta> delta_f0(const FrameTrack& t) {
  std::vector<Delta> out;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t.voiced[i] && t.voiced[i - 1]) out.push_back({i, t.f0[i] - t.f0[i - 1]});
  }
  return out;
}

std::vector<Delta> delta_energy(const FrameTrack& t) {
  std::vector<Delta> out;
  for (std::size_t i = 1; i < t.size(); ++i) out.push_back({i, t.rms[i] - t.rms[i - 1]});
  return out;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::F0Median: return "f0_median";
    case Metric::F0Iqr: return "f0_iqr";
    case Metric::PitchVelocity: return "pitch_velocity";
    case Metric::Rms: return "rms";
    case Metric::EnergyBurstiness: return "energy_burstiness";
    case Metric::SpeechRate: return "speech_rate";
    case Metric::PauseDensity: return "pause_density";
    case Metric::VoicedRatio: return "voiced_ratio";
    case Metric::Jitter: return "jitter";
    case Metric::Shimmer: return "shimmer";
    case Metric::Hnr: return "hnr";
    case Metric::SpectralTilt: return "spectral_tilt";
  }
  return "unknown";
}

Metric metric_from_string(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::UnknownMetric, "unknown acoustic metric '" + std::string(name) + "'");
}

FrameRange frames_in(const FrameTrack& t, double start_s, double end_s) {
  FrameRange r{t.size(), t.size()};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double c = t.frame_center(i);
    if (c >= start_s && c <= end_s) {
      if (r.first == t.size()) r.first = i;
      r.last = i + 1;
    }
  }
  if (r.first == t.size()) return {0, 0};
  return r;
}

double compute_metric(const FrameTrack& t, Metric metric, FrameRange range) {
  if (range.size() == 0) return 0.0;
  const double seconds = static_cast<double>(range.size()) * t.hop_s;
  switch (metric) {
    case Metric::F0Median: return median(voiced_f0(t, range));
    case Metric::F0Iqr: return iqr(voiced_f0(t, range));
    case Metric::PitchVelocity: return percentile(deltas_in(delta_f0(t), range, true), 75.0);
    case Metric::Rms:
      return median(std::span<const double>(t.rms.data() + range.first, range.size()));
    case Metric::EnergyBurstiness: return percentile(deltas_in(delta_energy(t), range, false), 90.0);
    case Metric::SpeechRate: {
      std::size_t runs = 0;
      for_each_run(t, range, [&](bool voiced, std::size_t) { runs += voiced ? 1 : 0; });
      return static_cast<double>(runs) / seconds;
    }
    case Metric::PauseDensity: {
      std::size_t pauses = 0;
      for_each_run(t, range, [&](bool voiced, std::size_t len) {
        if (!voiced && static_cast<double>(len) * t.hop_s >= 0.2 - 1e-9) ++pauses;
      });
      return static_cast<double>(pauses) / seconds;
    }
    case Metric::VoicedRatio: {
      std::size_t v = 0;
      for (std::size_t i = range.first; i < range.last; ++i) v += t.voiced[i];
      return static_cast<double>(v) / static_cast<double>(range.size());
    }
    case Metric::Jitter: return perturbation(t, range, true);
    case Metric::Shimmer: return perturbation(t, range, false);
    case Metric::Hnr: return median(frame_hnr(t, range));
    case Metric::SpectralTilt: return spectral_tilt(t, range);
  }
  return 0.0;
}

nlohmann::json to_json(const MetricReference& ref) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [m, s] : ref) j[std::string(to_string(m))] = {{"median", s.median}, {"iqr", s.iqr}};
  return j;
}

MetricReference metric_reference_from_json(const nlohmann::json& j) {
  MetricReference ref;
  for (const auto& [name, v] : j.items()) {
    const Metric m = metric_from_string(name);
    ref[m] = RobustStat{v.at("median").get<double>(), v.at("iqr").get<double>()};
    if (ref[m].iqr < 0.0) throw Error(ErrorCode::PreconditionFailed, "negative IQR for metric " + name);
  }
  return ref;
}

UtteranceAcoustics prepare_acoustics(const Audio& audio, const FrameParams& params) {
  UtteranceAcoustics u;
  u.track = extract_frames(audio, params);
  const std::size_t n = u.track.size();
  const auto w = static_cast<std::size_t>(std::lround(0.300 / u.track.hop_s));
  const auto step = static_cast<std::size_t>(std::lround(0.150 / u.track.hop_s));
  const auto starts = window_starts(n, w, step);
  for (Metric m : kAllMetrics) {
    std::vector<double> values;
    values.reserve(starts.size());
    for (std::size_t s : starts) values.push_back(compute_metric(u.track, m, window_range(s, w, n)));
    u.local[m] = RobustStat{median(values), iqr(values)};
  }
  std::vector<double> df0, de;
  for (const auto& d : delta_f0(u.track)) df0.push_back(d.value);
  for (const auto& d : delta_energy(u.track)) de.push_back(d.value);
  u.delta_f0_iqr = iqr(df0);
  u.delta_energy_iqr = iqr(de);
  u.delta_energy_p99 = percentile(de, 99.0);
  return u;
}

Span anchor_span(const std::vector<AlignedWord>& alignment, const std::vector<std::size_t>& word_indices,
                 double duration_s, double padding_s) {
  if (word_indices.empty()) throw Error(ErrorCode::IndexOutOfRange, "anchor_span needs at least one word index");
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t idx : word_indices) {
    if (idx >= alignment.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "word index " + std::to_string(idx) + " outside alignment of " +
                                                  std::to_string(alignment.size()) + " words");
    }
    lo = first ? alignment[idx].start_s : std::min(lo, alignment[idx].start_s);
    hi = first ? alignment[idx].end_s : std::max(hi, alignment[idx].end_s);
    first = false;
  }
  return {std::clamp(lo - padding_s, 0.0, duration_s), std::clamp(hi + padding_s, 0.0, duration_s)};
}

std::string_view to_string(LevelBin b) {
  switch (b) {
    case LevelBin::Low: return "Low";
    case LevelBin::Mid: return "Mid";
    case LevelBin::High: return "High";
  }
  return "Mid";
}

std::string_view to_string(VolatilityBin b) { return b == VolatilityBin::Volatile ? "Volatile" : "Stable"; }

LevelBin level_bin(double z, double threshold) {
  if (z < -threshold) return LevelBin::Low;
  if (z > threshold) return LevelBin::High;
  return LevelBin::Mid;
}

nlohmann::json to_json(const AcousticObservation& obs) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& m : obs.metrics) {
    nlohmann::json j = {{"value", m.value},
                        {"z_local", m.z_local},
                        {"level", to_string(m.level)},
                        {"level_reference", m.level_reference}};
    j["z_global"] = m.z_global ? nlohmann::json(*m.z_global) : nlohmann::json(nullptr);
    j["volatility"] = m.volatility ? nlohmann::json(to_string(*m.volatility)) : nlohmann::json(nullptr);
    if (!m.summary.empty()) j["summary"] = m.summary;
    metrics[std::string(to_string(m.metric))] = std::move(j);
  }
  return {{"segment", {{"start", obs.segment.start_s}, {"end", obs.segment.end_s}}},
          {"frames", obs.frames},
          {"metrics", metrics},
          {"events", obs.events},
          {"notes", obs.notes}};
}

AcousticObservation analyze_segment(const UtteranceAcoustics& utt, Span seg, const std::vector<Metric>& metrics,
                                    const AnalyzeOptions& options) {
  const FrameTrack& t = utt.track;
  constexpr double kSlack = 1e-9;
  if (!(seg.start_s >= -kSlack) || !(seg.end_s <= t.duration_s + kSlack) || !(seg.start_s < seg.end_s)) {
    throw Error(ErrorCode::SegmentOutOfBounds, "segment [" + fmt_double(seg.start_s) + ", " + fmt_double(seg.end_s) +
                                                   "] outside [0, " + fmt_double(t.duration_s) + "]");
  }
  const FrameRange range = frames_in(t, seg.start_s, seg.end_s);
  if (range.size() < options.min_frames) {
    throw Error(ErrorCode::SegmentTooShort, "segment covers " + std::to_string(range.size()) + " frames, need " +
                                                std::to_string(options.min_frames));
  }

  AcousticObservation obs;
  obs.segment = seg;
  obs.frames = range.size();
  const auto df0_all = delta_f0(t);
  const auto de_all = delta_energy(t);
  const auto df0 = deltas_in(df0_all, range, false);
  const auto de = deltas_in(de_all, range, false);

  const std::vector<Metric>& wanted = metrics.empty() ? std::vector<Metric>(kAllMetrics.begin(), kAllMetrics.end()) : metrics;
  bool fell_back = false;
  for (Metric m : wanted) {
    MetricObservation mo;
    mo.metric = m;
    mo.value = compute_metric(t, m, range);
    switch (m) {
      case Metric::F0Median:
      case Metric::F0Iqr: mo.summary = summarize(voiced_f0(t, range)); break;
      case Metric::PitchVelocity: mo.summary = summarize(deltas_in(df0_all, range, true)); break;
      case Metric::Rms: mo.summary = summarize(std::span<const double>(t.rms.data() + range.first, range.size())); break;
      case Metric::EnergyBurstiness: mo.summary = summarize(de); break;
      case Metric::Hnr: mo.summary = summarize(frame_hnr(t, range)); break;
      default: break;
    }
    const auto local = utt.local.find(m);
    mo.z_local = local != utt.local.end() ? local->second.z(mo.value) : 0.0;
    const MetricReference::const_iterator global =
        options.global ? options.global->find(m) : MetricReference::const_iterator{};
    if (options.global && global != options.global->end()) {
      mo.z_global = global->second.z(mo.value);
      mo.level = level_bin(*mo.z_global);
      mo.level_reference = "global";
    } else {
      mo.level = level_bin(mo.z_local);
      mo.level_reference = "local_fallback";
      fell_back = true;
    }
    const Family fam = family_of(m);
    if (fam != Family::None) {
      const auto& series = fam == Family::Pitch ? df0 : de;
      const double ref_iqr = fam == Family::Pitch ? utt.delta_f0_iqr : utt.delta_energy_iqr;
      const double ratio = series.size() >= 2 ? iqr(series) / (ref_iqr + kReferenceEpsilon) : 0.0;
      mo.volatility = ratio > 1.0 ? VolatilityBin::Volatile : VolatilityBin::Stable;
    }
    obs.metrics.push_back(std::move(mo));
  }
  for (double v : de) {
    if (v > kSpikeFloor && v > utt.delta_energy_p99) {
      obs.events.push_back("SuddenSpike");
      break;
    }
  }
  if (std::none_of(t.voiced.begin() + static_cast<std::ptrdiff_t>(range.first),
                   t.voiced.begin() + static_cast<std::ptrdiff_t>(range.last), [](std::uint8_t v) { return v != 0; })) {
    obs.notes.push_back("no voiced frames in segment; voicing-dependent metrics reported as 0");
  }
  if (fell_back) obs.notes.push_back("global reference unavailable; level bins use the utterance reference");
  if (options.global && !options.global_scope.empty()) obs.notes.push_back("global reference scope: " + options.global_scope);
  if (options.global_fingerprint_mismatch) {
    obs.notes.push_back("global reference was built with different frame parameters");
  }
  return obs;
}

std::string_view to_string(FocusType f) {
  switch (f) {
    case FocusType::EnergyBurst: return "energy_burst";
    case FocusType::PitchExcursion: return "pitch_excursion";
    case FocusType::PauseContrast: return "pause_contrast";
    case FocusType::VoicingInstability: return "voicing_instability";
  }
  return "energy_burst";
}

FocusType focus_type_from_string(std::string_view name) {
  for (FocusType f : {FocusType::EnergyBurst, FocusType::PitchExcursion, FocusType::PauseContrast,
                      FocusType::VoicingInstability}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::PreconditionFailed, "unknown focus type '" + std::string(name) + "'");
}

nlohmann::json to_json(const HotspotResult& result) {
  nlohmann::json rois = nlohmann::json::array();
  for (const auto& r : result.rois) {
    rois.push_back({{"start", r.span.start_s},
                    {"end", r.span.end_s},
                    {"focus_type", to_string(r.focus)},
                    {"magnitude", r.magnitude},
                    {"rationale", r.rationale}});
  }
  nlohmann::json j = {{"rois", rois}};
  if (result.no_voiced_frames) j["flags"] = nlohmann::json::array({"no_voiced_frames"});
  return j;
}

HotspotResult find_hotspots(const UtteranceAcoustics& utt, FocusType focus, const HotspotParams& p) {
  const FrameTrack& t = utt.track;
  HotspotResult result;
  if (focus == FocusType::PitchExcursion &&
      std::none_of(t.voiced.begin(), t.voiced.end(), [](std::uint8_t v) { return v != 0; })) {
    result.no_voiced_frames = true;
    return result;
  }
  const auto df0 = delta_f0(t);
  const auto de = delta_energy(t);

  struct Candidate {
    FrameRange range;
    double score;
    std::string rationale;
  };
  std::vector<Candidate> cands;
  for (std::size_t s : window_starts(t.size(), p.window_frames, p.step_frames)) {
    const FrameRange r = window_range(s, p.window_frames, t.size());
    double score = 0.0;
    std::string why;
    switch (focus) {
      case FocusType::EnergyBurst: {
        const auto v = deltas_in(de, r, false);
        score = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
        if (score < p.energy_floor) continue;
        why = "max frame-to-frame RMS rise " + fmt_double(score);
        break;
      }
      case FocusType::PitchExcursion: {
        const auto v = deltas_in(df0, r, true);
        score = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
        if (score < p.pitch_floor_hz) continue;
        why = "max voiced F0 step " + fmt_double(score) + " Hz";
        break;
      }
      case FocusType::PauseContrast: {
        std::size_t longest = 0;
        bool any_voiced = false;
        for_each_run(t, r, [&](bool voiced, std::size_t len) {
          if (voiced) any_voiced = true;
          else longest = std::max(longest, len);
        });
        score = static_cast<double>(longest) * t.hop_s;
        if (!any_voiced || score < p.pause_floor_s) continue;
        why = "unvoiced run of " + fmt_double(score) + " s beside voiced frames";
        break;
      }
      case FocusType::VoicingInstability: {
        std::size_t flips = 0;
        for (std::size_t i = r.first + 1; i < r.last; ++i) flips += t.voiced[i] != t.voiced[i - 1] ? 1 : 0;
        score = r.size() > 1 ? static_cast<double>(flips) / static_cast<double>(r.size() - 1) : 0.0;
        if (score < p.flip_floor) continue;
        why = "voicing flip rate " + fmt_double(score);
        break;
      }
    }
    cands.push_back({r, score, std::move(why)});
  }
  // Highest score first; equal scores keep the earlier window.
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  const double best = cands.empty() ? 0.0 : cands.front().score;
  for (const auto& c : cands) {
    if (result.rois.size() >= p.top_n) break;
    if (c.score < p.relative_floor * best) break;
    const Span span = range_span(t, c.range);
    bool suppressed = false;
    for (const auto& kept : result.rois) {
      const double inter = std::min(span.end_s, kept.span.end_s) - std::max(span.start_s, kept.span.start_s);
      const double shorter = std::min(span.end_s - span.start_s, kept.span.end_s - kept.span.start_s);
      if (inter > 0.0 && shorter > 0.0 && inter / shorter >= p.nms_overlap) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) result.rois.push_back({span, focus, c.score, c.rationale});
  }
  return result;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::MuchGreater: return ">>";
    case Relation::Greater: return ">";
    case Relation::Similar: return "~";
    case Relation::Less: return "<";
    case Relation::MuchLess: return "<<";
  }
  return "~";
}

Relation relation_for_gap(double dz) {
  const double a = std::abs(dz);
  if (a < 0.25) return Relation::Similar;
  if (a >= 1.5) return dz > 0 ? Relation::MuchGreater : Relation::MuchLess;
  return dz > 0 ? Relation::Greater : Relation::Less;
}

nlohmann::json to_json(const SegmentComparison& cmp) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : cmp.segments) segs.push_back(to_json(s));
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& m : cmp.metrics) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : m.pairs) {
      pairs.push_back({{"a", p.a}, {"b", p.b}, {"relation", to_string(p.relation)}, {"dz", p.dz}});
    }
    metrics[std::string(to_string(m.metric))] = {{"z_local", m.z_local}, {"pairs", pairs}, {"ranking", m.ranking}};
  }
  return {{"segments", segs}, {"metrics", metrics}};
}

SegmentComparison compare_segments(const UtteranceAcoustics& utt, const std::vector<Span>& segments,
                                   const std::vector<Metric>& metrics, const AnalyzeOptions& options) {
  if (segments.size() < 2) throw Error(ErrorCode::PreconditionFailed, "compare needs at least two segments");
  SegmentComparison cmp;
  for (const auto& s : segments) cmp.segments.push_back(analyze_segment(utt, s, metrics, options));
  const std::size_t n_metrics = cmp.segments.front().metrics.size();
  for (std::size_t k = 0; k < n_metrics; ++k) {
    MetricComparison mc;
    mc.metric = cmp.segments.front().metrics[k].metric;
    for (const auto& s : cmp.segments) mc.z_local.push_back(s.metrics[k].z_local);
    for (std::size_t a = 0; a < segments.size(); ++a) {
      for (std::size_t b = a + 1; b < segments.size(); ++b) {
        const double dz = mc.z_local[a] - mc.z_local[b];
        mc.pairs.push_back({a, b, relation_for_gap(dz), dz});
      }
    }
    mc.ranking.resize(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) mc.ranking[i] = i;
    std::stable_sort(mc.ranking.begin(), mc.ranking.end(),
                     [&](std::size_t x, std::size_t y) { return mc.z_local[x] > mc.z_local[y]; });
    cmp.metrics.push_back(std::move(mc));
  }
  return cmp;
}

}  // namespace adept
