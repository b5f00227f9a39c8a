#include "tsh/scene/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsh/dsp/noise.hpp"
#include "tsh/io/wav.hpp"

namespace tsh::scene {

namespace {

// Adult reference formants (Hz) for /a e i o u/.
constexpr std::array<std::array<double, 4>, 5> kVowelTable{{
    {730, 1090, 2440, 3400},
    {530, 1840, 2480, 3500},
    {270, 2290, 3010, 3700},
    {570, 840, 2410, 3400},
    {300, 870, 2240, 3300},
}};
constexpr std::array<double, 4> kBandwidths{70, 100, 130, 160};

struct Resonator {
  double a1 = 0, a2 = 0, b0 = 0;
  double y1 = 0, y2 = 0;

  void tune(double freq, double bw) {
    const double fs = kSampleRate;
    freq = std::min(freq, 0.45 * fs);
    const double r = std::exp(-std::numbers::pi * bw / fs);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
    a2 = -r * r;
    b0 = 1.0 - r;
  }
  double step(double x) {
    const double y = b0 * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::vector<std::filesystem::path> wav_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Mono crop_or_tile(const Mono& src, std::size_t samples, Rng& rng) {
  Mono out(samples, 0.0f);
  if (src.empty()) return out;
  if (src.size() >= samples) {
    const std::size_t off = rng.index(src.size() - samples + 1);
    std::copy(src.begin() + off, src.begin() + off + samples, out.begin());
  } else {
    for (std::size_t i = 0; i < samples; ++i) out[i] = src[i % src.size()];
  }
  return out;
}

}  // namespace

void peak_normalize(Mono& x, float peak) {
  float m = 0.0f;
  for (float v : x) m = std::max(m, std::abs(v));
  if (m <= 0.0f) return;
  const float g = peak / m;
  for (auto& v : x) v *= g;
}

// ---------------------------------------------------------------------------

SyntheticVoiceCorpus::SyntheticVoiceCorpus(std::size_t speakers, std::uint64_t seed) {
  if (speakers == 0) throw ConfigError("speech corpus needs at least one speaker");
  voices_.reserve(speakers);
  for (std::size_t i = 0; i < speakers; ++i) {
    Rng rng(seed ^ (0x51ed270b27f3a1c5ULL * (i + 1)));
    voices_.push_back(make_voice(rng));
  }
}

std::string SyntheticVoiceCorpus::speaker_name(std::size_t speaker) const {
  return "voice-" + std::to_string(speaker);
}

VoiceProfile SyntheticVoiceCorpus::make_voice(Rng& rng) {
  VoiceProfile v;
  v.f0_hz = std::exp(rng.uniform(std::log(85.0), std::log(240.0)));
  v.vocal_tract_scale = rng.uniform(0.82, 1.2);
  v.bandwidth_scale = rng.uniform(0.8, 1.3);
  v.tilt = rng.uniform(0.75, 0.95);
  v.breathiness = rng.uniform(0.01, 0.1);
  v.rate = rng.uniform(0.8, 1.25);
  for (std::size_t k = 0; k < kVowelTable.size(); ++k) {
    for (std::size_t f = 0; f < 4; ++f) {
      const double jitter = std::clamp(rng.normal() * 0.08, -0.2, 0.2);
      v.vowels[k][f] = kVowelTable[k][f] / v.vocal_tract_scale * (1.0 + jitter);
    }
    std::sort(v.vowels[k].begin(), v.vowels[k].end());
  }
  return v;
}

Mono SyntheticVoiceCorpus::synthesize(const VoiceProfile& voice, std::size_t samples, Rng& rng) {
  Mono out(samples, 0.0f);
  std::array<Resonator, 4> formants{};
  const double fs = kSampleRate;
  double phase = 0.0, glottal = 0.0;
  std::size_t t = 0;
  while (t < samples) {
    const auto syl = static_cast<std::size_t>(rng.uniform(0.12, 0.30) / voice.rate * fs);
    std::size_t gap = static_cast<std::size_t>(rng.uniform(0.03, 0.15) / voice.rate * fs);
    if (rng.bernoulli(0.1)) gap += static_cast<std::size_t>(rng.uniform(0.2, 0.5) * fs);
    const auto& vowel = voice.vowels[rng.index(voice.vowels.size())];
    for (std::size_t f = 0; f < 4; ++f) formants[f].tune(vowel[f], kBandwidths[f] * voice.bandwidth_scale);
    const double f0 = voice.f0_hz * std::exp(std::clamp(rng.normal() * 0.12, -0.3, 0.3));
    const double slope = rng.uniform(-0.15, 0.15);
    const double ramp = 0.025 * fs;

    for (std::size_t i = 0; i < syl + gap && t < samples; ++i, ++t) {
      double excitation = 0.0;
      if (i < syl) {
        const double pos = static_cast<double>(i) / static_cast<double>(syl);
        phase += f0 * (1.0 + slope * (pos - 0.5)) / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0;
        }
        glottal = (1.0 - voice.tilt) * pulse + voice.tilt * glottal;
        double env = 1.0;
        if (static_cast<double>(i) < ramp) {
          env = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
        } else if (static_cast<double>(syl - i) < ramp) {
          env = 0.5 - 0.5 * std::cos(std::numbers::pi * (syl - i) / ramp);
        }
        excitation = env * (glottal + voice.breathiness * 0.05 * rng.normal());
      }
      double y = excitation;
      for (auto& r : formants) y = r.step(y);
      out[t] = static_cast<float>(y);
    }
  }
  peak_normalize(out);
  return out;
}

Mono SyntheticVoiceCorpus::utterance(std::size_t speaker, std::size_t samples, Rng& rng) const {
  return synthesize(voices_.at(speaker), samples, rng);
}

// ---------------------------------------------------------------------------

Mono SyntheticNoiseCorpus::noise(std::size_t samples, Rng& rng) const {
  Mono out(samples, 0.0f);
  if (samples == 0) return out;
  const double w_white = rng.uniform(0.0, 1.0);
  const double w_pink = rng.uniform(0.0, 1.0);
  const double w_brown = rng.uniform(0.0, 0.5);
  const auto white = dsp::colored_noise(dsp::NoiseColor::White, samples, rng.fork());
  const auto pink = dsp::colored_noise(dsp::NoiseColor::Pink, samples, rng.fork());
  const auto brown = dsp::colored_noise(dsp::NoiseColor::Brown, samples, rng.fork());
  const double hum = rng.bernoulli(0.5) ? rng.uniform(0.0, 0.5) : 0.0;
  const double mains = rng.bernoulli(0.5) ? 50.0 : 60.0;
  const double mod_rate = rng.uniform(0.1, 2.0);
  const double mod_depth = rng.uniform(0.0, 0.6);
  const double mod_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    double v = w_white * white[i] + w_pink * pink[i] + w_brown * brown[i];
    v *= 1.0 - mod_depth * 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * mod_rate * t + mod_phase));
    for (int h = 1; h <= 3; ++h) v += hum / h * std::sin(2.0 * std::numbers::pi * mains * h * t);
    out[i] = static_cast<float>(v);
  }
  peak_normalize(out);
  return out;
}

// ---------------------------------------------------------------------------

WavDirectoryCorpus::WavDirectoryCorpus(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw DataError("speech corpus directory not found: " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto files = wav_files(d);
    if (!files.empty()) speakers_.push_back({d.filename().string(), std::move(files)});
  }
  if (speakers_.empty()) throw DataError("speech corpus is empty: " + root.string());
}

std::string WavDirectoryCorpus::speaker_name(std::size_t speaker) const {
  return speakers_.at(speaker).name;
}

Mono WavDirectoryCorpus::utterance(std::size_t speaker, std::size_t samples, Rng& rng) const {
  const auto& sp = speakers_.at(speaker);
  const auto& file = sp.files[rng.index(sp.files.size())];
  auto out = crop_or_tile(io::read_wav(file).mono(), samples, rng);
  peak_normalize(out);
  return out;
}

WavDirectoryNoiseCorpus::WavDirectoryNoiseCorpus(const std::filesystem::path& root)
    : root_(root) {
  if (!std::filesystem::is_directory(root)) {
    throw DataError("noise corpus directory not found: " + root.string());
  }
  files_ = wav_files(root);
  if (files_.empty()) throw DataError("noise corpus is empty: " + root.string());
}

Mono WavDirectoryNoiseCorpus::noise(std::size_t samples, Rng& rng) const {
  const auto& file = files_[rng.index(files_.size())];
  auto out = crop_or_tile(io::read_wav(file).mono(), samples, rng);
  peak_normalize(out);
  return out;
}

}  // namespace tsh::scene
