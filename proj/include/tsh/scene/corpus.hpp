#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "tsh/common.hpp"

namespace tsh::scene {

/// Source of mono speech utterances grouped by speaker.
class SpeechCorpus {
 public:
  virtual ~SpeechCorpus() = default;
  virtual std::size_t speaker_count() const = 0;
  virtual std::string speaker_name(std::size_t speaker) const = 0;
  /// A peak-normalised utterance of exactly `samples` samples.
  virtual Mono utterance(std::size_t speaker, std::size_t samples, Rng& rng) const = 0;
};

/// Source of mono background noise.
class NoiseCorpus {
 public:
  virtual ~NoiseCorpus() = default;
  virtual std::string name() const = 0;
  /// Peak-normalised noise of exactly `samples` samples.
  virtual Mono noise(std::size_t samples, Rng& rng) const = 0;
};

/// Parameters of one synthetic talker: glottal pitch, vocal-tract scaling
/// and a personal set of vowel formant targets.
struct VoiceProfile {
  double f0_hz = 120.0;
  double vocal_tract_scale = 1.0;
  double bandwidth_scale = 1.0;
  double tilt = 0.9;          ///< one-pole glottal lowpass coefficient
  double breathiness = 0.05;  ///< aspiration noise level
  double rate = 1.0;          ///< syllable rate multiplier
  std::array<std::array<double, 4>, 5> vowels{};  ///< F1..F4 per vowel (Hz)
};

/// Formant-synthesis talkers. Voice i is fully determined by (seed, i).
class SyntheticVoiceCorpus final : public SpeechCorpus {
 public:
  SyntheticVoiceCorpus(std::size_t speakers, std::uint64_t seed);

  std::size_t speaker_count() const override { return voices_.size(); }
  std::string speaker_name(std::size_t speaker) const override;
  Mono utterance(std::size_t speaker, std::size_t samples, Rng& rng) const override;

  const VoiceProfile& profile(std::size_t speaker) const { return voices_.at(speaker); }
  static VoiceProfile make_voice(Rng& rng);
  static Mono synthesize(const VoiceProfile& voice, std::size_t samples, Rng& rng);

 private:
  std::vector<VoiceProfile> voices_;
};

/// Colored noise, mains hum and band-limited bursts in random proportions.
class SyntheticNoiseCorpus final : public NoiseCorpus {
 public:
  std::string name() const override { return "synthetic-noise"; }
  Mono noise(std::size_t samples, Rng& rng) const override;
};

/// <root>/<speaker>/*.wav, mono 16 kHz. Random crops; short files are tiled.
class WavDirectoryCorpus final : public SpeechCorpus {
 public:
  explicit WavDirectoryCorpus(const std::filesystem::path& root);

  std::size_t speaker_count() const override { return speakers_.size(); }
  std::string speaker_name(std::size_t speaker) const override;
  Mono utterance(std::size_t speaker, std::size_t samples, Rng& rng) const override;

 private:
  struct Speaker {
    std::string name;
    std::vector<std::filesystem::path> files;
  };
  std::vector<Speaker> speakers_;
};

/// <root>/*.wav mono 16 kHz.
class WavDirectoryNoiseCorpus final : public NoiseCorpus {
 public:
  explicit WavDirectoryNoiseCorpus(const std::filesystem::path& root);
  std::string name() const override { return root_.string(); }
  Mono noise(std::size_t samples, Rng& rng) const override;

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
};

/// Scale so max |x| == peak (no-op for silence).
void peak_normalize(Mono& x, float peak = 1.0f);

}  // namespace tsh::scene
