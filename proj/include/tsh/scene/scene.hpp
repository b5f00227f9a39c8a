#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsh/common.hpp"
#include "tsh/scene/brir.hpp"
#include "tsh/scene/corpus.hpp"
#include "tsh/scene/render.hpp"
#include "tsh/scene/trajectory.hpp"

namespace tsh::scene {

struct SourceSpec {
  int speaker = -1;  ///< -1: drawn from the seed
  MotionMode motion = MotionMode::Static;
  std::optional<double> azimuth_deg;
  std::optional<double> polar_deg;
  /// Fixes |angular velocity| of motion events (sweeps); unset = [30, 90] deg/s.
  std::optional<double> speed_deg_s;
  /// Speech segment length; unset = uniform [2, 5] s.
  std::optional<double> length_s;
};

struct EnrollmentSpec {
  double duration_s = 5.0;
  /// Length of the target's component inside the enrollment; unset = [2, 5] s.
  std::optional<double> target_s;
  double angle_error_deg = kMaxEnrollmentErrorDeg;
  /// Other speakers; motion and fixed angles come from SceneSpec::interferers.
  int interferers = 1;
};

struct SceneSpec {
  std::string id = "scene";
  std::uint64_t seed = 0;
  double duration_s = 5.0;
  std::string room_id;  ///< empty: drawn from the library
  SourceSpec target;
  std::vector<SourceSpec> interferers{SourceSpec{}};
  bool noise_enabled = true;
  SourceSpec noise;
  bool augment = true;
  /// Scale target/interferer ratios; unset = uniform [-5, 5] dB.
  std::optional<double> sir_db;
  /// Target-to-noise ratio; unset = uniform [0, 10] dB.
  std::optional<double> tnr_db;
  EnrollmentSpec enrollment;

  /// At most 3 speech sources, positive duration. Throws ConfigError.
  void validate() const;
};

enum class StemRole { Target, Interferer, Noise };
std::string to_string(StemRole r);

struct StemMeta {
  StemRole role = StemRole::Target;
  std::string speaker;  ///< speaker or noise-corpus name
  std::size_t offset = 0;
  std::size_t length = 0;
  double gain = 1.0;
  Trajectory trajectory;
};

struct AugmentationMeta {
  bool enabled = false;
  double white_std = 0.0;
  double pink_scale = 0.0;
  double brown_scale = 0.0;
};

struct SceneMeta {
  std::string id;
  std::uint64_t seed = 0;
  std::string room_id;
  double duration_s = 0.0;
  double scale = 1.0;  ///< global gain applied to every stem
  std::vector<StemMeta> stems;
  AugmentationMeta augmentation;
};

struct RenderedScene {
  BinauralBuffer mixture;
  BinauralBuffer target_gt;
  std::vector<BinauralBuffer> stems;  ///< aligned with meta.stems
  BinauralBuffer augmentation;        ///< zero when disabled
  SceneMeta meta;
};

struct Corpora {
  const SpeechCorpus* speech = nullptr;
  const NoiseCorpus* noise = nullptr;
};

struct SpeakerAssignment {
  std::size_t target = 0;
  std::vector<std::size_t> interferers;
};

/// Speakers for the mixture; the target is shared with the enrollment scene.
SpeakerAssignment resolve_speakers(const SceneSpec& spec, const SpeechCorpus& corpus);

/// Renders the mixture scene: speech overlaid at random offsets on a noise
/// bed, every source through BRIRs of one room, optional post-mix noise
/// augmentation. mixture == sum(stems) + augmentation.
RenderedScene compose_scene(const SceneSpec& spec, const BrirLibrary& library,
                            const Corpora& corpora);

/// Same pipeline for the noisy enrollment: target trajectory in enrollment
/// mode (within +/- angle_error of 90 deg), same room and target speaker.
RenderedScene make_enrollment_scene(const SceneSpec& spec, const BrirLibrary& library,
                                    const Corpora& corpora);

/// Random spec for dataset generation.
SceneSpec random_scene_spec(std::uint64_t seed, const std::string& id, bool moving = false);

nlohmann::json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const SceneMeta& meta);

}  // namespace tsh::scene
