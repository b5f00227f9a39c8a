#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsh/engine/model.hpp"
#include "tsh/engine/profile.hpp"
#include "tsh/enroll/enrollment.hpp"
#include "tsh/eval/dataset.hpp"
#include "tsh/eval/report.hpp"
#include "tsh/io/scene_io.hpp"

namespace tsh::eval {

/// identity: estimate = left mixture; oracle: estimate = left target;
/// model: streamed network output with the lookahead delay removed.
enum class Estimator { Identity, Oracle, Model };
Estimator parse_estimator(std::string_view s);
std::string to_string(Estimator e);

struct SceneData {
  std::string id;
  BinauralBuffer mixture;
  BinauralBuffer target;
  BinauralBuffer enroll;
  std::optional<BinauralBuffer> enroll_target;
  std::map<std::string, double> tags;
};

/// Tags derived from meta.json: enrollment_duration (target seconds inside
/// the enrollment), angle_error (deg), angular_velocity (configured target
/// speed, deg/s), max_target_speed_deg_s (largest event speed), plus any
/// "tags" object stored in the meta.
std::map<std::string, double> scene_tags(const nlohmann::json& meta);
SceneData scene_data(io::SceneFolder folder);

struct EvalContext {
  Estimator estimator = Estimator::Model;
  const engine::Model* model = nullptr;               ///< required for Estimator::Model
  const enroll::EmbeddingProvider* provider = nullptr;  ///< required for Estimator::Model
  double window_s = enroll::kDefaultWindowS;
  double hop_s = enroll::kDefaultHopS;
};

/// Metrics against the left-ear target. Errors are returned as a failed
/// record instead of being thrown.
EvalRecord evaluate_scene(const SceneData& scene, const EvalContext& ctx);

struct EvalOptions {
  int workers = 0;
  std::size_t max_scenes = 0;  ///< 0: all
};

/// Evaluates every scene folder under `dataset`. Corrupt or incomplete
/// scenes become failed records; the run continues.
Report run_eval(const std::filesystem::path& dataset, const EvalContext& ctx,
                const EvalOptions& opts = {});

enum class SweepAxis { EnrollmentDuration, AngleError, AngularVelocity };
SweepAxis parse_sweep_axis(std::string_view s);
/// Also the tag key of the axis.
std::string to_string(SweepAxis a);
std::vector<double> default_sweep_points(SweepAxis a);

struct SweepOptions {
  SweepAxis axis = SweepAxis::EnrollmentDuration;
  std::vector<double> points;  ///< empty: default_sweep_points(axis)
  std::size_t scenes_per_point = 20;
  std::uint64_t seed = 1;
  double scene_duration_s = 5.0;
  int workers = 0;
  std::optional<std::filesystem::path> write_dir;  ///< also store the scenes
};

/// Spec for scene `index` at one axis point. Throws ConfigError for points
/// the generator refuses (angle error above 18 deg, non-positive values,
/// enrollment target longer than the 5 s enrollment).
scene::SceneSpec sweep_scene_spec(SweepAxis axis, double point, std::uint64_t seed,
                                  std::size_t index, double scene_duration_s = 5.0);

/// One stratum per point; scene seeds are shared across points so only
/// the swept quantity changes.
Report sweep(const SceneAssets& assets, const EvalContext& ctx, const SweepOptions& opts);

struct LatencyOptions {
  int chunks = 1000;
  engine::ProfileOptions profile;
  std::uint64_t embedding_seed = 3;
};

/// Profiles in-place and copy-based state updates and decomposes the
/// end-to-end latency of each.
Report latency_report(const engine::Model& model, const LatencyOptions& opts = {});

}  // namespace tsh::eval
