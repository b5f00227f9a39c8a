#include "tsh/eval/eval.hpp"

#include <cmath>
#include <cstdio>

#include "tsh/dsp/metrics.hpp"

namespace tsh::eval {

Estimator parse_estimator(std::string_view s) {
  if (s == "identity") return Estimator::Identity;
  if (s == "oracle") return Estimator::Oracle;
  if (s == "model") return Estimator::Model;
  throw ConfigError("unknown estimator '" + std::string(s) + "' (identity, oracle, model)");
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Identity: return "identity";
    case Estimator::Oracle: return "oracle";
    case Estimator::Model: return "model";
  }
  return "model";
}

std::map<std::string, double> scene_tags(const nlohmann::json& meta) {
  std::map<std::string, double> tags;
  if (!meta.is_object()) return tags;
  if (meta.contains("spec") && meta["spec"].is_object()) {
    const auto& spec = meta["spec"];
    if (spec.contains("enrollment")) {
      const auto& e = spec["enrollment"];
      if (e.contains("target_s") && e["target_s"].is_number()) {
        tags["enrollment_duration"] = e["target_s"].get<double>();
      }
      if (e.contains("angle_error_deg") && e["angle_error_deg"].is_number()) {
        tags["angle_error"] = e["angle_error_deg"].get<double>();
      }
    }
    if (spec.contains("target") && spec["target"].contains("speed_deg_s") &&
        spec["target"]["speed_deg_s"].is_number()) {
      tags["angular_velocity"] = spec["target"]["speed_deg_s"].get<double>();
    }
  }
  if (meta.contains("mixture") && meta["mixture"].contains("stems")) {
    for (const auto& stem : meta["mixture"]["stems"]) {
      if (stem.value("role", "") != "target") continue;
      double max_speed = 0.0;
      for (const auto& ev : stem["trajectory"]["events"]) {
        const double a = ev.value("azimuth_velocity_deg_s", 0.0);
        const double p = ev.value("polar_velocity_deg_s", 0.0);
        max_speed = std::max({max_speed, std::abs(a), std::abs(p)});
      }
      tags["max_target_speed_deg_s"] = max_speed;
    }
  }
  if (meta.contains("tags") && meta["tags"].is_object()) {
    for (const auto& [k, v] : meta["tags"].items()) {
      if (v.is_number()) tags[k] = v.get<double>();
    }
  }
  return tags;
}

SceneData scene_data(io::SceneFolder folder) {
  SceneData d;
  d.id = folder.id;
  d.tags = scene_tags(folder.meta);
  d.mixture = std::move(folder.mixture);
  d.target = std::move(folder.target);
  d.enroll = std::move(folder.enroll);
  d.enroll_target = std::move(folder.enroll_target);
  return d;
}

EvalRecord evaluate_scene(const SceneData& scene, const EvalContext& ctx) {
  if (ctx.estimator == Estimator::Model && (ctx.model == nullptr || ctx.provider == nullptr)) {
    throw ConfigError("model estimator needs a model and an embedding provider");
  }
  EvalRecord rec;
  rec.scene_id = scene.id;
  rec.tags = scene.tags;
  // Scene-level failures (including metric domain errors) become records.
  try {
    if (scene.mixture.size() != scene.target.size() || scene.mixture.empty()) {
      throw DataError("mixture and target must be nonempty and of equal length");
    }
    const Mono& reference = scene.target.left;
    const Mono& mixture = scene.mixture.left;
    rec.input_si_snr_db = dsp::si_snr(mixture, reference);

    std::optional<dsp::SpeakerEmbedding> embedding;
    if (ctx.provider != nullptr) {
      embedding = enroll::embed_enrollment(scene.enroll, *ctx.provider, ctx.window_s, ctx.hop_s);
      if (scene.enroll_target) {
        const auto clean =
            enroll::embed_enrollment(*scene.enroll_target, *ctx.provider, ctx.window_s, ctx.hop_s);
        rec.enrollment_similarity = enroll::enrollment_quality(*embedding, clean);
      }
    }

    Mono model_out;
    const Mono* estimate = &mixture;
    switch (ctx.estimator) {
      case Estimator::Identity: break;
      case Estimator::Oracle: estimate = &reference; break;
      case Estimator::Model: {
        const auto cond = ctx.model->condition(*embedding);
        model_out = engine::extract_aligned(*ctx.model, scene.mixture, cond);
        estimate = &model_out;
        break;
      }
    }
    rec.output_si_snr_db = dsp::si_snr(*estimate, reference);
    rec.si_snri_db = rec.output_si_snr_db - rec.input_si_snr_db;
  } catch (const Error& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.input_si_snr_db = rec.output_si_snr_db = rec.si_snri_db = 0.0;
    rec.enrollment_similarity.reset();
  }
  return rec;
}

Report run_eval(const std::filesystem::path& dataset, const EvalContext& ctx,
                const EvalOptions& opts) {
  auto dirs = io::list_scene_folders(dataset);
  if (opts.max_scenes > 0 && dirs.size() > opts.max_scenes) dirs.resize(opts.max_scenes);
  Report report;
  report.kind = "eval";
  report.estimator = to_string(ctx.estimator);
  report.environment = environment_descriptor();
  report.records.resize(dirs.size());
  parallel_for(dirs.size(), opts.workers, [&](std::size_t i) {
    try {
      report.records[i] = evaluate_scene(scene_data(io::read_scene_folder(dirs[i])), ctx);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      EvalRecord rec;
      rec.scene_id = dirs[i].filename().string();
      rec.ok = false;
      rec.error = e.what();
      report.records[i] = std::move(rec);
    }
  });
  aggregate(report);
  return report;
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "enrollment_duration") return SweepAxis::EnrollmentDuration;
  if (s == "angle_error") return SweepAxis::AngleError;
  if (s == "angular_velocity") return SweepAxis::AngularVelocity;
  throw ConfigError("unknown sweep axis '" + std::string(s) +
                    "' (enrollment_duration, angle_error, angular_velocity)");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::EnrollmentDuration: return "enrollment_duration";
    case SweepAxis::AngleError: return "angle_error";
    case SweepAxis::AngularVelocity: return "angular_velocity";
  }
  return "enrollment_duration";
}

std::vector<double> default_sweep_points(SweepAxis a) {
  switch (a) {
    case SweepAxis::EnrollmentDuration: return {1, 2, 3, 4, 5};
    case SweepAxis::AngleError: return {0, 6, 12, 18};
    case SweepAxis::AngularVelocity: return {10, 20, 30, 40, 50, 60, 70, 80};
  }
  return {};
}

scene::SceneSpec sweep_scene_spec(SweepAxis axis, double point, std::uint64_t seed,
                                  std::size_t index, double scene_duration_s) {
  if (!std::isfinite(point)) throw ConfigError("sweep point must be finite");
  Rng rng(seed);
  std::uint64_t child = rng.fork();
  for (std::size_t i = 0; i < index; ++i) child = rng.fork();
  char id[96];
  std::snprintf(id, sizeof(id), "%s_%g_%04zu", to_string(axis).c_str(), point, index);
  auto spec = scene::random_scene_spec(child, id, axis == SweepAxis::AngularVelocity);
  spec.duration_s = scene_duration_s;
  switch (axis) {
    case SweepAxis::EnrollmentDuration:
      if (!(point > 0.0) || point > spec.enrollment.duration_s) {
        throw ConfigError("enrollment target length must lie in (0, " +
                          std::to_string(spec.enrollment.duration_s) + "] s");
      }
      spec.enrollment.target_s = point;
      break;
    case SweepAxis::AngleError:
      if (point < 0.0 || point > scene::kMaxEnrollmentErrorDeg) {
        throw ConfigError("enrollment angle error must lie in [0, 18] deg");
      }
      spec.enrollment.angle_error_deg = point;
      break;
    case SweepAxis::AngularVelocity:
      if (!(point > 0.0)) throw ConfigError("angular velocity must be > 0");
      spec.target.motion = scene::MotionMode::Moving;
      spec.target.speed_deg_s = point;
      break;
  }
  spec.validate();
  return spec;
}

Report sweep(const SceneAssets& assets, const EvalContext& ctx, const SweepOptions& opts) {
  const auto points = opts.points.empty() ? default_sweep_points(opts.axis) : opts.points;
  if (opts.scenes_per_point == 0) throw ConfigError("scenes per point must be >= 1");
  std::vector<scene::SceneSpec> specs;
  std::vector<double> spec_point;
  for (double p : points) {
    for (std::size_t i = 0; i < opts.scenes_per_point; ++i) {
      specs.push_back(sweep_scene_spec(opts.axis, p, opts.seed, i, opts.scene_duration_s));
      spec_point.push_back(p);
    }
  }
  const std::string tag = to_string(opts.axis);
  Report report;
  report.kind = "sweep";
  report.estimator = to_string(ctx.estimator);
  report.environment = environment_descriptor();
  report.records.resize(specs.size());
  parallel_for(specs.size(), opts.workers, [&](std::size_t i) {
    const auto& spec = specs[i];
    const auto corpora = assets.corpora();
    const auto mix = scene::compose_scene(spec, *assets.library, corpora);
    const auto enr = scene::make_enrollment_scene(spec, *assets.library, corpora);
    if (opts.write_dir) io::write_scene_folder(*opts.write_dir / spec.id, spec, mix, enr);
    nlohmann::json meta = {{"spec", scene::to_json(spec)}, {"mixture", scene::to_json(mix.meta)}};
    SceneData d{spec.id, mix.mixture, mix.target_gt, enr.mixture, enr.target_gt, scene_tags(meta)};
    d.tags[tag] = spec_point[i];
    report.records[i] = evaluate_scene(d, ctx);
  });
  aggregate(report, tag, points);
  return report;
}

Report latency_report(const engine::Model& model, const LatencyOptions& opts) {
  Rng rng(opts.embedding_seed);
  std::vector<float> raw(model.config().cond_dim);
  for (auto& v : raw) v = static_cast<float>(rng.normal());
  const auto cond = model.condition(dsp::SpeakerEmbedding::from_raw(std::move(raw)));

  Report report;
  report.kind = "latency";
  report.environment = environment_descriptor();
  report.environment["model_parameters"] = std::to_string(model.parameter_count());
  report.environment["config_hash"] = model.config().hash();
  for (const bool copy : {false, true}) {
    auto state = model.make_state();
    const auto r = engine::profile_stream(model, state, cond, opts.chunks, copy, opts.profile);
    report.timings.push_back(timing_section(copy ? "copy" : "in_place", r, model.config().audio));
  }
  aggregate(report);
  return report;
}

}  // namespace tsh::eval
