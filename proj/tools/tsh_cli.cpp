// tsh: command line front end. Exit codes: 0 ok, 2 config error, 3 data error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsh/engine/model.hpp"
#include "tsh/engine/profile.hpp"
#include "tsh/engine/weights.hpp"
#include "tsh/enroll/enrollment.hpp"
#include "tsh/eval/dataset.hpp"
#include "tsh/eval/eval.hpp"
#include "tsh/eval/report.hpp"
#include "tsh/io/brir_manifest.hpp"
#include "tsh/io/embedding_file.hpp"
#include "tsh/io/json_file.hpp"
#include "tsh/io/wav.hpp"

namespace fs = std::filesystem;
using namespace tsh;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

/// JSON config file; flags override its values.
class Config {
 public:
  void load(const fs::path& path) {
    try {
      root_ = io::read_json_file(path);
    } catch (const DataError& e) {
      throw ConfigError(std::string("config file: ") + e.what());
    }
    if (!root_.is_object()) throw ConfigError("config file must hold a JSON object");
  }

  /// Value at a dotted path such as "synth.count", or `fallback`.
  template <class T>
  T get(const std::string& path, T fallback) const {
    const json* node = &root_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto dot = path.find('.', start);
      const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(key)) return fallback;
      node = &(*node)[key];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    try {
      return node->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config value '" + path + "': " + e.what());
    }
  }

  std::optional<std::string> opt_string(const std::string& path) const {
    const auto v = get<std::string>(path, "");
    return v.empty() ? std::nullopt : std::optional<std::string>(v);
  }

  const json* find(const std::string& key) const {
    return root_.is_object() && root_.contains(key) ? &root_[key] : nullptr;
  }

 private:
  json root_ = json::object();
};

template <class T>
T pick(const std::optional<T>& flag, const Config& cfg, const std::string& path, T fallback) {
  return flag ? *flag : cfg.get<T>(path, fallback);
}

/// Flags shared by every command that needs a model.
struct ModelFlags {
  std::optional<std::string> weights;
  std::optional<std::uint64_t> seed;
  std::optional<double> chunk_ms;
  std::optional<int> window_frames;

  void add_to(CLI::App* app) {
    app->add_option("--weights", weights, "weight archive manifest (JSON)");
    app->add_option("--seed", seed, "seed for random weights when no archive is given");
    app->add_option("--chunk-ms", chunk_ms, "chunk length in ms (lookahead stays 4 ms)");
    app->add_option("--window-frames", window_frames, "attention window in frames");
  }

  engine::ModelConfig config(const Config& cfg) const {
    engine::ModelConfig c;
    if (const auto* m = cfg.find("model")) c = engine::model_config_from_json(*m);
    if (chunk_ms || cfg.find("chunk_ms")) {
      const double ms = pick(chunk_ms, cfg, "chunk_ms", 0.0);
      if (!(ms > 0.0)) throw ConfigError("--chunk-ms must be > 0");
      c.audio = dsp::AudioParams::from_chunk_ms(ms);
    }
    c.attn_window = pick(window_frames, cfg, "window_frames", c.attn_window);
    c.validate();
    return c;
  }

  bool overrides_config(const Config& cfg) const {
    return chunk_ms || window_frames || cfg.find("model") || cfg.find("chunk_ms") ||
           cfg.find("window_frames");
  }

  engine::Model build(const Config& cfg) const {
    const auto path = weights ? std::optional<std::string>(*weights)
                              : cfg.opt_string("weights");
    if (path) {
      auto archive = engine::load_weight_archive(*path);
      if (overrides_config(cfg) && !(config(cfg) == archive.config())) {
        throw ConfigError("weights in " + *path + " were built for a different configuration");
      }
      return engine::Model::from_archive(archive);
    }
    return engine::Model::from_seed(config(cfg), pick(seed, cfg, "seed", std::uint64_t{1}));
  }
};

struct AssetFlags {
  std::optional<std::string> brir_manifest, speech_dir, noise_dir;

  void add_to(CLI::App* app) {
    app->add_option("--brir-manifest", brir_manifest, "BRIR manifest (default: synthetic pack)");
    app->add_option("--speech-dir", speech_dir, "speech corpus <dir>/<speaker>/*.wav");
    app->add_option("--noise-dir", noise_dir, "noise corpus <dir>/*.wav");
  }

  eval::SceneAssets load(const Config& cfg) const {
    eval::AssetOptions o;
    auto opt_path = [&](const std::optional<std::string>& flag, const char* key) {
      auto v = flag ? flag : cfg.opt_string(key);
      return v ? std::optional<fs::path>(*v) : std::nullopt;
    };
    o.brir_manifest = opt_path(brir_manifest, "assets.brir_manifest");
    o.speech_dir = opt_path(speech_dir, "assets.speech_dir");
    o.noise_dir = opt_path(noise_dir, "assets.noise_dir");
    o.synthetic_speakers = cfg.get<std::size_t>("assets.speakers", o.synthetic_speakers);
    o.voice_seed = cfg.get<std::uint64_t>("assets.voice_seed", o.voice_seed);
    return eval::load_scene_assets(o);
  }
};

struct ReportFlags {
  std::optional<std::string> out;
  std::vector<std::string> formats;

  void add_to(CLI::App* app) {
    app->add_option("--out", out, "report path prefix (extension added per format)");
    app->add_option("--format", formats, "json, csv, md (repeatable; default all)")
        ->delimiter(',');
  }

  void emit(const eval::Report& r, const Config& cfg, const std::string& section,
            const fs::path& fallback) const {
    const fs::path prefix = out ? fs::path(*out) : fs::path(cfg.get<std::string>(section + ".out", fallback.string()));
    auto fmts = formats.empty()
                    ? cfg.get<std::vector<std::string>>(section + ".formats", {"json", "csv", "md"})
                    : formats;
    for (const auto& f : fmts) {
      const auto format = eval::parse_report_format(f);
      const fs::path path = prefix.string() + eval::extension(format);
      eval::emit_report(r, format, path);
      std::printf("wrote %s\n", path.string().c_str());
    }
  }
};

std::unique_ptr<enroll::EmbeddingProvider> make_provider() { return enroll::default_spectral_provider(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming target speech hearing runtime and binaural scene simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  Config cfg;
  int workers_flag = -1;
  app.add_option("--workers", workers_flag, "worker threads (0: all cores)");
  auto workers = [&](const std::string& section) {
    return workers_flag >= 0 ? workers_flag
                             : cfg.get<int>(section + ".workers", cfg.get<int>("workers", 0));
  };

  // synth
  auto* synth = app.add_subcommand("synth", "render a scene dataset");
  std::string synth_out;
  std::optional<std::string> synth_specs;
  std::optional<std::size_t> synth_count;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_duration, synth_moving;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--specs", synth_specs, "directory of scene spec JSON files");
  synth->add_option("--count", synth_count, "number of random scenes");
  synth->add_option("--seed", synth_seed, "dataset seed");
  synth->add_option("--duration", synth_duration, "scene length in seconds");
  synth->add_option("--moving-fraction", synth_moving, "share of scenes with moving sources");
  AssetFlags synth_assets;
  synth_assets.add_to(synth);

  // enroll
  auto* enroll_cmd = app.add_subcommand("enroll", "compute a speaker embedding from an enrollment");
  std::string enroll_in, enroll_out;
  std::optional<double> enroll_window, enroll_hop;
  enroll_cmd->add_option("--in", enroll_in, "stereo 16 kHz enrollment WAV")->required();
  enroll_cmd->add_option("--out", enroll_out, "embedding JSON")->required();
  enroll_cmd->add_option("--window-s", enroll_window, "embedding window (s)");
  enroll_cmd->add_option("--hop-s", enroll_hop, "embedding hop (s)");

  // run
  auto* run = app.add_subcommand("run", "stream a stereo WAV through the network");
  std::string run_in, run_out, run_embedding;
  bool run_copy = false;
  run->add_option("--in", run_in, "stereo 16 kHz mixture WAV")->required();
  run->add_option("--embedding", run_embedding, "embedding JSON from `enroll`")->required();
  run->add_option("--out", run_out, "mono output WAV (delayed by the lookahead)")->required();
  run->add_flag("--copy-state", run_copy, "copy state buffers back after every chunk");
  ModelFlags run_model;
  run_model.add_to(run);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a dataset");
  std::string eval_dataset;
  std::optional<std::string> eval_estimator;
  std::optional<std::size_t> eval_max;
  ev->add_option("--dataset", eval_dataset, "dataset directory from `synth`")->required();
  ev->add_option("--estimator", eval_estimator, "model, identity or oracle");
  ev->add_option("--max-scenes", eval_max, "evaluate at most this many scenes");
  ModelFlags eval_model;
  eval_model.add_to(ev);
  ReportFlags eval_report;
  eval_report.add_to(ev);

  // sweep
  auto* sw = app.add_subcommand("sweep", "degradation sweep over one axis");
  std::optional<std::string> sweep_axis, sweep_estimator, sweep_write;
  std::vector<double> sweep_points;
  std::optional<std::size_t> sweep_n;
  std::optional<std::uint64_t> sweep_seed;
  std::optional<double> sweep_duration;
  sw->add_option("--axis", sweep_axis, "enrollment_duration, angle_error or angular_velocity");
  sw->add_option("--points", sweep_points, "axis values")->delimiter(',');
  sw->add_option("--scenes-per-point", sweep_n, "scenes per axis value");
  sw->add_option("--scene-seed", sweep_seed, "scene seed");
  sw->add_option("--duration", sweep_duration, "scene length in seconds");
  sw->add_option("--estimator", sweep_estimator, "model, identity or oracle");
  sw->add_option("--write-scenes", sweep_write, "also write the scenes to this directory");
  ModelFlags sweep_model;
  sweep_model.add_to(sw);
  AssetFlags sweep_assets;
  sweep_assets.add_to(sw);
  ReportFlags sweep_report;
  sweep_report.add_to(sw);

  // profile
  auto* prof = app.add_subcommand("profile", "per-chunk latency with and without cache copy");
  std::optional<int> prof_chunks, prof_warmup;
  bool prof_no_pin = false;
  prof->add_option("--chunks", prof_chunks, "measured chunks");
  prof->add_option("--warmup", prof_warmup, "discarded warmup chunks");
  prof->add_flag("--no-pin", prof_no_pin, "do not pin the thread to cpu 0");
  ModelFlags prof_model;
  prof_model.add_to(prof);
  ReportFlags prof_report;
  prof_report.add_to(prof);

  // model-info
  auto* info = app.add_subcommand("model-info", "parameter count and config hash");
  bool info_tensors = false;
  info->add_flag("--tensors", info_tensors, "list tensor names and shapes");
  ModelFlags info_model;
  info_model.add_to(info);

  // helpers
  auto* pack = app.add_subcommand("brir-pack", "export the synthetic BRIR pack with a manifest");
  std::string pack_out;
  double pack_grid = 10.0;
  pack->add_option("--out", pack_out, "output directory")->required();
  pack->add_option("--grid-deg", pack_grid, "sphere grid spacing in degrees");

  auto* savew = app.add_subcommand("save-weights", "write randomly initialised weights");
  std::string savew_out;
  savew->add_option("--out", savew_out, "manifest path (.json; blob written beside it)")->required();
  ModelFlags savew_model;
  savew_model.add_to(savew);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (!config_path.empty()) cfg.load(config_path);

    if (synth->parsed()) {
      const auto assets = synth_assets.load(cfg);
      std::vector<scene::SceneSpec> specs;
      const auto spec_dir = synth_specs ? synth_specs
                                        : cfg.opt_string("synth.specs");
      if (spec_dir) {
        specs = eval::load_scene_specs(*spec_dir);
      } else {
        eval::DatasetOptions o;
        o.count = pick(synth_count, cfg, "synth.count", o.count);
        o.seed = pick(synth_seed, cfg, "synth.seed", o.seed);
        o.duration_s = pick(synth_duration, cfg, "synth.duration_s", o.duration_s);
        o.moving_fraction = pick(synth_moving, cfg, "synth.moving_fraction", o.moving_fraction);
        specs = eval::dataset_specs(o);
      }
      const auto dirs = eval::synthesize_dataset(synth_out, specs, assets, workers("synth"));
      std::printf("wrote %zu scenes to %s\n", dirs.size(), synth_out.c_str());
    } else if (enroll_cmd->parsed()) {
      const auto clip = io::read_wav(enroll_in).binaural();
      const auto provider = make_provider();
      io::EmbeddingFile f;
      f.embedding = enroll::embed_enrollment(
          clip, *provider, pick(enroll_window, cfg, "enroll.window_s", enroll::kDefaultWindowS),
          pick(enroll_hop, cfg, "enroll.hop_s", enroll::kDefaultHopS));
      f.provider = provider->descriptor();
      f.source_hash = enroll::audio_hash(clip);
      io::save_embedding(enroll_out, f);
      std::printf("wrote %s (%s)\n", enroll_out.c_str(), f.provider.c_str());
    } else if (run->parsed()) {
      const auto model = run_model.build(cfg);
      const auto input = io::read_wav(run_in).binaural();
      const auto emb = io::load_embedding(run_embedding);
      const auto cond = model.condition(emb.embedding);
      const auto mode = run_copy || cfg.get<bool>("run.copy_state", false)
                            ? engine::StateUpdate::Copy
                            : engine::StateUpdate::InPlace;
      Mono out = engine::run_stream(model, input, cond, /*flush=*/true, mode);
      out.resize(input.size() + model.config().audio.lookahead_len);
      io::write_wav(run_out, out);
      std::printf("wrote %s (%zu samples, delay %d samples)\n", run_out.c_str(), out.size(),
                  model.config().audio.lookahead_len);
    } else if (ev->parsed()) {
      eval::EvalContext ctx;
      ctx.estimator = eval::parse_estimator(pick(eval_estimator, cfg, "eval.estimator", std::string("model")));
      const auto provider = make_provider();
      ctx.provider = provider.get();
      std::optional<engine::Model> model;
      if (ctx.estimator == eval::Estimator::Model) {
        model.emplace(eval_model.build(cfg));
        ctx.model = &*model;
      }
      eval::EvalOptions o;
      o.workers = workers("eval");
      o.max_scenes = pick(eval_max, cfg, "eval.max_scenes", std::size_t{0});
      const auto report = eval::run_eval(eval_dataset, ctx, o);
      std::printf("%s", eval::to_markdown(report).c_str());
      eval_report.emit(report, cfg, "eval", fs::path(eval_dataset) / "report");
    } else if (sw->parsed()) {
      eval::SweepOptions o;
      o.axis = eval::parse_sweep_axis(pick(sweep_axis, cfg, "sweep.axis", std::string("enrollment_duration")));
      o.points = sweep_points.empty() ? cfg.get<std::vector<double>>("sweep.points", {}) : sweep_points;
      o.scenes_per_point = pick(sweep_n, cfg, "sweep.scenes_per_point", o.scenes_per_point);
      o.seed = pick(sweep_seed, cfg, "sweep.seed", o.seed);
      o.scene_duration_s = pick(sweep_duration, cfg, "sweep.duration_s", o.scene_duration_s);
      o.workers = workers("sweep");
      if (sweep_write) o.write_dir = *sweep_write;
      eval::EvalContext ctx;
      ctx.estimator = eval::parse_estimator(pick(sweep_estimator, cfg, "sweep.estimator", std::string("model")));
      const auto provider = make_provider();
      ctx.provider = provider.get();
      // Validate the axis points before the (slow) model build.
      for (double p : o.points) eval::sweep_scene_spec(o.axis, p, o.seed, 0, o.scene_duration_s);
      std::optional<engine::Model> model;
      if (ctx.estimator == eval::Estimator::Model) {
        model.emplace(sweep_model.build(cfg));
        ctx.model = &*model;
      }
      const auto assets = sweep_assets.load(cfg);
      const auto report = eval::sweep(assets, ctx, o);
      std::printf("%s", eval::to_markdown(report).c_str());
      sweep_report.emit(report, cfg, "sweep", fs::path("sweep_" + eval::to_string(o.axis)));
    } else if (prof->parsed()) {
      const auto model = prof_model.build(cfg);
      eval::LatencyOptions o;
      o.chunks = pick(prof_chunks, cfg, "profile.chunks", o.chunks);
      o.profile.warmup_chunks = pick(prof_warmup, cfg, "profile.warmup", o.profile.warmup_chunks);
      o.profile.pin_thread = !(prof_no_pin || cfg.get<bool>("profile.no_pin", false));
      if (o.profile.warmup_chunks < 0) throw ConfigError("--warmup must be >= 0");
      const auto report = eval::latency_report(model, o);
      std::printf("%s", eval::to_markdown(report).c_str());
      for (const auto& t : report.timings) {
        std::printf("%s: %.2f ms buffering + %.2f ms lookahead + %.3f ms processing (p95) = "
                    "%.3f ms end-to-end (reference %.2f ms); mean %.3f ms per %.0f ms chunk\n",
                    t.label.c_str(), t.latency.buffering_ms, t.latency.lookahead_ms,
                    t.latency.processing_ms, t.latency.total_ms, t.latency.reference_ms,
                    t.mean_ms, t.deadline_ms);
      }
      prof_report.emit(report, cfg, "profile", fs::path("profile"));
    } else if (info->parsed()) {
      const auto model = info_model.build(cfg);
      const auto& c = model.config();
      std::printf("parameters: %lld\n", static_cast<long long>(model.parameter_count()));
      std::printf("config_hash: %s\n", c.hash().c_str());
      std::printf("config: %s\n", engine::to_json(c).dump().c_str());
      std::printf("chunk: %d samples (%.2f ms), lookahead: %d samples (%.2f ms), bins: %d\n",
                  c.audio.chunk_len, c.audio.chunk_ms(), c.audio.lookahead_len,
                  c.audio.lookahead_ms(), c.freq_bins());
      if (info_tensors) {
        for (const auto& [name, shape] : model.parameter_shapes()) {
          std::string dims;
          for (auto d : shape) dims += (dims.empty() ? "" : "x") + std::to_string(d);
          std::printf("  %s [%s]\n", name.c_str(), dims.c_str());
        }
      }
    } else if (pack->parsed()) {
      const auto manifest = io::save_brir_library(scene::make_synthetic_library(pack_grid), pack_out);
      std::printf("wrote %s\n", manifest.string().c_str());
    } else if (savew->parsed()) {
      const auto model = savew_model.build(cfg);
      engine::save_weight_archive(model.to_archive(), savew_out);
      std::printf("wrote %s (%lld parameters, config %s)\n", savew_out.c_str(),
                  static_cast<long long>(model.parameter_count()), model.config().hash().c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const NumericFault& e) {
    std::fprintf(stderr, "numeric fault at chunk %lld: %s\n",
                 static_cast<long long>(e.chunk_index()), e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
