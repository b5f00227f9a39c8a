#include "tsh/eval/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "tsh/io/brir_manifest.hpp"
#include "tsh/io/json_file.hpp"
#include "tsh/io/scene_io.hpp"
#include "tsh/scene/corpus.hpp"

namespace tsh::eval {

SceneAssets load_scene_assets(const AssetOptions& opts) {
  SceneAssets a;
  a.library = std::make_shared<const scene::BrirLibrary>(
      opts.brir_manifest ? io::load_brir_manifest(*opts.brir_manifest)
                         : scene::make_synthetic_library(opts.brir_grid_deg));
  if (opts.speech_dir) {
    a.speech = std::make_shared<const scene::WavDirectoryCorpus>(*opts.speech_dir);
  } else {
    a.speech =
        std::make_shared<const scene::SyntheticVoiceCorpus>(opts.synthetic_speakers, opts.voice_seed);
  }
  if (opts.noise_dir) {
    a.noise = std::make_shared<const scene::WavDirectoryNoiseCorpus>(*opts.noise_dir);
  } else {
    a.noise = std::make_shared<const scene::SyntheticNoiseCorpus>();
  }
  return a;
}

std::vector<scene::SceneSpec> dataset_specs(const DatasetOptions& opts) {
  if (!(opts.duration_s > 0.0)) throw ConfigError("scene duration must be > 0");
  if (opts.moving_fraction < 0.0 || opts.moving_fraction > 1.0) {
    throw ConfigError("moving fraction must lie in [0, 1]");
  }
  Rng rng(opts.seed);
  std::vector<scene::SceneSpec> specs;
  specs.reserve(opts.count);
  for (std::size_t i = 0; i < opts.count; ++i) {
    const std::uint64_t child = rng.fork();
    const bool moving = rng.uniform() < opts.moving_fraction;
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%05zu", i);
    auto spec = scene::random_scene_spec(child, id, moving);
    spec.duration_s = opts.duration_s;
    specs.push_back(std::move(spec));
  }
  return specs;
}

void synthesize_scene(const std::filesystem::path& dir, const scene::SceneSpec& spec,
                      const SceneAssets& assets) {
  const auto corpora = assets.corpora();
  const auto mixture = scene::compose_scene(spec, *assets.library, corpora);
  const auto enrollment = scene::make_enrollment_scene(spec, *assets.library, corpora);
  io::write_scene_folder(dir, spec, mixture, enrollment);
}

std::vector<std::filesystem::path> synthesize_dataset(const std::filesystem::path& root,
                                                      const std::vector<scene::SceneSpec>& specs,
                                                      const SceneAssets& assets, int workers) {
  std::vector<std::filesystem::path> dirs(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].id.empty() || specs[i].id.find('/') != std::string::npos) {
      throw ConfigError("scene id '" + specs[i].id + "' is not a valid folder name");
    }
    dirs[i] = root / specs[i].id;
  }
  std::filesystem::create_directories(root);
  parallel_for(specs.size(), workers, [&](std::size_t i) { synthesize_scene(dirs[i], specs[i], assets); });
  return dirs;
}

std::vector<scene::SceneSpec> load_scene_specs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("spec directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no *.json scene specs in " + dir.string());
  std::vector<scene::SceneSpec> specs;
  for (const auto& f : files) {
    try {
      auto spec = scene::scene_spec_from_json(io::read_json_file(f));
      if (spec.id == "scene") spec.id = f.stem().string();
      specs.push_back(std::move(spec));
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
  }
  return specs;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t w = workers > 0 ? static_cast<std::size_t>(workers)
                              : std::max(1u, std::thread::hardware_concurrency());
  w = std::min(w, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; !stop && (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace tsh::eval
