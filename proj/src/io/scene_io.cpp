#include "tsh/io/scene_io.hpp"

#include <algorithm>

#include "tsh/io/json_file.hpp"
#include "tsh/io/wav.hpp"

namespace tsh::io {

namespace {

BinauralBuffer read_stereo(const std::filesystem::path& path) {
  const WavData d = read_wav(path);
  if (d.spec.channels != 2) throw UnsupportedFormat(path.string() + " must be stereo");
  return d.binaural();
}

}  // namespace

void write_scene_folder(const std::filesystem::path& dir, const scene::SceneSpec& spec,
                        const scene::RenderedScene& mixture,
                        const scene::RenderedScene& enrollment) {
  std::filesystem::create_directories(dir);
  write_wav(dir / kMixtureFile, mixture.mixture);
  write_wav(dir / kTargetFile, mixture.target_gt);
  write_wav(dir / kEnrollFile, enrollment.mixture);
  write_wav(dir / kEnrollTargetFile, enrollment.target_gt);
  nlohmann::json meta = {{"schema_version", 1},
                         {"id", spec.id},
                         {"seed", spec.seed},
                         {"spec", scene::to_json(spec)},
                         {"mixture", scene::to_json(mixture.meta)},
                         {"enrollment", scene::to_json(enrollment.meta)}};
  write_json_file(dir / kMetaFile, meta);
}

SceneFolder read_scene_folder(const std::filesystem::path& dir) {
  SceneFolder f;
  f.dir = dir;
  f.meta = read_json_file(dir / kMetaFile);
  f.id = f.meta.is_object() && f.meta.contains("id") && f.meta["id"].is_string()
             ? f.meta["id"].get<std::string>()
             : dir.filename().string();
  f.mixture = read_stereo(dir / kMixtureFile);
  f.target = read_stereo(dir / kTargetFile);
  f.enroll = read_stereo(dir / kEnrollFile);
  if (std::filesystem::exists(dir / kEnrollTargetFile)) {
    f.enroll_target = read_stereo(dir / kEnrollTargetFile);
  }
  if (f.mixture.size() != f.target.size()) {
    throw DataError(dir.string() + ": mixture and target lengths differ");
  }
  return f;
}

std::vector<std::filesystem::path> list_scene_folders(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw DataError("dataset directory " + root.string() + " does not exist");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / kMetaFile)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tsh::io
