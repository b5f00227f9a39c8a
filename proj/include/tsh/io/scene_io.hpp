#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tsh/scene/scene.hpp"

namespace tsh::io {

/// File names inside one scene folder.
inline constexpr const char* kMixtureFile = "mixture.wav";
inline constexpr const char* kTargetFile = "target.wav";
inline constexpr const char* kEnrollFile = "enroll.wav";
inline constexpr const char* kEnrollTargetFile = "enroll_target.wav";
inline constexpr const char* kMetaFile = "meta.json";

/// Writes mixture.wav and target.wav (stereo), enroll.wav (stereo noisy
/// enrollment), enroll_target.wav (clean spatialised target of the
/// enrollment) and meta.json holding the spec and both scene metas.
void write_scene_folder(const std::filesystem::path& dir, const scene::SceneSpec& spec,
                        const scene::RenderedScene& mixture,
                        const scene::RenderedScene& enrollment);

struct SceneFolder {
  std::filesystem::path dir;
  std::string id;
  BinauralBuffer mixture;
  BinauralBuffer target;
  BinauralBuffer enroll;
  std::optional<BinauralBuffer> enroll_target;
  nlohmann::json meta;
};

/// Throws DataError naming the first missing or corrupt file.
SceneFolder read_scene_folder(const std::filesystem::path& dir);

/// Scene folders (subdirectories holding meta.json) sorted by name.
std::vector<std::filesystem::path> list_scene_folders(const std::filesystem::path& root);

}  // namespace tsh::io
