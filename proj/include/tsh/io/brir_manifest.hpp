#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsh/scene/brir.hpp"

namespace tsh::io {

/// One manifest row. `wav_path` is relative to the manifest directory
/// unless absolute.
struct BrirManifestEntry {
  std::string id;  ///< room/subject configuration id
  double azimuth_deg = 0.0;
  double polar_deg = 90.0;
  std::string wav_path;
};

/// Parses manifest JSON: either a bare array of entries or an object with an
/// "entries" array. Throws ParseError on schema violations and DataError on
/// an empty list.
std::vector<BrirManifestEntry> parse_brir_manifest(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<BrirManifestEntry>& entries);

/// Loads every WAV (stereo, 16 kHz) and groups entries by id. Missing files,
/// duplicate angles within an id and empty manifests raise DataError.
scene::BrirLibrary load_brir_manifest(const std::filesystem::path& manifest);

/// Writes one float32 stereo WAV per entry under `<dir>/<room>/` and
/// `<dir>/manifest.json`. Returns the manifest path.
std::filesystem::path save_brir_library(const scene::BrirLibrary& library,
                                        const std::filesystem::path& dir);

}  // namespace tsh::io
