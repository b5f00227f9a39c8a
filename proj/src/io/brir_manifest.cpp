#include "tsh/io/brir_manifest.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "tsh/io/json_file.hpp"
#include "tsh/io/wav.hpp"

namespace tsh::io {

namespace {

constexpr const char* kFormat = "tsh-brir-manifest";

BrirManifestEntry entry_from_json(const nlohmann::json& e, std::size_t index) {
  const std::string where = "BRIR manifest entry " + std::to_string(index);
  if (!e.is_object()) throw ParseError(where + " is not an object");
  for (const char* key : {"id", "azimuth_deg", "polar_deg", "wav_path"}) {
    if (!e.contains(key)) throw ParseError(where + " lacks '" + key + "'");
  }
  if (!e["id"].is_string() || !e["wav_path"].is_string()) {
    throw ParseError(where + ": id and wav_path must be strings");
  }
  if (!e["azimuth_deg"].is_number() || !e["polar_deg"].is_number()) {
    throw ParseError(where + ": angles must be numbers");
  }
  BrirManifestEntry out;
  out.id = e["id"].get<std::string>();
  out.azimuth_deg = e["azimuth_deg"].get<double>();
  out.polar_deg = e["polar_deg"].get<double>();
  out.wav_path = e["wav_path"].get<std::string>();
  if (out.id.empty()) throw ParseError(where + ": empty id");
  if (!std::isfinite(out.azimuth_deg) || out.azimuth_deg < 0.0 || out.azimuth_deg >= 360.0) {
    throw ParseError(where + ": azimuth_deg must lie in [0, 360)");
  }
  if (!std::isfinite(out.polar_deg) || out.polar_deg < 0.0 || out.polar_deg > 180.0) {
    throw ParseError(where + ": polar_deg must lie in [0, 180]");
  }
  return out;
}

std::string entry_file_name(const scene::BrirEntry& e) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "az%06.2f_pol%06.2f.wav", e.azimuth_deg, e.polar_deg);
  return buf;
}

}  // namespace

std::vector<BrirManifestEntry> parse_brir_manifest(const nlohmann::json& j) {
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    if (j.contains("format") && j["format"] != kFormat) {
      throw ParseError("not a BRIR manifest (format " + j["format"].dump() + ")");
    }
    if (!j.contains("entries")) throw ParseError("BRIR manifest lacks 'entries'");
    list = &j["entries"];
  }
  if (!list->is_array()) throw ParseError("BRIR manifest entries must be an array");
  if (list->empty()) throw DataError("BRIR manifest is empty");
  std::vector<BrirManifestEntry> out;
  out.reserve(list->size());
  for (std::size_t i = 0; i < list->size(); ++i) out.push_back(entry_from_json((*list)[i], i));
  return out;
}

nlohmann::json to_json(const std::vector<BrirManifestEntry>& entries) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    list.push_back({{"id", e.id},
                    {"azimuth_deg", e.azimuth_deg},
                    {"polar_deg", e.polar_deg},
                    {"wav_path", e.wav_path}});
  }
  return {{"format", kFormat}, {"version", 1}, {"entries", list}};
}

scene::BrirLibrary load_brir_manifest(const std::filesystem::path& manifest) {
  const auto rows = parse_brir_manifest(read_json_file(manifest));
  const auto base = manifest.parent_path();
  std::map<std::string, std::vector<scene::BrirEntry>> grouped;
  for (const auto& row : rows) {
    std::filesystem::path wav = row.wav_path;
    if (wav.is_relative()) wav = base / wav;
    if (!std::filesystem::exists(wav)) {
      throw DataError("BRIR manifest references missing file " + wav.string());
    }
    const WavData data = read_wav(wav);
    if (data.spec.channels != 2) {
      throw UnsupportedFormat("BRIR " + wav.string() + " must be stereo");
    }
    scene::BrirEntry e;
    e.room_id = row.id;
    e.azimuth_deg = row.azimuth_deg;
    e.polar_deg = row.polar_deg;
    e.impulse = data.binaural();
    grouped[row.id].push_back(std::move(e));
  }
  scene::BrirLibrary library;
  for (auto& [id, entries] : grouped) {
    try {
      library.add(std::make_shared<const scene::BrirSet>(std::move(entries)));
    } catch (const DataError& err) {
      throw DataError(manifest.string() + ": room '" + id + "': " + err.what());
    }
  }
  return library;
}

std::filesystem::path save_brir_library(const scene::BrirLibrary& library,
                                        const std::filesystem::path& dir) {
  std::vector<BrirManifestEntry> rows;
  for (const auto& id : library.room_ids()) {
    const auto& set = library.at(id);
    std::filesystem::create_directories(dir / id);
    for (const auto& e : set.entries()) {
      const std::string rel = id + "/" + entry_file_name(e);
      write_wav(dir / rel, e.impulse, WavEncoding::Float32);
      rows.push_back({id, e.azimuth_deg, e.polar_deg, rel});
    }
  }
  const auto manifest = dir / "manifest.json";
  write_json_file(manifest, to_json(rows));
  return manifest;
}

}  // namespace tsh::io
