#pragma once

#include <filesystem>

#include <json.hpp>

namespace tsh::io {

/// Reads a JSON document, mapping I/O failures to DataError and syntax
/// errors to ParseError.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed (indent 2) with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace tsh::io
