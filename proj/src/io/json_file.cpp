#include "tsh/io/json_file.hpp"

#include "tsh/common.hpp"
#include "tsh/io/wav.hpp"

namespace tsh::io {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace tsh::io
