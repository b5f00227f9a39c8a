#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsh/common.hpp"

namespace tsh::io {

enum class WavEncoding { Int16, Float32 };

struct WavSpec {
  int sample_rate = kSampleRate;
  int channels = 1;
  WavEncoding encoding = WavEncoding::Float32;

  bool operator==(const WavSpec&) const = default;
};

class UnsupportedFormat : public DataError {
 public:
  using DataError::DataError;
};

struct WavData {
  WavSpec spec;
  std::vector<Mono> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
  /// Requires exactly two channels.
  BinauralBuffer binaural() const;
  /// Requires exactly one channel.
  const Mono& mono() const;
};

struct WriteResult {
  /// Samples that fell outside [-1, 1) and were saturated (int16 only).
  std::size_t clipped = 0;
};

WavData decode_wav(std::span<const std::uint8_t> bytes);
WavData read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(std::span<const Mono> channels, const WavSpec& spec,
                                     WriteResult* result = nullptr);
WriteResult write_wav(const std::filesystem::path& path, std::span<const Mono> channels,
                      const WavSpec& spec);
WriteResult write_wav(const std::filesystem::path& path, const BinauralBuffer& buffer,
                      WavEncoding encoding = WavEncoding::Float32);
WriteResult write_wav(const std::filesystem::path& path, const Mono& mono,
                      WavEncoding encoding = WavEncoding::Float32);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tsh::io
