#include "tsh/io/wav.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tsh::io {

static_assert(std::endian::native == std::endian::little,
              "asset I/O assumes a little-endian host; big-endian is refused, not converted");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t rd16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t rd32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
void puttag(std::vector<std::uint8_t>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

}  // namespace

BinauralBuffer WavData::binaural() const {
  if (channels.size() != 2) {
    throw UnsupportedFormat("expected a stereo WAV, got " + std::to_string(channels.size()) +
                            " channel(s)");
  }
  return BinauralBuffer(channels[0], channels[1]);
}

const Mono& WavData::mono() const {
  if (channels.size() != 1) {
    throw UnsupportedFormat("expected a mono WAV, got " + std::to_string(channels.size()) +
                            " channels");
  }
  return channels[0];
}

WavData decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ParseError("WAV truncated: missing RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ParseError("not a RIFF/WAVE file (bad magic)");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = rd32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw ParseError("WAV truncated in fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = rd16(f);
      channels = rd16(f + 2);
      rate = rd32(f + 4);
      bits = rd16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw ParseError("WAVE_FORMAT_EXTENSIBLE fmt chunk too short");
        format = rd16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (body + size > bytes.size()) throw ParseError("WAV truncated in data chunk");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw ParseError("WAV has no fmt chunk");
  if (data == nullptr) throw ParseError("WAV has no data chunk (or it is truncated)");

  WavData out;
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw UnsupportedFormat("unsupported sample rate " + std::to_string(rate) +
                            " Hz (only 16000 Hz; no resampling is performed)");
  }
  if (channels != 1 && channels != 2) {
    throw UnsupportedFormat("unsupported channel count " + std::to_string(channels));
  }
  if (format == kFormatPcm && bits == 16) {
    out.spec.encoding = WavEncoding::Int16;
  } else if (format == kFormatFloat && bits == 32) {
    out.spec.encoding = WavEncoding::Float32;
  } else {
    throw UnsupportedFormat("unsupported encoding (format " + std::to_string(format) + ", " +
                            std::to_string(bits) + " bits)");
  }
  out.spec.sample_rate = static_cast<int>(rate);
  out.spec.channels = channels;

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (data_size % frame_bytes != 0) throw ParseError("WAV data chunk ends mid-frame");
  const std::size_t frames = data_size / frame_bytes;
  out.channels.assign(channels, Mono(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + i * frame_bytes + c * bytes_per_sample;
      if (out.spec.encoding == WavEncoding::Int16) {
        const auto v = static_cast<std::int16_t>(rd16(p));
        out.channels[c][i] = static_cast<float>(v) / 32768.0f;
      } else {
        out.channels[c][i] = std::bit_cast<float>(rd32(p));
      }
    }
  }
  return out;
}

WavData read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_wav(bytes);
  } catch (const DataError& e) {
    // Keep the concrete type; add the path.
    if (dynamic_cast<const UnsupportedFormat*>(&e)) {
      throw UnsupportedFormat(path.string() + ": " + e.what());
    }
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(std::span<const Mono> channels, const WavSpec& spec,
                                     WriteResult* result) {
  if (spec.sample_rate != kSampleRate) throw UnsupportedFormat("only 16000 Hz output is supported");
  if (spec.channels != 1 && spec.channels != 2) {
    throw UnsupportedFormat("only mono or stereo output is supported");
  }
  if (channels.size() != static_cast<std::size_t>(spec.channels)) {
    throw SizeMismatch("channel count does not match WavSpec");
  }
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != frames) throw SizeMismatch("WAV channels differ in length");
  }

  const bool is_float = spec.encoding == WavEncoding::Float32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint16_t block = static_cast<std::uint16_t>(spec.channels * bits / 8);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * block);

  std::vector<std::uint8_t> b;
  b.reserve(44 + data_bytes);
  puttag(b, "RIFF");
  put32(b, 36 + data_bytes);
  puttag(b, "WAVE");
  puttag(b, "fmt ");
  put32(b, 16);
  put16(b, is_float ? kFormatFloat : kFormatPcm);
  put16(b, static_cast<std::uint16_t>(spec.channels));
  put32(b, static_cast<std::uint32_t>(spec.sample_rate));
  put32(b, static_cast<std::uint32_t>(spec.sample_rate) * block);
  put16(b, block);
  put16(b, bits);
  puttag(b, "data");
  put32(b, data_bytes);

  std::size_t clipped = 0;
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : channels) {
      const float v = ch[i];
      if (is_float) {
        put32(b, std::bit_cast<std::uint32_t>(v));
      } else {
        const double scaled = std::round(static_cast<double>(v) * 32768.0);
        std::int32_t q = static_cast<std::int32_t>(scaled);
        if (!std::isfinite(v) || scaled > 32767.0 || scaled < -32768.0) {
          ++clipped;
          q = (!std::isfinite(v)) ? 0 : (scaled > 0 ? 32767 : -32768);
        }
        put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      }
    }
  }
  if (result) result->clipped = clipped;
  return b;
}

WriteResult write_wav(const std::filesystem::path& path, std::span<const Mono> channels,
                      const WavSpec& spec) {
  WriteResult r;
  const auto bytes = encode_wav(channels, spec, &r);
  write_file_bytes(path, bytes);
  return r;
}

WriteResult write_wav(const std::filesystem::path& path, const BinauralBuffer& buffer,
                      WavEncoding encoding) {
  const std::vector<Mono> ch{buffer.left, buffer.right};
  return write_wav(path, ch, WavSpec{kSampleRate, 2, encoding});
}

WriteResult write_wav(const std::filesystem::path& path, const Mono& mono, WavEncoding encoding) {
  return write_wav(path, std::span<const Mono>(&mono, 1), WavSpec{kSampleRate, 1, encoding});
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw DataError("failed reading " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace tsh::io
