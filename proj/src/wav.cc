// Copyright (c) 2026 The NELS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nels/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "nels/errors.h"

namespace nels {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t le16(const std::uint8_t* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

double decode_sample(const std::uint8_t* p, std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::uint32_t u = le32(p);
      std::memcpy(&f, &u, 4);
      return f;
    }
    std::uint64_t u = std::uint64_t(le32(p)) | std::uint64_t(le32(p + 4)) << 32;
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  switch (bits) {
    case 8: return (double(p[0]) - 128.0) / 128.0;
    case 16: return double(std::int16_t(le16(p))) / 32768.0;
    case 24: {
      std::int32_t v = std::int32_t(std::uint32_t(p[0]) << 8 | std::uint32_t(p[1]) << 16 |
                                    std::uint32_t(p[2]) << 24) >> 8;
      return double(v) / 8388608.0;
    }
    default: return double(std::int32_t(le32(p))) / 2147483648.0;
  }
}

}  // namespace

DecodedAudio decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw InvalidAudioError("not a RIFF/WAVE stream");

  std::uint16_t format = 0;
  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    std::size_t size = le32(hdr + 4);
    std::size_t body = pos + 8;
    std::size_t avail = bytes.size() - body;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw InvalidAudioError("truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      sample_rate = static_cast<int>(le32(f + 4));
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw InvalidAudioError("truncated extensible fmt chunk");
        format = le16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      // Streaming writers sometimes leave the size unset; clip to what exists.
      data = bytes.subspan(body, std::min(size, avail));
      have_data = true;
      break;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt || !have_data) throw InvalidAudioError("missing fmt or data chunk");
  if (format != kFormatPcm && format != kFormatFloat)
    throw InvalidAudioError("unsupported WAV format tag " + std::to_string(format));
  const bool bits_ok = format == kFormatPcm ? (bits == 8 || bits == 16 || bits == 24 || bits == 32)
                                            : (bits == 32 || bits == 64);
  if (!bits_ok) throw InvalidAudioError("unsupported bit depth " + std::to_string(bits));
  if (channels < 1) throw InvalidAudioError("WAV has no channels");
  if (sample_rate <= 0) throw InvalidAudioError("WAV has unknown sample rate");

  const std::size_t stride = std::size_t(bits / 8) * std::size_t(channels);
  const std::size_t frames = data.size() / stride;

  DecodedAudio out;
  out.sample_rate = sample_rate;
  out.channels.assign(std::size_t(channels), std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data.data() + i * stride;
    for (int c = 0; c < channels; ++c)
      out.channels[std::size_t(c)][i] = decode_sample(frame + std::size_t(c) * (bits / 8), format, bits);
  }
  return out;
}

DecodedAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidAudioError("cannot open audio file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav_pcm16(const DecodedAudio& audio) {
  if (audio.channels.empty() || audio.sample_rate <= 0)
    throw InvalidAudioError("cannot encode empty audio");
  const auto channels = static_cast<std::uint16_t>(audio.channels.size());
  const std::size_t frames = audio.frames();
  const std::uint32_t data_size = static_cast<std::uint32_t>(frames * channels * 2);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, channels);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate) * channels * 2);
  put16(out, static_cast<std::uint16_t>(channels * 2));
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_size);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : audio.channels) {
      const double v = std::clamp(ch[i], -1.0, 1.0);
      const auto q = static_cast<std::int16_t>(std::lround(std::clamp(v * 32768.0, -32768.0, 32767.0)));
      put16(out, static_cast<std::uint16_t>(q));
    }
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path, const DecodedAudio& audio) {
  const auto bytes = encode_wav_pcm16(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StorageError("cannot write audio file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StorageError("short write: " + path.string());
}

}  // namespace nels
