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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace nels {

// Decoded multichannel audio at its native rate. Samples are in [-1, 1].
struct DecodedAudio {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

// RIFF/WAVE decoder for PCM 8/16/24/32-bit and IEEE float 32/64-bit,
// including WAVE_FORMAT_EXTENSIBLE. Throws InvalidAudioError.
DecodedAudio decode_wav(std::span<const std::uint8_t> bytes);
DecodedAudio read_wav(const std::filesystem::path& path);

// 16-bit PCM encoder. Values outside [-1, 1] are clamped.
std::vector<std::uint8_t> encode_wav_pcm16(const DecodedAudio& audio);
void write_wav_pcm16(const std::filesystem::path& path, const DecodedAudio& audio);

}  // namespace nels
