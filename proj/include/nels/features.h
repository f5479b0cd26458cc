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

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "nels/audio.h"

namespace nels {

inline constexpr int kFftSize = 1024;
inline constexpr int kHopSize = 512;
inline constexpr int kMelBands = 60;
inline constexpr double kLogFloor = 1e-10;
// 1 + floor((101430 - 1024) / 512)
inline constexpr std::size_t kSegmentFrames = 197;

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Frames produced for n samples with no centre padding (0 when n < frame).
std::size_t frame_count(std::size_t n_samples, std::size_t frame = kFftSize,
                        std::size_t hop = kHopSize);

// Triangular filters on the HTK mel scale, equally spaced in mel between
// 0 Hz and Nyquist, each row scaled to a peak of exactly 1.
class MelFilterbank {
 public:
  MelFilterbank(int n_fft = kFftSize, int n_mels = kMelBands, int sample_rate = kCanonicalSampleRate);

  int n_fft() const { return n_fft_; }
  int n_mels() const { return n_mels_; }
  int n_bins() const { return n_fft_ / 2 + 1; }
  int sample_rate() const { return sample_rate_; }

  double weight(int mel, int bin) const {
    return weights_[std::size_t(mel) * std::size_t(n_bins()) + std::size_t(bin)];
  }
  std::span<const double> row(int mel) const {
    return {weights_.data() + std::size_t(mel) * std::size_t(n_bins()), std::size_t(n_bins())};
  }
  // n_mels + 2 breakpoints on the mel axis.
  const std::vector<double>& mel_breakpoints() const { return breakpoints_; }
  double center_hz(int mel) const { return mel_to_hz(breakpoints_[std::size_t(mel) + 1]); }
  // First and one-past-last nonzero bin of each row.
  std::pair<int, int> support(int mel) const { return support_[std::size_t(mel)]; }

  // Filter index whose centre frequency is closest to hz.
  int nearest_band(double hz) const;

 private:
  int n_fft_;
  int n_mels_;
  int sample_rate_;
  std::vector<double> breakpoints_;
  std::vector<double> weights_;
  std::vector<std::pair<int, int>> support_;
};

// 60 x T log10 mel energies, stored band-major.
struct FeatureMatrix {
  int mel_bands = 0;
  std::size_t frames = 0;
  std::vector<double> values;

  double at(int band, std::size_t frame) const {
    return values[std::size_t(band) * frames + frame];
  }
  double& at(int band, std::size_t frame) { return values[std::size_t(band) * frames + frame]; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// Hann-windowed power spectra (frame 1024, hop 512, no centre padding)
// projected on the mel filterbank, then log10 after flooring at 1e-10.
// Immutable after construction; compute() may be called from any thread.
class LogMelExtractor {
 public:
  explicit LogMelExtractor(MelFilterbank filterbank = MelFilterbank(), int hop = kHopSize);
  ~LogMelExtractor();
  LogMelExtractor(const LogMelExtractor&) = delete;
  LogMelExtractor& operator=(const LogMelExtractor&) = delete;

  const MelFilterbank& filterbank() const { return filterbank_; }
  const std::vector<double>& window() const { return window_; }

  // Any number of samples >= the frame size.
  FeatureMatrix compute(std::span<const double> samples) const;

  // Power spectrum of one frame (n_fft/2 + 1 bins), window applied.
  std::vector<double> power_spectrum(std::span<const double> frame) const;

 private:
  struct Plan;

  MelFilterbank filterbank_;
  int hop_;
  std::vector<double> window_;
  std::unique_ptr<Plan> plan_;
};

// Process-wide default extractor (built on first use).
const LogMelExtractor& default_extractor();

// Features of one canonical 2.3 s segment: 60 x 197.
FeatureMatrix log_mel_features(const AudioSegment& seg);
FeatureMatrix log_mel_features(const AudioSegment& seg, const LogMelExtractor& extractor);

// Matrix file: "melspec <bands> <frames>" then one line per frame.
void write_feature_matrix(std::ostream& out, const FeatureMatrix& fm);
FeatureMatrix read_feature_matrix(std::istream& in);

}  // namespace nels
