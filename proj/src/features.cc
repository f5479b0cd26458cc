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

#include "nels/features.h"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "nels/errors.h"

namespace nels {

namespace {

// FFTW's planner is not thread-safe; execution on fresh buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_count(std::size_t n_samples, std::size_t frame, std::size_t hop) {
  if (n_samples < frame) return 0;
  return 1 + (n_samples - frame) / hop;
}

MelFilterbank::MelFilterbank(int n_fft, int n_mels, int sample_rate)
    : n_fft_(n_fft), n_mels_(n_mels), sample_rate_(sample_rate) {
  if (n_mels < 1) throw ConfigError("mel filterbank needs at least one band");
  if (n_fft < 2 || !std::has_single_bit(static_cast<unsigned>(n_fft)))
    throw ConfigError("FFT size must be a power of two, got " + std::to_string(n_fft));
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");

  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  breakpoints_.resize(std::size_t(n_mels) + 2);
  for (std::size_t i = 0; i < breakpoints_.size(); ++i)
    breakpoints_[i] = mel_lo + (mel_hi - mel_lo) * double(i) / double(n_mels + 1);

  const int bins = n_bins();
  weights_.assign(std::size_t(n_mels) * std::size_t(bins), 0.0);
  support_.assign(std::size_t(n_mels), {0, 0});
  for (int m = 0; m < n_mels; ++m) {
    const double lo = mel_to_hz(breakpoints_[std::size_t(m)]);
    const double mid = mel_to_hz(breakpoints_[std::size_t(m) + 1]);
    const double hi = mel_to_hz(breakpoints_[std::size_t(m) + 2]);
    double peak = 0.0;
    int first = bins, last = 0;
    for (int k = 0; k < bins; ++k) {
      const double f = double(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      if (w > 0.0) {
        first = std::min(first, k);
        last = std::max(last, k + 1);
      }
      weights_[std::size_t(m) * std::size_t(bins) + std::size_t(k)] = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0)
      throw ConfigError("mel band " + std::to_string(m) + " covers no FFT bin; use fewer bands");
    for (int k = 0; k < bins; ++k) weights_[std::size_t(m) * std::size_t(bins) + std::size_t(k)] /= peak;
    support_[std::size_t(m)] = {first, last};
  }
}

int MelFilterbank::nearest_band(double hz) const {
  int best = 0;
  double best_d = std::abs(center_hz(0) - hz);
  for (int m = 1; m < n_mels_; ++m) {
    const double d = std::abs(center_hz(m) - hz);
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

struct LogMelExtractor::Plan {
  fftw_plan plan = nullptr;
  ~Plan() {
    if (plan) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

LogMelExtractor::LogMelExtractor(MelFilterbank filterbank, int hop)
    : filterbank_(std::move(filterbank)), hop_(hop), plan_(std::make_unique<Plan>()) {
  if (hop < 1) throw ConfigError("hop size must be positive");
  const int n = filterbank_.n_fft();
  window_.resize(std::size_t(n));
  // Periodic Hann.
  for (int i = 0; i < n; ++i)
    window_[std::size_t(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);

  FftwBuffer in(sizeof(double) * std::size_t(n));
  FftwBuffer out(sizeof(fftw_complex) * std::size_t(n / 2 + 1));
  std::lock_guard lock(planner_mutex());
  plan_->plan = fftw_plan_dft_r2c_1d(n, static_cast<double*>(in.ptr),
                                     static_cast<fftw_complex*>(out.ptr), FFTW_ESTIMATE);
  if (!plan_->plan) throw ConfigError("FFTW could not create a plan");
}

LogMelExtractor::~LogMelExtractor() = default;

std::vector<double> LogMelExtractor::power_spectrum(std::span<const double> frame) const {
  const int n = filterbank_.n_fft();
  if (frame.size() != std::size_t(n)) throw ContractViolation("frame length must equal the FFT size");
  FftwBuffer in(sizeof(double) * std::size_t(n));
  FftwBuffer out(sizeof(fftw_complex) * std::size_t(n / 2 + 1));
  auto* x = static_cast<double*>(in.ptr);
  auto* spec = static_cast<fftw_complex*>(out.ptr);
  for (int i = 0; i < n; ++i) x[i] = frame[std::size_t(i)] * window_[std::size_t(i)];
  fftw_execute_dft_r2c(plan_->plan, x, spec);
  std::vector<double> power(std::size_t(n / 2 + 1));
  for (std::size_t k = 0; k < power.size(); ++k)
    power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
  return power;
}

FeatureMatrix LogMelExtractor::compute(std::span<const double> samples) const {
  const int n = filterbank_.n_fft();
  const std::size_t frames = frame_count(samples.size(), std::size_t(n), std::size_t(hop_));
  if (frames == 0) throw ContractViolation("need at least one full frame of samples");

  const int bands = filterbank_.n_mels();
  FeatureMatrix fm;
  fm.mel_bands = bands;
  fm.frames = frames;
  fm.values.assign(std::size_t(bands) * frames, 0.0);

  FftwBuffer in(sizeof(double) * std::size_t(n));
  FftwBuffer out(sizeof(fftw_complex) * std::size_t(n / 2 + 1));
  auto* x = static_cast<double*>(in.ptr);
  auto* spec = static_cast<fftw_complex*>(out.ptr);
  std::vector<double> power(std::size_t(n / 2 + 1));

  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = samples.data() + t * std::size_t(hop_);
    for (int i = 0; i < n; ++i) x[i] = src[i] * window_[std::size_t(i)];
    fftw_execute_dft_r2c(plan_->plan, x, spec);
    for (std::size_t k = 0; k < power.size(); ++k)
      power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    for (int m = 0; m < bands; ++m) {
      const auto [first, last] = filterbank_.support(m);
      const auto row = filterbank_.row(m);
      double e = 0.0;
      for (int k = first; k < last; ++k) e += row[std::size_t(k)] * power[std::size_t(k)];
      fm.at(m, t) = std::log10(std::max(e, kLogFloor));
    }
  }
  return fm;
}

const LogMelExtractor& default_extractor() {
  static const LogMelExtractor extractor;
  return extractor;
}

FeatureMatrix log_mel_features(const AudioSegment& seg) {
  return log_mel_features(seg, default_extractor());
}

FeatureMatrix log_mel_features(const AudioSegment& seg, const LogMelExtractor& extractor) {
  if (seg.samples.size() != kSegmentSamples)
    throw ContractViolation("segment must hold " + std::to_string(kSegmentSamples) +
                            " samples, got " + std::to_string(seg.samples.size()));
  return extractor.compute(seg.samples);
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& fm) {
  out << "melspec " << fm.mel_bands << ' ' << fm.frames << '\n';
  char buf[32];
  for (std::size_t t = 0; t < fm.frames; ++t) {
    for (int m = 0; m < fm.mel_bands; ++m) {
      std::snprintf(buf, sizeof buf, "%.17g", fm.at(m, t));
      if (m) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

FeatureMatrix read_feature_matrix(std::istream& in) {
  std::string magic;
  FeatureMatrix fm;
  if (!(in >> magic >> fm.mel_bands >> fm.frames) || magic != "melspec" || fm.mel_bands < 1)
    throw ParseError(1, "expected header 'melspec <bands> <frames>'");
  fm.values.assign(std::size_t(fm.mel_bands) * fm.frames, 0.0);
  for (std::size_t t = 0; t < fm.frames; ++t)
    for (int m = 0; m < fm.mel_bands; ++m)
      if (!(in >> fm.at(m, t))) throw ParseError(t + 2, "matrix row is short or malformed");
  return fm;
}

}  // namespace nels
