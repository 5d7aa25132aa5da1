/* Copyright 2026 The mpscd Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mpscd/dsp.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace mpscd {
namespace {

constexpr double kPi = std::numbers::pi;
// Gaussian envelope spans +-k_sd standard deviations over the nominal cycles.
constexpr double kMorletSd = 5.0;
constexpr double kLogFloor = 1e-300;
// Spectral half-support of each wavelet in units of its frequency sigma.
constexpr double kGaussReach = 6.0;

void check_butterworth(int order, double cutoff_hz, double sample_rate) {
  if (order <= 0 || order % 2 != 0) throw std::invalid_argument("butterworth: order must be even and > 0");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("butterworth: sample_rate must be > 0");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate)) {
    throw std::invalid_argument("butterworth: cutoff must lie in (0, Nyquist)");
  }
}

// Quality factor of the k-th conjugate pole pair of an analog Butterworth.
double pole_pair_q(int order, int k) {
  return 1.0 / (2.0 * std::sin((2.0 * k + 1.0) * kPi / (2.0 * order)));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

SosCascade<double> butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
  check_butterworth(order, cutoff_hz, sample_rate);
  const double k = std::tan(kPi * cutoff_hz / sample_rate);
  SosCascade<double> sos;
  for (int i = 0; i < order / 2; ++i) {
    const double q = pole_pair_q(order, i);
    const double norm = 1.0 / (1.0 + k / q + k * k);
    const double b0 = k * k * norm;
    sos.push_back({b0, 2.0 * b0, b0, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm});
  }
  return sos;
}

SosCascade<double> butterworth_highpass(int order, double cutoff_hz, double sample_rate) {
  check_butterworth(order, cutoff_hz, sample_rate);
  const double k = std::tan(kPi * cutoff_hz / sample_rate);
  SosCascade<double> sos;
  for (int i = 0; i < order / 2; ++i) {
    const double q = pole_pair_q(order, i);
    const double norm = 1.0 / (1.0 + k / q + k * k);
    sos.push_back({norm, -2.0 * norm, norm, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm});
  }
  return sos;
}

AudioClip bandpass(const AudioClip& clip, double f_lo, double f_hi, int order) {
  const double nyquist = 0.5 * clip.sample_rate;
  if (!(f_lo > 0.0) || !(f_lo < f_hi) || !(f_hi < nyquist)) {
    throw std::invalid_argument("bandpass: require 0 < f_lo < f_hi < Nyquist");
  }
  SosCascade<double> sos = butterworth_highpass(order, f_lo, clip.sample_rate);
  const auto lp = butterworth_lowpass(order, f_hi, clip.sample_rate);
  sos.insert(sos.end(), lp.begin(), lp.end());

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.origin_time = clip.origin_time;
  out.samples = sos_filtfilt(sos, clip.samples);
  return out;
}

EnhancedSignal tkeo(const AudioClip& clip) {
  if (clip.size() < 3) throw std::invalid_argument("tkeo: need at least 3 samples");
  return {teager_kaiser(clip.samples), clip.sample_rate, clip.origin_time};
}

SuperletParams SuperletParams::defaults() {
  SuperletParams p;
  p.freqs = frequency_grid(1000.0, 30000.0, 250.0);
  return p;
}

std::vector<double> SuperletParams::frequency_grid(double f_min, double f_max, double f_step) {
  if (!(f_min > 0.0) || !(f_step > 0.0) || f_max < f_min) {
    throw std::invalid_argument("frequency_grid: require 0 < f_min <= f_max and f_step > 0");
  }
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((f_max - f_min) / f_step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(f_min + static_cast<double>(i) * f_step);
  return out;
}

std::vector<int> superlet_orders(const SuperletParams& params) {
  const std::size_t n = params.freqs.size();
  std::vector<int> orders(n, params.order_min);
  if (n < 2) return orders;
  const double f0 = params.freqs.front();
  const double span = params.freqs.back() - f0;
  for (std::size_t j = 0; j < n; ++j) {
    const double frac = (params.freqs[j] - f0) / span;
    orders[j] = static_cast<int>(
        std::lround(params.order_min + frac * (params.order_max - params.order_min)));
  }
  return orders;
}

double morlet_sigma_t(double cycles, double f) { return cycles / (2.0 * kMorletSd * f); }

Spectrogram superlet_spectrogram(const AudioClip& segment, const SuperletParams& params) {
  if (params.freqs.empty()) throw std::invalid_argument("superlet_spectrogram: empty frequency grid");
  if (params.order_min < 1 || params.order_max < params.order_min) {
    throw std::invalid_argument("superlet_spectrogram: require 1 <= order_min <= order_max");
  }
  if (params.base_cycles < 1) throw std::invalid_argument("superlet_spectrogram: base_cycles must be >= 1");
  const double fs = segment.sample_rate;
  const double nyquist = 0.5 * fs;
  for (std::size_t j = 0; j < params.freqs.size(); ++j) {
    const double f = params.freqs[j];
    if (!(f > 0.0) || !(f < nyquist)) {
      throw std::invalid_argument("superlet_spectrogram: frequencies must lie in (0, Nyquist)");
    }
    if (j > 0 && !(f > params.freqs[j - 1])) {
      throw std::invalid_argument("superlet_spectrogram: frequencies must be strictly increasing");
    }
  }
  const Eigen::Index n = segment.size();
  if (n == 0) throw std::invalid_argument("superlet_spectrogram: empty segment");

  const std::vector<int> orders = superlet_orders(params);

  // Trailing zero padding must absorb the widest wavelet so the circular
  // convolution never wraps signal onto any output row.
  double widest = 0.0;
  for (std::size_t j = 0; j < params.freqs.size(); ++j) {
    widest = std::max(widest, morlet_sigma_t(orders[j] * params.base_cycles, params.freqs[j]));
  }
  const auto guard = static_cast<std::size_t>(std::ceil(6.0 * widest * fs));
  const std::size_t nfft = next_pow2(static_cast<std::size_t>(n) + guard);

  std::size_t decim = 1;
  while (2 * decim <= static_cast<std::size_t>(params.time_step * fs) && 2 * decim <= nfft / 8) decim *= 2;
  const std::size_t nout_fft = nfft / decim;
  const auto n_time = static_cast<Eigen::Index>((static_cast<std::size_t>(n) + decim - 1) / decim);

  std::vector<double> padded(nfft, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = segment.samples[i];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);

  Spectrogram out;
  out.order_min = params.order_min;
  out.order_max = params.order_max;
  out.freq_axis = Eigen::Map<const Eigen::VectorXd>(params.freqs.data(),
                                                    static_cast<Eigen::Index>(params.freqs.size()));
  out.time_axis.resize(n_time);
  for (Eigen::Index m = 0; m < n_time; ++m) {
    out.time_axis[m] = segment.origin_time + static_cast<double>(m) * static_cast<double>(decim) / fs;
  }
  out.power.resize(n_time, static_cast<Eigen::Index>(params.freqs.size()));

  const double df = fs / static_cast<double>(nfft);
  const std::size_t half = nfft / 2;
  std::vector<std::complex<double>> folded(nout_fft);
  std::vector<std::complex<double>> response;
  Eigen::VectorXd log_sum(n_time);
  // inv() divides by nout_fft; the full-length inverse would divide by nfft.
  const double scale = 1.0 / static_cast<double>(decim);

  for (std::size_t j = 0; j < params.freqs.size(); ++j) {
    const double f = params.freqs[j];
    const int order = orders[j];
    log_sum.setZero();
    for (int i = 1; i <= order; ++i) {
      const double sigma_f = 1.0 / (2.0 * kPi * morlet_sigma_t(i * params.base_cycles, f));
      const auto k_lo = static_cast<std::size_t>(std::max(1.0, std::floor((f - kGaussReach * sigma_f) / df)));
      const auto k_hi = std::min(half, static_cast<std::size_t>(std::ceil((f + kGaussReach * sigma_f) / df)));
      std::fill(folded.begin(), folded.end(), std::complex<double>(0.0, 0.0));
      // Gaussian weights on the uniform bin grid by ratio recurrence:
      // g_{k+1} = g_k r_k and r_{k+1} = r_k exp(-step^2).
      const double step = df / sigma_f;
      const double d0 = (static_cast<double>(k_lo) * df - f) / sigma_f;
      double g = 2.0 * std::exp(-0.5 * d0 * d0);
      double r = std::exp(-(d0 * step + 0.5 * step * step));
      const double rr = std::exp(-step * step);
      for (std::size_t k = k_lo; k <= k_hi; ++k) {
        folded[k % nout_fft] += spectrum[k] * g;
        g *= r;
        r *= rr;
      }
      fft.inv(response, folded);
      for (Eigen::Index m = 0; m < n_time; ++m) {
        const double p = std::norm(response[static_cast<std::size_t>(m)] * scale);
        log_sum[m] += std::log(std::max(p, kLogFloor));
      }
    }
    out.power.col(static_cast<Eigen::Index>(j)) = (log_sum / static_cast<double>(order)).array().exp();
  }
  return out;
}

}  // namespace mpscd
