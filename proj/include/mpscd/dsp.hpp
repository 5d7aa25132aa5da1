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

// Band-pass filtering, Teager-Kaiser energy enhancement and superlet
// time-frequency analysis.

#ifndef MPSCD_DSP_HPP_
#define MPSCD_DSP_HPP_

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mpscd/ingest.hpp"

namespace mpscd {

/// Teager-Kaiser output s_n with the sample rate and time origin of its input.
struct EnhancedSignal {
  Signal values;
  double sample_rate = 0.0;
  double origin_time = 0.0;

  Eigen::Index size() const { return values.size(); }
  double time_at(Eigen::Index i) const {
    return origin_time + static_cast<double>(i) / sample_rate;
  }
  EnhancedSignal slice(Eigen::Index first, Eigen::Index count) const {
    return {values.segment(first, count), sample_rate, time_at(first)};
  }
};

// Transposed direct-form II biquad, a0 normalized to 1.
template <typename Scalar>
struct Biquad {
  Scalar b0, b1, b2, a1, a2;

  Scalar dc_gain() const { return (b0 + b1 + b2) / (Scalar(1) + a1 + a2); }
};

template <typename Scalar>
using SosCascade = std::vector<Biquad<Scalar>>;

// Even-order Butterworth sections via the prewarped bilinear transform.
SosCascade<double> butterworth_lowpass(int order, double cutoff_hz, double sample_rate);
SosCascade<double> butterworth_highpass(int order, double cutoff_hz, double sample_rate);

namespace detail {

template <typename Scalar>
void sos_run(const SosCascade<Scalar>& sos, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  if (x.size() == 0) return;
  // Start every section in the steady state for a constant input equal to
  // the first sample.
  Scalar level = x[0];
  for (const auto& s : sos) {
    const Scalar y_ss = level * s.dc_gain();
    Scalar z2 = s.b2 * level - s.a2 * y_ss;
    Scalar z1 = s.b1 * level - s.a1 * y_ss + z2;
    for (Eigen::Index n = 0; n < x.size(); ++n) {
      const Scalar in = x[n];
      const Scalar out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[n] = out;
    }
    level = y_ss;
  }
}

}  // namespace detail

/// Zero-phase forward-backward application of an SOS cascade. The input is
/// extended at both ends by odd reflection before filtering; the output has
/// the input's length.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> sos_filtfilt(
    const SosCascade<typename Derived::Scalar>& sos, const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = input.size();
  if (n == 0) return Vec();
  const Eigen::Index pad =
      std::min<Eigen::Index>(n - 1, 3 * static_cast<Eigen::Index>(2 * sos.size() + 1));

  Vec ext(n + 2 * pad);
  const Scalar first = input(0);
  const Scalar last = input(n - 1);
  for (Eigen::Index i = 0; i < pad; ++i) {
    ext[i] = Scalar(2) * first - input(pad - i);
    ext[pad + n + i] = Scalar(2) * last - input(n - 2 - i);
  }
  ext.segment(pad, n) = input;

  detail::sos_run(sos, ext);
  ext.reverseInPlace();
  detail::sos_run(sos, ext);
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

/// s_n = y_n^2 - y_{n-1} y_{n+1}; the two boundary samples repeat their
/// nearest interior neighbour.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> teager_kaiser(
    const Eigen::MatrixBase<Derived>& y) {
  const Eigen::Index n = y.size();
  if (n < 3) throw std::invalid_argument("teager_kaiser: need at least 3 samples");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> s(n);
  s.segment(1, n - 2) = y.segment(1, n - 2).array().square() -
                        y.head(n - 2).array() * y.tail(n - 2).array();
  s[0] = s[1];
  s[n - 1] = s[n - 2];
  return s;
}

/// Zero-phase band-pass: high-pass at f_lo cascaded with low-pass at f_hi,
/// each a Butterworth of the given (even) order, run forward and backward.
AudioClip bandpass(const AudioClip& clip, double f_lo, double f_hi, int order = 4);

EnhancedSignal tkeo(const AudioClip& clip);

struct SuperletParams {
  std::vector<double> freqs;  // Hz, strictly increasing
  int base_cycles = 3;
  int order_min = 1;
  int order_max = 16;
  // Target spacing of the output time axis; the effective step is a
  // power-of-two multiple of the sample period no larger than this.
  double time_step = 25e-6;

  /// 1-30 kHz in 250 Hz steps, 3 base cycles, orders 1 to 16.
  static SuperletParams defaults();
  static std::vector<double> frequency_grid(double f_min, double f_max, double f_step);
};

/// power(t, f) in amplitude^2, rows are time and columns are frequency.
struct Spectrogram {
  Eigen::MatrixXd power;
  Eigen::VectorXd time_axis;
  Eigen::VectorXd freq_axis;
  int order_min = 1;
  int order_max = 1;
};

/// Order used at each frequency of the grid: linear in frequency from
/// order_min at the first bin to order_max at the last, rounded.
std::vector<int> superlet_orders(const SuperletParams& params);

/// Time-domain standard deviation of the Gaussian envelope of a wavelet with
/// the given number of cycles at centre frequency f.
double morlet_sigma_t(double cycles, double f);

/// Multiplicative superlet: at each frequency, the geometric mean over
/// orders i = 1..o(f) of |x * psi_{f, i * base_cycles}|^2 where psi is an
/// analytic Morlet wavelet scaled so a unit-amplitude tone yields power 1.
Spectrogram superlet_spectrogram(const AudioClip& segment, const SuperletParams& params);

}  // namespace mpscd

#endif  // MPSCD_DSP_HPP_
