#pragma once

#include "ffd/core/labels.hpp"

namespace ffd::synth {

// Pupil behaviour of one synthetic condition. Radii are in pixels of the
// 360x630 raw frame.
struct ClassDynamics {
  double baseline_pupil_radius = 0;
  double oscillation_amplitude = 0;
  double oscillation_frequency = 0;  // Hz
  double blink_rate = 0;             // events per second
  double noise_std = 0;

  friend bool operator==(const ClassDynamics&, const ClassDynamics&) = default;
};

// Fixed eye layout shared by all classes.
struct EyeGeometry {
  static constexpr double center_y = 180.0;
  static constexpr double center_x = 315.0;
  static constexpr double sclera_radius = 165.0;
  static constexpr double iris_radius = 110.0;
  static constexpr double min_pupil_radius = 4.0;
  static constexpr double max_pupil_radius = iris_radius - 4.0;

  static constexpr int skin = 150;
  static constexpr int sclera = 215;
  static constexpr int iris = 95;
  static constexpr int pupil = 15;
};

//            baseline  amplitude  freq   blink/s  noise
//  alcohol      58         5      0.6     0.20     0.8
//  control      34         3      1.0     0.30     0.8
//  drug         72         6      1.4     0.15     0.8
//  sleep        46         5      0.7     0.60     0.8
//
// Baselines are 12-14 px apart, so window means never overlap even at full
// oscillation amplitude.
inline ClassDynamics default_dynamics(ClassLabel label) {
  switch (label) {
    case ClassLabel::alcohol: return {58.0, 5.0, 0.6, 0.20, 0.8};
    case ClassLabel::control: return {34.0, 3.0, 1.0, 0.30, 0.8};
    case ClassLabel::drug: return {72.0, 6.0, 1.4, 0.15, 0.8};
    case ClassLabel::sleep: return {46.0, 5.0, 0.7, 0.60, 0.8};
  }
  return {};
}

}  // namespace ffd::synth
