#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/labels.hpp"
#include "ffd/dataset/frame.hpp"
#include "ffd/synth/dynamics.hpp"

namespace ffd::synth {

inline constexpr std::size_t kRawHeight = 360;
inline constexpr std::size_t kRawWidth = 630;
inline constexpr std::size_t kMinFrames = 75;
inline constexpr std::size_t kMaxFrames = 150;
inline constexpr double kFps = 15.0;
inline constexpr std::size_t kBlinkFrames = 2;

struct SyntheticSubjectSpec {
  std::string subject_id;
  ClassLabel label = ClassLabel::control;
  std::size_t frame_count = 100;
  double fps = kFps;
  std::uint64_t seed = 0;
};

// Per-frame ground truth behind the rendering.
struct FrameState {
  double pupil_radius = 0;
  bool blink = false;
};

inline void validate(const SyntheticSubjectSpec& spec) {
  if (spec.frame_count < kMinFrames || spec.frame_count > kMaxFrames)
    throw InvalidArgument("synthetic subject '" + spec.subject_id + "': frame count " +
                          std::to_string(spec.frame_count) + " outside [75, 150]");
  if (spec.fps != kFps) throw InvalidArgument("synthetic capture runs at 15 fps");
}

// r(t) = baseline + amplitude * sin(2 pi f t / fps) + noise, with blink
// episodes started at rate blink_rate and lasting kBlinkFrames frames.
inline std::vector<FrameState> generate_trace(const SyntheticSubjectSpec& spec,
                                              const ClassDynamics& dyn) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, dyn.noise_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double blink_p = dyn.blink_rate / spec.fps;

  std::vector<FrameState> trace(spec.frame_count);
  std::size_t blink_left = 0;
  for (std::size_t k = 0; k < spec.frame_count; ++k) {
    const double t = static_cast<double>(k);
    double r = dyn.baseline_pupil_radius +
               dyn.oscillation_amplitude *
                   std::sin(2.0 * std::numbers::pi * dyn.oscillation_frequency * t / spec.fps) +
               noise(rng);
    trace[k].pupil_radius =
        std::clamp(r, EyeGeometry::min_pupil_radius, EyeGeometry::max_pupil_radius);
    const double u = unit(rng);
    if (blink_left == 0 && u < blink_p) blink_left = kBlinkFrames;
    if (blink_left > 0) {
      trace[k].blink = true;
      --blink_left;
    }
  }
  return trace;
}

// Concentric sclera / iris / pupil discs with one-pixel anti-aliased edges.
// Grey levels are replicated into all three channels.
inline RawImage render_frame(const FrameState& state) {
  RawImage img(kRawHeight, kRawWidth, 3, static_cast<std::uint8_t>(EyeGeometry::skin));
  if (state.blink) return img;

  auto coverage = [](double radius, double dist) {
    return std::clamp(radius - dist + 0.5, 0.0, 1.0);
  };
  for (std::size_t y = 0; y < kRawHeight; ++y) {
    const double dy = static_cast<double>(y) + 0.5 - EyeGeometry::center_y;
    for (std::size_t x = 0; x < kRawWidth; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - EyeGeometry::center_x;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > EyeGeometry::sclera_radius + 1.0) continue;
      double v = EyeGeometry::skin;
      v += (EyeGeometry::sclera - v) * coverage(EyeGeometry::sclera_radius, d);
      v += (EyeGeometry::iris - v) * coverage(EyeGeometry::iris_radius, d);
      v += (EyeGeometry::pupil - v) * coverage(state.pupil_radius, d);
      const auto g = static_cast<std::uint8_t>(std::lround(v));
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = g;
    }
  }
  return img;
}

inline std::vector<RawImage> generate_sequence(const SyntheticSubjectSpec& spec,
                                               const ClassDynamics& dyn) {
  const auto trace = generate_trace(spec, dyn);
  std::vector<RawImage> frames;
  frames.reserve(trace.size());
  for (const auto& s : trace) frames.push_back(render_frame(s));
  return frames;
}

inline std::vector<RawImage> generate_sequence(const SyntheticSubjectSpec& spec) {
  return generate_sequence(spec, default_dynamics(spec.label));
}

}  // namespace ffd::synth
