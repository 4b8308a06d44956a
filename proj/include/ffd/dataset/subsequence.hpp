#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/labels.hpp"
#include "ffd/dataset/frame.hpp"

namespace ffd {

inline constexpr std::size_t kFramesPerSubsequence = 8;

class InsufficientFramesError : public DataError {
 public:
  InsufficientFramesError(const std::string& subject, std::size_t frames)
      : DataError("insufficient frames for subject '" + subject + "': " +
                  std::to_string(frames) + " < " +
                  std::to_string(kFramesPerSubsequence)),
        subject_id(subject),
        frame_count(frames) {}

  std::string subject_id;
  std::size_t frame_count;
};

// Eight consecutive frames of one eye stream. Frames are shared between the
// overlapping windows of a subject, so a window is cheap to copy.
struct SubSequence {
  std::array<std::shared_ptr<const Frame>, kFramesPerSubsequence> frames;
  ClassLabel label = ClassLabel::control;
  std::string subject_id;
  std::size_t start_index = 1;
};

// Sliding window with stride 1: window i covers frames [F_i, F_{i+7}], so a
// stream of N frames gives N - 7 windows.
inline std::vector<SubSequence> build_subsequences(std::vector<Frame> frames,
                                                   ClassLabel label,
                                                   const std::string& subject_id) {
  if (frames.size() < kFramesPerSubsequence)
    throw InsufficientFramesError(subject_id, frames.size());

  std::vector<std::shared_ptr<const Frame>> shared;
  shared.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].pixels.size() != kFrameBytes)
      throw ShapeError("subject '" + subject_id + "' frame " + std::to_string(k + 1) +
                       " is not 140x210x3");
    if (frames[k].source_index != frames.front().source_index + k)
      throw InvalidArgument("subject '" + subject_id +
                            "' frames are not consecutive at position " +
                            std::to_string(k + 1));
    shared.push_back(std::make_shared<const Frame>(std::move(frames[k])));
  }

  std::vector<SubSequence> out;
  out.reserve(shared.size() - kFramesPerSubsequence + 1);
  for (std::size_t i = 0; i + kFramesPerSubsequence <= shared.size(); ++i) {
    SubSequence s;
    for (std::size_t j = 0; j < kFramesPerSubsequence; ++j) s.frames[j] = shared[i + j];
    s.label = label;
    s.subject_id = subject_id;
    s.start_index = shared[i]->source_index;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ffd
