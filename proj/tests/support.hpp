#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ffd/dataset/batching.hpp"
#include "ffd/dataset/frame.hpp"
#include "ffd/model/layer_spec.hpp"

namespace ffd::test {

inline PreformedBatch random_batch(std::mt19937_64& rng) {
  PreformedBatch b;
  std::uniform_int_distribution<int> byte(0, 255), label(0, 3);
  for (auto& v : b.data.values()) v = static_cast<std::uint8_t>(byte(rng));
  for (auto& l : b.labels) l = static_cast<ClassLabel>(label(rng));
  return b;
}

inline Frame numbered_frame(std::size_t index) {
  Frame f;
  f.pixels.assign(kFrameBytes, static_cast<std::uint8_t>(index % 251));
  f.source_index = index;
  return f;
}

inline std::vector<Frame> numbered_frames(std::size_t n) {
  std::vector<Frame> out;
  for (std::size_t k = 1; k <= n; ++k) out.push_back(numbered_frame(k));
  return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ffd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Full input resolution with every layer kind but very few units, cheap
// enough to train inside a unit test.
inline model::ModelConfig tiny_config(double batchnorm_momentum = 0.9, double dropout_rate = 0.5) {
  model::ArchitectureParams p;
  p.block1 = 2, p.block2 = 2, p.block3 = 2, p.block4 = 2;
  p.lstm_units = 8;
  p.dense1 = 16, p.dense2 = 8, p.dense3 = 8;
  p.batchnorm_momentum = batchnorm_momentum;
  p.dropout_rate = dropout_rate;
  return model::make_model_config(p);
}

// Every frame of a sub-sequence is a flat grey level set by its class, plus
// per-pixel noise.
inline PreformedBatch class_level_batch(std::mt19937_64& rng,
                                        const std::array<ClassLabel, kSubsequencesPerBatch>& labels) {
  PreformedBatch b;
  b.labels = labels;
  std::uniform_int_distribution<int> noise(-10, 10);
  for (std::size_t s = 0; s < kSubsequencesPerBatch; ++s) {
    const int level = 40 + 50 * code(labels[s]);
    auto* px = b.data.data() + s * kSubsequenceBytes;
    for (std::size_t i = 0; i < kSubsequenceBytes; ++i)
      px[i] = static_cast<std::uint8_t>(level + noise(rng));
  }
  return b;
}

}  // namespace ffd::test
