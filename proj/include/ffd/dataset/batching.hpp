#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/labels.hpp"
#include "ffd/core/tensor.hpp"
#include "ffd/dataset/subsequence.hpp"

namespace ffd {

inline constexpr std::size_t kSubsequencesPerBatch = 8;
inline const Shape kBatchShape = {kSubsequencesPerBatch, kFramesPerSubsequence,
                                  kFrameHeight, kFrameWidth, kChannels};
inline constexpr std::size_t kSubsequenceBytes = kFramesPerSubsequence * kFrameBytes;
inline constexpr std::size_t kBatchTensorBytes = kSubsequencesPerBatch * kSubsequenceBytes;

// Eight labelled sub-sequences packed as one 8x8x140x210x3 tensor.
struct PreformedBatch {
  Tensor<std::uint8_t> data{kBatchShape};
  std::array<ClassLabel, kSubsequencesPerBatch> labels{};

  friend bool operator==(const PreformedBatch&, const PreformedBatch&) = default;
};

// Throws ShapeError unless the batch has the fixed 5D shape.
inline void check_batch(const PreformedBatch& batch) {
  if (batch.data.shape() != kBatchShape)
    throw ShapeError("batch tensor must be 8x8x140x210x3, got " +
                     to_string(batch.data.shape()));
}

// Which sub-sequence goes into which slot of which batch.
struct BatchPlan {
  std::vector<std::array<std::size_t, kSubsequencesPerBatch>> groups;
  std::size_t dropped = 0;
};

// Shuffles indices 0..count-1 under `seed` and cuts them into runs of 8. The
// trailing remainder is dropped.
inline BatchPlan plan_batches(std::size_t count, std::uint64_t seed) {
  if (count < kSubsequencesPerBatch)
    throw DataError("need at least 8 sub-sequences to form a batch, got " +
                    std::to_string(count));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  BatchPlan plan;
  const std::size_t full = count / kSubsequencesPerBatch;
  plan.groups.resize(full);
  for (std::size_t b = 0; b < full; ++b)
    for (std::size_t s = 0; s < kSubsequencesPerBatch; ++s)
      plan.groups[b][s] = order[b * kSubsequencesPerBatch + s];
  plan.dropped = count - full * kSubsequencesPerBatch;
  return plan;
}

inline PreformedBatch assemble_batch(
    const std::vector<SubSequence>& subsequences,
    const std::array<std::size_t, kSubsequencesPerBatch>& slots) {
  PreformedBatch batch;
  std::uint8_t* out = batch.data.data();
  for (std::size_t s = 0; s < kSubsequencesPerBatch; ++s) {
    const auto& sub = subsequences.at(slots[s]);
    for (std::size_t f = 0; f < kFramesPerSubsequence; ++f) {
      const auto& px = sub.frames[f]->pixels;
      std::memcpy(out + (s * kFramesPerSubsequence + f) * kFrameBytes, px.data(),
                  kFrameBytes);
    }
    batch.labels[s] = sub.label;
  }
  return batch;
}

struct BatchFormation {
  std::vector<PreformedBatch> batches;
  std::size_t dropped = 0;
};

// Materialises every batch in memory. Large datasets should stream through
// plan_batches + assemble_batch instead.
inline BatchFormation form_batches(const std::vector<SubSequence>& subsequences,
                                   std::uint64_t seed) {
  const auto plan = plan_batches(subsequences.size(), seed);
  BatchFormation out;
  out.dropped = plan.dropped;
  out.batches.reserve(plan.groups.size());
  for (const auto& group : plan.groups) out.batches.push_back(assemble_batch(subsequences, group));
  return out;
}

}  // namespace ffd
