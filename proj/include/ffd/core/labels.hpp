#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ffd/core/error.hpp"

namespace ffd {

// Subject condition. Codes are alphabetical and are what batch files store.
enum class ClassLabel : std::uint8_t { alcohol = 0, control = 1, drug = 2, sleep = 3 };

inline constexpr std::size_t kNumClasses = 4;

inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::alcohol, ClassLabel::control, ClassLabel::drug, ClassLabel::sleep};

inline constexpr std::uint8_t code(ClassLabel label) {
  return static_cast<std::uint8_t>(label);
}

inline constexpr std::string_view name(ClassLabel label) {
  switch (label) {
    case ClassLabel::alcohol: return "alcohol";
    case ClassLabel::control: return "control";
    case ClassLabel::drug: return "drug";
    case ClassLabel::sleep: return "sleep";
  }
  return "?";
}

inline std::optional<ClassLabel> label_from_code(std::uint8_t value) {
  if (value >= kNumClasses) return std::nullopt;
  return static_cast<ClassLabel>(value);
}

inline ClassLabel label_from_name(std::string_view text) {
  for (auto label : kAllLabels)
    if (name(label) == text) return label;
  throw InvalidArgument("unknown class label '" + std::string(text) + "'");
}

}  // namespace ffd
