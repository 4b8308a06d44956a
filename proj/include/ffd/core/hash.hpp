#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace ffd {

// 64-bit FNV-1a. Used for run-directory names and content digests, not for
// anything security related.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << state_;
    return os.str();
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) { return Fnv1a().update(s).value(); }

}  // namespace ffd
